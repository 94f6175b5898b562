#pragma once

#include <string>
#include <vector>

namespace mmflat {

/// Norm on R^n, either an l_p tag or ||x|| = |Ax|_2 for an invertible A.
struct NormModel {
  enum class Kind { Lp, Matrix };
  Kind kind = Kind::Lp;
  int n = 1;
  double p = 2.0;
  double scale = 1.0;     // scalar multiplier (fitted for l_p dictionary entries)
  std::vector<double> A;  // n*n row-major when kind == Matrix

  double operator()(const std::vector<double>& x) const;
  std::string tag() const;

  static NormModel lp(int n, double p);
  static NormModel matrix(int n, std::vector<double> A);
  static NormModel euclidean(int n) { return lp(n, 2.0); }
};

/// The closed search dictionary: l_p for p in {1, 3/2, 2, 3, inf}.
std::vector<NormModel> norm_dictionary(int n);

/// Pair sample (dx in R^n, target distance d(g(x), g(y))).
struct PairSample {
  std::vector<double> dx;
  double target = 0.0;
};

/// Least-squares Gram fit (PSD-projected) followed by coordinate descent on A
/// minimizing the max pair defect. Returns the fitted ||A.||_2 model.
NormModel fit_matrix_norm(const std::vector<PairSample>& pairs, int n);

/// Max over pairs of | target - ||dx|| |.
double max_pair_defect(const NormModel& norm, const std::vector<PairSample>& pairs);

// Small dense helpers (n <= 3) shared by the coefficient searches.
namespace linalg {
/// Solves the k x k system M x = b in place by Gaussian elimination with
/// partial pivoting; throws std::runtime_error on (near-)singular M.
std::vector<double> solve(std::vector<double> M, std::vector<double> b, int k);
/// Jacobi eigen-decomposition of a symmetric n x n matrix; eigenvalues
/// ascending, eigenvectors in columns of V (row-major).
void sym_eigen(const std::vector<double>& M, int n, std::vector<double>& eigvals,
               std::vector<double>& V);
double det(const std::vector<double>& A, int n);
}  // namespace linalg

}  // namespace mmflat
