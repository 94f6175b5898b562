#include "mmflat/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mmflat {

double NormModel::operator()(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != n) throw std::domain_error("norm dimension mismatch");
  if (kind == Kind::Lp) {
    if (std::isinf(p)) {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::abs(v));
      return scale * m;
    }
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v), p);
    return scale * std::pow(s, 1.0 / p);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += A[static_cast<std::size_t>(i * n + j)] * x[static_cast<std::size_t>(j)];
    s += row * row;
  }
  return scale * std::sqrt(s);
}

std::string NormModel::tag() const {
  if (kind == Kind::Matrix) return "fitA";
  if (std::isinf(p)) return "linf";
  if (p == 1.5) return "l3/2";
  return "l" + std::to_string(static_cast<int>(p));
}

NormModel NormModel::lp(int n, double p) {
  NormModel m;
  m.kind = Kind::Lp;
  m.n = n;
  m.p = p;
  return m;
}

NormModel NormModel::matrix(int n, std::vector<double> A) {
  NormModel m;
  m.kind = Kind::Matrix;
  m.n = n;
  m.A = std::move(A);
  return m;
}

std::vector<NormModel> norm_dictionary(int n) {
  std::vector<NormModel> d;
  for (double p : {1.0, 1.5, 2.0, 3.0, std::numeric_limits<double>::infinity()})
    d.push_back(NormModel::lp(n, p));
  return d;
}

double max_pair_defect(const NormModel& norm, const std::vector<PairSample>& pairs) {
  double worst = 0.0;
  for (const PairSample& s : pairs) worst = std::max(worst, std::abs(s.target - norm(s.dx)));
  return worst;
}

namespace linalg {

std::vector<double> solve(std::vector<double> M, std::vector<double> b, int k) {
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(M[static_cast<std::size_t>(r * k + col)]) >
          std::abs(M[static_cast<std::size_t>(piv * k + col)]))
        piv = r;
    if (std::abs(M[static_cast<std::size_t>(piv * k + col)]) < 1e-14)
      throw std::runtime_error("singular system in norm fit");
    if (piv != col) {
      for (int c = 0; c < k; ++c)
        std::swap(M[static_cast<std::size_t>(piv * k + c)], M[static_cast<std::size_t>(col * k + c)]);
      std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(col)]);
    }
    const double d = M[static_cast<std::size_t>(col * k + col)];
    for (int r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = M[static_cast<std::size_t>(r * k + col)] / d;
      for (int c = col; c < k; ++c)
        M[static_cast<std::size_t>(r * k + c)] -= f * M[static_cast<std::size_t>(col * k + c)];
      b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    x[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)] / M[static_cast<std::size_t>(i * k + i)];
  return x;
}

void sym_eigen(const std::vector<double>& Min, int n, std::vector<double>& eigvals,
               std::vector<double>& V) {
  std::vector<double> M = Min;
  V.assign(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) V[static_cast<std::size_t>(i * n + i)] = 1.0;
  auto at = [&](std::vector<double>& X, int r, int c) -> double& {
    return X[static_cast<std::size_t>(r * n + c)];
  };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += at(M, p, q) * at(M, p, q);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(at(M, p, q)) < 1e-15) continue;
        const double theta = 0.5 * std::atan2(2.0 * at(M, p, q), at(M, q, q) - at(M, p, p));
        const double c = std::cos(theta), s = std::sin(theta);
        for (int i = 0; i < n; ++i) {
          const double mip = at(M, i, p), miq = at(M, i, q);
          at(M, i, p) = c * mip - s * miq;
          at(M, i, q) = s * mip + c * miq;
        }
        for (int i = 0; i < n; ++i) {
          const double mpi = at(M, p, i), mqi = at(M, q, i);
          at(M, p, i) = c * mpi - s * mqi;
          at(M, q, i) = s * mpi + c * mqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = at(V, i, p), viq = at(V, i, q);
          at(V, i, p) = c * vip - s * viq;
          at(V, i, q) = s * vip + c * viq;
        }
      }
  }
  eigvals.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) eigvals[static_cast<std::size_t>(i)] = M[static_cast<std::size_t>(i * n + i)];
  // Sort ascending, permuting eigenvector columns alongside.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return eigvals[static_cast<std::size_t>(a)] < eigvals[static_cast<std::size_t>(b)];
  });
  std::vector<double> ev = eigvals, Vv = V;
  for (int i = 0; i < n; ++i) {
    eigvals[static_cast<std::size_t>(i)] = ev[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    for (int r = 0; r < n; ++r)
      V[static_cast<std::size_t>(r * n + i)] =
          Vv[static_cast<std::size_t>(r * n + order[static_cast<std::size_t>(i)])];
  }
}

double det(const std::vector<double>& A, int n) {
  if (n == 1) return A[0];
  if (n == 2) return A[0] * A[3] - A[1] * A[2];
  if (n == 3)
    return A[0] * (A[4] * A[8] - A[5] * A[7]) - A[1] * (A[3] * A[8] - A[5] * A[6]) +
           A[2] * (A[3] * A[7] - A[4] * A[6]);
  throw std::domain_error("det supports n <= 3");
}

}  // namespace linalg

NormModel fit_matrix_norm(const std::vector<PairSample>& pairs, int n) {
  if (pairs.empty()) throw std::domain_error("no pairs to fit");
  // Least squares for the Gram matrix M = A^T A on dx^T M dx = target^2.
  const int k = n * (n + 1) / 2;
  std::vector<double> ATA(static_cast<std::size_t>(k * k), 0.0);
  std::vector<double> ATb(static_cast<std::size_t>(k), 0.0);
  std::vector<double> feat(static_cast<std::size_t>(k));
  for (const PairSample& s : pairs) {
    int f = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        feat[static_cast<std::size_t>(f++)] =
            (a == b ? 1.0 : 2.0) * s.dx[static_cast<std::size_t>(a)] * s.dx[static_cast<std::size_t>(b)];
    const double y = s.target * s.target;
    for (int i = 0; i < k; ++i) {
      ATb[static_cast<std::size_t>(i)] += feat[static_cast<std::size_t>(i)] * y;
      for (int j = 0; j < k; ++j)
        ATA[static_cast<std::size_t>(i * k + j)] +=
            feat[static_cast<std::size_t>(i)] * feat[static_cast<std::size_t>(j)];
    }
  }
  std::vector<double> m;
  try {
    m = linalg::solve(ATA, ATb, k);
  } catch (const std::runtime_error&) {
    m.assign(static_cast<std::size_t>(k), 0.0);  // fall back to the PSD floor below
  }
  std::vector<double> M(static_cast<std::size_t>(n * n), 0.0);
  int f = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      M[static_cast<std::size_t>(a * n + b)] = m[static_cast<std::size_t>(f)];
      M[static_cast<std::size_t>(b * n + a)] = m[static_cast<std::size_t>(f)];
      ++f;
    }
  // PSD projection: clamp eigenvalues, rebuild A = sqrt(L) V^T.
  std::vector<double> lam, V;
  linalg::sym_eigen(M, n, lam, V);
  double scale = 0.0;
  for (double l : lam) scale = std::max(scale, std::abs(l));
  const double floor = std::max(scale, 1.0) * 1e-10;
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) {
    const double s = std::sqrt(std::max(lam[static_cast<std::size_t>(i)], floor));
    for (int j = 0; j < n; ++j)
      A[static_cast<std::size_t>(i * n + j)] = s * V[static_cast<std::size_t>(j * n + i)];
  }
  NormModel model = NormModel::matrix(n, A);
  // Coordinate descent on the entries of A against the max pair defect.
  double best = max_pair_defect(model, pairs);
  double step = 0.1 * std::sqrt(std::max(scale, 1e-12));
  for (int round = 0; round < 24 && step > 1e-9; ++round) {
    bool improved = false;
    for (int e = 0; e < n * n; ++e)
      for (double dir : {+1.0, -1.0}) {
        NormModel trial = model;
        trial.A[static_cast<std::size_t>(e)] += dir * step;
        const double v = max_pair_defect(trial, pairs);
        if (v < best - 1e-15) {
          best = v;
          model = trial;
          improved = true;
        }
      }
    if (!improved) step *= 0.5;
  }
  return model;
}

}  // namespace mmflat
