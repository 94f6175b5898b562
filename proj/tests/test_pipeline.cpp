#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mmflat/pipeline.hpp"

using namespace mmflat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig small_config(const std::string& out) {
  PipelineConfig cfg;
  cfg.gen.kind = SpaceKind::Segment;
  cfg.gen.spacing = 0.01;
  cfg.coefficients = {"osc"};
  cfg.eps_list = {0.1, 0.3};
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("pipeline writes the full artifact set and succeeds") {
  const std::string out = "pipe_out";
  fs::remove_all(out);
  CHECK(run_pipeline(small_config(out)) == 0);
  for (const char* f : {"space.json", "tree.json", "osc.csv", "osc.json", "osc.svg",
                        "packing_osc_0.100000.csv", "packing_osc_0.100000.json",
                        "packing_osc_0.300000.csv", "packing_osc_0.300000.json",
                        "summary.json"})
    CHECK(fs::exists(fs::path(out) / f));
  CHECK_FALSE(fs::exists(fs::path(out) / "error.json"));
  const std::string summary = slurp(fs::path(out) / "summary.json");
  CHECK(summary.find("\"axioms_ok\": true") != std::string::npos);
  CHECK(summary.find("\"verdict\"") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("pipeline reruns are byte-identical") {
  const std::string a = "pipe_det_a", b = "pipe_det_b";
  fs::remove_all(a);
  fs::remove_all(b);
  REQUIRE(run_pipeline(small_config(a)) == 0);
  REQUIRE(run_pipeline(small_config(b)) == 0);
  for (const char* f : {"summary.json", "osc.csv", "tree.json"})
    CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("invalid parameters fail fast with an error report") {
  const std::string out = "pipe_bad";
  fs::remove_all(out);
  PipelineConfig cfg = small_config(out);
  cfg.rho = 2.0;
  CHECK(run_pipeline(cfg) == 2);
  const std::string err = slurp(fs::path(out) / "error.json");
  CHECK(err.find("validate") != std::string::npos);
  CHECK(err.find("rho") != std::string::npos);
  fs::remove_all(out);

  PipelineConfig unknown = small_config(out);
  unknown.coefficients = {"bogus"};
  CHECK(run_pipeline(unknown) == 2);
  fs::remove_all(out);
}

TEST_CASE("config loading maps json keys onto the pipeline") {
  const std::string path = "pipe_cfg.json";
  {
    std::ofstream out(path);
    out << R"({"generator": {"kind": "circle", "spacing": 0.05, "radius": 2.0},
               "tree": {"rho": 0.3, "c0": 0.01},
               "coefficients": ["osc", "alpha"],
               "eps": [0.2], "out": "cfg_out", "seed": 9,
               "band": {"min": -3, "max": 4}})";
  }
  const PipelineConfig cfg = load_config(path);
  CHECK(cfg.gen.kind == SpaceKind::Circle);
  CHECK(cfg.gen.spacing == doctest::Approx(0.05));
  CHECK(cfg.gen.radius == doctest::Approx(2.0));
  CHECK(cfg.rho == doctest::Approx(0.3));
  CHECK(cfg.c0 == doctest::Approx(0.01));
  REQUIRE(cfg.coefficients.size() == 2);
  CHECK(cfg.coefficients[1] == "alpha");
  CHECK(cfg.eps_list == std::vector<double>{0.2});
  CHECK(cfg.out_dir == "cfg_out");
  CHECK(cfg.seed == 9);
  CHECK(cfg.field.level_min == -3);
  CHECK(cfg.field.level_max == 4);
  fs::remove(path);
  CHECK_THROWS_AS(load_config("does_not_exist.json"), std::invalid_argument);
}
