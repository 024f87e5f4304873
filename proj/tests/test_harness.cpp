#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "r2opt/harness.hpp"

using namespace r2opt;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "name": "toy",
  "problem": {"name": "toy1d"},
  "utility": {"kind": "hypervolume", "nadir": [-0.2, -0.2]},
  "acquisition": {"kind": "eui", "J": 32, "H": 16},
  "budget": 3,
  "candidates": {"count": 64, "polish_steps": 3},
  "model": {"fixed_lengthscale": 0.3},
  "front": {"resolution": 2000},
  "replications": 3,
  "seed": 11
})";

ExperimentConfig small_config() { return parse_config(kSmall, "small.json"); }

std::string temp_dir(const std::string& tag) {
  auto dir = fs::temp_directory_path() / ("r2opt-harness-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t error_line(const std::string& text) {
  try {
    (void)parse_config(text, "t.json");
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

std::string error_text(const std::string& text) {
  try {
    (void)parse_config(text, "t.json");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int cli(const std::string& args, const std::string& out_file) {
  const std::string cmd = std::string(R2OPT_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parsing and defaults") {
  auto c = small_config();
  CHECK(c.problem.name == "toy1d");
  CHECK(c.budget == 3);
  CHECK(c.seed == 11);
  CHECK(c.initial_size(1) == 4);
  CHECK(c.acquisition.kind == AcquisitionKind::eui);
  CHECK(c.acquisition.resample == ResamplePolicy::per_call);
  CHECK(c.utility.J_eval == 100000);

  auto again = parse_config(canonical_json(c), "canonical");
  CHECK(canonical_json(again) == canonical_json(c));
  CHECK(config_digest(again) == config_digest(c));
  CHECK(config_digest(c).size() == 16);
  c.seed = 12;
  CHECK(config_digest(c) != config_digest(again));
}

TEST_CASE("config errors name the offending line") {
  CHECK(error_line("{\n  \"name\": \"a\",\n  \"bogus\": 1\n}") == 3);
  CHECK(error_text("{\n  \"name\": \"a\",\n  \"bogus\": 1\n}").find("unknown key 'bogus'") != std::string::npos);
  CHECK(error_text("{\n  \"bogus\": 1\n}").rfind("t.json:2:", 0) == 0);

  const std::string nested = "{\n \"problem\": {\"name\": \"toy1d\"},\n \"acquisition\": {\n   \"kind\": \"eui\",\n"
                             "   \"Jx\": 4\n }\n}";
  CHECK(error_line(nested) == 5);
  CHECK(error_line("{\n\"budget\": -1\n}") == 2);
  CHECK(error_line("{\n\"budget\": 0\n}") == 2);
  CHECK(error_line("{\n\"budget\": 1.5\n}") == 2);
  CHECK(error_line("{\n\"name\": 3\n}") == 2);
  CHECK(error_line("{\n\"name\": \"a\",\n\"name\": \"b\"\n}") == 3);
  CHECK(error_line("{\n\"name\": \"a\"\n\"budget\": 2\n}") == 3);
  CHECK(error_line("{\n\"problem\": {\"name\": \"nope\"}\n}") == 2);
  CHECK(error_line("{\n\"utility\": {\n\"kind\": \"hypervolume\",\n\"nadir\": [0]\n}\n}") == 2);
  CHECK(error_line("{\n\"acquisition\": {\"kind\": \"best\"}\n}") == 2);
  const std::string arr = "{\n\"utility\": {\"kind\": \"d1\", \"weights\": [0.5, 0.5],\n\"references\": [\n[0, 1],\n"
                          "[1, \"x\"]\n]}\n}";
  CHECK(error_line(arr) == 5);
  CHECK_NOTHROW((void)parse_config("{\"$schema\": \"configs/schema.json\", \"problem\": {\"name\": \"toy1d\"},"
                                   "\"utility\": {\"kind\": \"hypervolume\", \"nadir\": [0, 0]}}"));
}

TEST_CASE("configs shipped in the repository parse") {
  const fs::path dir = fs::path(R2OPT_SOURCE_DIR) / "configs";
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json" || e.path().filename() == "schema.json") continue;
    CHECK_NOTHROW((void)load_config(e.path().string()));
    ++n;
  }
  CHECK(n >= 3);
}

TEST_CASE("empty budget records only the initial design") {
  const auto ex = prepare_experiment(small_config());
  const auto rec = bo_run(ex, RandomStream(1), false, 0);
  REQUIRE(rec.rows.size() == 4);
  CHECK_FALSE(rec.failed());
  for (const auto& row : rec.rows) {
    CHECK(row.iteration == 0);
    CHECK(std::isnan(row.acq_value));
    CHECK(row.millis == 0.0);
  }
  ObjectiveSet Y(2);
  for (const auto& row : rec.rows) Y.insert(evaluate(ex.problem, InputVector(row.x)));
  CHECK(rec.rows.back().utility == doctest::Approx(exact_hypervolume(Y, {-0.2, -0.2}).value).epsilon(1e-12));
}

TEST_CASE("runs are deterministic and utilities non-decreasing") {
  const auto ex = prepare_experiment(small_config());
  for (auto kind : {AcquisitionKind::eui, AcquisitionKind::random, AcquisitionKind::ucb}) {
    Experiment e = ex;
    e.config.acquisition.kind = kind;
    const auto a = bo_run(e, RandomStream(5));
    const auto b = bo_run(e, RandomStream(5));
    REQUIRE(a.rows.size() == 4 + 3);
    CHECK(run_csv(a) == run_csv(b));
    CHECK(run_json(a, e.config) == run_json(b, e.config));
    for (std::size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i].utility >= a.rows[i - 1].utility - 1e-9);
    for (const auto& row : a.rows) {
      CHECK(row.log_regret == log_regret(ex.max_utility, row.utility));
      if (row.iteration > 0) CHECK(row.iteration <= 3);
    }
    CHECK(std::isnan(a.rows.back().lambda));
    if (kind == AcquisitionKind::random) CHECK(std::isnan(a.rows.back().acq_value));
    else CHECK(std::isfinite(a.rows.back().acq_value));
  }
  CHECK(run_csv(bo_run(ex, RandomStream(5))) != run_csv(bo_run(ex, RandomStream(6))));
}

TEST_CASE("noisy runs learn hyperparameters") {
  auto c = small_config();
  c.sigma_fraction = 0.05;
  c.model.fixed_lengthscale.reset();
  c.model.starts = 2;
  c.model.max_evaluations = 60;
  const auto ex = prepare_experiment(c);
  const auto rec = bo_run(ex, RandomStream(2));
  CHECK_FALSE(rec.failed());
  CHECK(rec.rows.size() == 7);
  // Observations carry noise; utilities use noise-free images.
  const auto f = evaluate(ex.problem, InputVector(rec.rows[0].x));
  CHECK(rec.rows[0].y[0] != f[0]);
}

TEST_CASE("log regret clamps at 1e-12") {
  CHECK(log_regret(1.0, 1.0) == std::log(1e-12));
  CHECK(log_regret(1.0, 2.0) == std::log(1e-12));
  CHECK(log_regret(1.0, 0.5) == std::log(0.5));
}

TEST_CASE("aggregation: degenerate, failures and persisted records") {
  const auto ex = prepare_experiment(small_config());
  auto one = ex;
  one.config.replications = 1;
  const auto single = replicate(one, 1);
  REQUIRE(single.curve.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(single.curve.mean[i] == single.records[0].rows[i].log_regret);
    CHECK(single.curve.std[i] == 0.0);
  }

  const auto rep = replicate(ex, 1);
  CHECK(rep.curve.runs == 3);
  for (double s : rep.curve.std) CHECK(s >= 0.0);

  const auto dir = temp_dir("agg");
  write_replication(rep, ex, dir);
  std::vector<RunRecord> loaded;
  for (std::size_t r = 0; r < 3; ++r) {
    loaded.push_back(parse_run_csv(slurp(fs::path(dir) / ("run-" + std::to_string(r) + ".csv"))));
    CHECK(loaded.back().initial_size == 4);
  }
  const auto again = aggregate(loaded);
  CHECK(again.mean == rep.curve.mean);
  CHECK(again.std == rep.curve.std);
  CHECK(slurp(fs::path(dir) / "curve.csv") == curve_csv(again));

  auto with_failure = rep.records;
  with_failure[1].error = "boom";
  with_failure[1].rows.resize(2);
  const auto partial = aggregate(with_failure);
  CHECK(partial.runs == 2);
  CHECK(partial.failures == 1);
  CHECK(partial.mean[6] == (rep.records[0].rows[6].log_regret + rep.records[2].rows[6].log_regret) / 2.0);
  fs::remove_all(dir);
}

TEST_CASE("replication output does not depend on parallelism") {
  const auto ex = prepare_experiment(small_config());
  const auto a = replicate(ex, 1);
  const auto b = replicate(ex, 3);
  for (std::size_t r = 0; r < 3; ++r) CHECK(run_csv(a.records[r]) == run_csv(b.records[r]));
  CHECK(a.curve.mean == b.curve.mean);
  // Replication r is the bo_run of child "replication-<r>".
  CHECK(run_csv(a.records[2]) == run_csv(bo_run(ex, RandomStream(11).child("replication-2"))));
}

TEST_CASE("greedy runs and bound reports") {
  auto c = parse_config(R"({
    "problem": {"name": "hypersphere", "M": 2},
    "utility": {"kind": "chebyshev", "ideal": [1, 1], "J_eval": 2000},
    "budget": 3,
    "front": {"resolution": 5000},
    "greedy": {"pool": 10, "J": 8, "P": 2},
    "replications": 4
  })");
  const auto ex = prepare_experiment(c);
  BoundReport bound;
  const auto rec = greedy_run(ex, RandomStream(3), &bound);
  REQUIRE(rec.rows.size() == 3);
  CHECK(rec.rows[0].iteration == 1);
  for (std::size_t i = 1; i < 3; ++i) CHECK(rec.rows[i].utility >= rec.rows[i - 1].utility - 1e-9);
  CHECK(bound.P == 2);
  CHECK(bound.holds);
  const auto rep = replicate(ex, 2, RunMode::greedy);
  CHECK(rep.bounds.size() == 4);
  CHECK(rep.curve.size() == 3);
}

TEST_CASE("normalisation modes") {
  auto c = parse_config(R"({
    "problem": {"name": "dtlz2", "D": 3, "M": 2},
    "normalisation": {"mode": "front"},
    "utility": {"kind": "hypervolume", "nadir": [-0.1, -0.1]},
    "front": {"resolution": 20000}
  })");
  const auto ex = prepare_experiment(c);
  REQUIRE(ex.transform);
  CHECK(ex.transform->lower[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(std::abs(ex.transform->upper[0]) < 1e-3);
  // Normalised front: 1 - (cos, sin), dominating region above (-0.1, -0.1).
  CHECK(ex.max_utility == doctest::Approx(1.21 - M_PI / 4).epsilon(2e-3));

  c.normalisation.mode = NormalisationMode::bounds;
  c.normalisation.lower = {-1.0, -1.0};
  c.normalisation.upper = {0.0, 0.0};
  const auto b = prepare_experiment(c);
  CHECK(b.max_utility == doctest::Approx(ex.max_utility).epsilon(1e-3));
  c.normalisation.upper = {0.0};
  CHECK_THROWS(prepare_experiment(c));
}

TEST_CASE("command line") {
  const auto dir = temp_dir("cli");
  const std::string out = (fs::path(dir) / "out.txt").string();

  CHECK(cli("bench list", out) == 0);
  CHECK(slurp(out) == "hypersphere\ndtlz2\ngmm\ntoy1d\n");

  {
    std::ofstream(fs::path(dir) / "d1.json") << R"({"kind": "d1", "references": [[0, 1], [0.6, 0.8], [1, 0]],
      "weights": [0.5, 0.5]})";
    std::ofstream(fs::path(dir) / "pts.txt") << "# front points\n0 1\n0.6, 0.8\n1 0\n";
  }
  CHECK(cli("utility eval --spec " + dir + "/d1.json --points " + dir + "/pts.txt", out) == 0);
  CHECK(slurp(out) == "0\n");

  {
    std::ofstream(fs::path(dir) / "small.json") << kSmall;
    std::ofstream(fs::path(dir) / "bad.json") << "{\n  \"problem\": {\"name\": \"toy1d\"},\n  \"oops\": true\n}\n";
  }
  const std::string run_dir = dir + "/run";
  CHECK(cli("run " + dir + "/small.json --out-dir " + run_dir + " --parallel 2", out) == 0);
  for (std::size_t r = 0; r < 3; ++r) {
    std::ifstream in(fs::path(run_dir) / ("run-" + std::to_string(r) + ".csv"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + 4 + 3);
    CHECK(fs::exists(fs::path(run_dir) / ("run-" + std::to_string(r) + ".json")));
  }
  CHECK(fs::exists(fs::path(run_dir) / "curve.csv"));
  CHECK(fs::exists(fs::path(run_dir) / "summary.json"));

  CHECK(cli("run " + dir + "/bad.json --out-dir " + run_dir, out) == 2);
  CHECK(slurp(out).find("bad.json:3:") != std::string::npos);
  CHECK(cli("run " + dir + "/missing.json", out) == 2);
  CHECK(cli("frobnicate", out) == 2);
  CHECK(cli("front toy1d --resolution 500 --out-dir " + dir + "/front", out) == 0);
  CHECK(slurp(out).find("points") != std::string::npos);
  CHECK(cli("front toy1d --resolution 500 --out-dir " + dir + "/front", out) == 0);
  CHECK(slurp(out).find("(cached)") != std::string::npos);
  fs::remove_all(dir);
}
