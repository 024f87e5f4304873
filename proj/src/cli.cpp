#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "r2opt/harness.hpp"

namespace r2opt {

namespace {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<std::string> cache_dir;
  bool no_cache = false;
  std::size_t parallel = 1;
  bool timing = false;
  std::optional<std::size_t> replications;
};

std::optional<std::string> cache_of(const GlobalOptions& g) {
  if (g.no_cache) return std::nullopt;
  if (g.cache_dir) return g.cache_dir;
  return (std::filesystem::path(g.out_dir) / "cache").string();
}

ExperimentConfig configured(const std::string& path, const GlobalOptions& g) {
  auto config = load_config(path);
  if (g.seed) config.seed = *g.seed;
  if (g.replications) config.replications = *g.replications;
  config.validate();
  return config;
}

int run_experiment(const std::string& path, const GlobalOptions& g, RunMode mode) {
  const auto config = configured(path, g);
  const auto ex = prepare_experiment(config, cache_of(g));
  const auto rep = replicate(ex, g.parallel, mode, g.timing);
  write_replication(rep, ex, g.out_dir);
  std::printf("%s: %zu runs, %zu failed, final mean log regret %.6g\n", config.name.c_str(), rep.curve.runs,
              rep.curve.failures, rep.curve.size() ? rep.curve.mean.back() : std::nan(""));
  if (!rep.bounds.empty()) {
    std::size_t holds = 0;
    for (const auto& b : rep.bounds) holds += b.holds;
    std::printf("bound holds in %zu of %zu runs\n", holds, rep.bounds.size());
  }
  return 0;
}

// Rows of numbers separated by whitespace or commas; '#' starts a comment.
ObjectiveSet read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  ObjectiveSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!ss.eof()) throw ConfigError(path, lineno, "expected numbers");
    if (row.empty()) continue;
    if (set.dim() != 0 && row.size() != set.dim()) throw ConfigError(path, lineno, "inconsistent dimension");
    set.insert(ObjectiveVector(row));
  }
  if (set.empty()) throw ConfigError(path, 0, "no points");
  return set;
}

int utility_eval(const std::string& spec_path, const std::string& points_path, const GlobalOptions& g) {
  const auto Y = read_points(points_path);
  // The spec file is the utility section of an experiment config.
  std::ifstream in(spec_path);
  if (!in) throw ConfigError(spec_path, 0, "cannot read");
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = "{\"utility\": " + ss.str() + ",\n\"problem\": {\"name\": \"hypersphere\", \"M\": " +
              std::to_string(Y.dim()) + "}}";
  const auto config = parse_config(text, spec_path);
  const auto spec = config.utility.build(Y.dim());
  double value;
  if (auto exact = exact_utility(spec)) {
    value = exact->evaluate(Y);
  } else {
    RandomStream rng = RandomStream(g.seed.value_or(0)).child("scalarisation-bank");
    const auto u = mc_utility(draw_bank(spec, rng, spec.J), Y);
    value = u.value;
  }
  std::printf("%.17g\n", value + 0.0);
  return 0;
}

int front(const std::string& name, std::size_t D, std::size_t M, std::size_t resolution, const GlobalOptions& g) {
  const auto problem = make_problem(name, D, M);
  RandomStream rng(g.seed.value_or(0));
  const auto f = reference_front(problem, resolution, rng, cache_of(g));
  std::filesystem::create_directories(g.out_dir);
  const auto path = std::filesystem::path(g.out_dir) / ("front-" + problem.name + ".csv");
  std::ofstream out(path);
  for (std::size_t m = 0; m < problem.M; ++m) out << (m ? "," : "") << "y_" << m;
  out << "\n";
  char buf[40];
  for (const auto& y : f.points) {
    for (std::size_t m = 0; m < y.size(); ++m) {
      std::snprintf(buf, sizeof buf, "%.17g", y[m]);
      out << (m ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::printf("%zu points%s -> %s\n", f.points.size(), f.from_cache ? " (cached)" : "", path.string().c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"R2 utility multi-objective optimisation toolkit", "r2opt"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--cache-dir", g.cache_dir, "Reference front cache (default <out-dir>/cache)");
  app.add_flag("--no-cache", g.no_cache, "Do not read or write cached fronts");
  app.add_option("--parallel", g.parallel, "Replications run concurrently")->check(CLI::PositiveNumber);
  app.add_flag("--timing", g.timing, "Record wall-clock milliseconds per row");
  app.add_option("--replications", g.replications, "Override the replication count")->check(CLI::PositiveNumber);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Bayesian optimisation experiment");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  auto* greedy = app.add_subcommand("greedy", "Pool-based approximate greedy with bound report");
  greedy->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string spec_path, points_path;
  auto* utility = app.add_subcommand("utility", "Utility tools");
  utility->require_subcommand(1);
  auto* eval = utility->add_subcommand("eval", "Utility of a points file");
  eval->add_option("--spec", spec_path, "Utility section JSON")->required();
  eval->add_option("--points", points_path, "Points, one per line")->required();

  auto* bench = app.add_subcommand("bench", "Benchmark problems");
  bench->require_subcommand(1);
  auto* list = bench->add_subcommand("list", "List problem names");

  std::string problem;
  std::size_t D = 0, M = 2, resolution = 100000;
  auto* fr = app.add_subcommand("front", "Build or load a reference front");
  fr->add_option("problem", problem, "Problem name")->required();
  fr->add_option("--D", D, "Input dimension");
  fr->add_option("--M", M, "Objective count")->capture_default_str();
  fr->add_option("--resolution", resolution, "Samples before filtering")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return run_experiment(config_path, g, RunMode::bo);
    if (greedy->parsed()) return run_experiment(config_path, g, RunMode::greedy);
    if (eval->parsed()) return utility_eval(spec_path, points_path, g);
    if (list->parsed()) {
      for (const auto& n : problem_names()) std::printf("%s\n", n.c_str());
      return 0;
    }
    if (fr->parsed()) return front(problem, D, M, resolution, g);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace r2opt
