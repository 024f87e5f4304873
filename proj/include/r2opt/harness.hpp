#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "r2opt/acquisition.hpp"
#include "r2opt/bench.hpp"
#include "r2opt/greedy.hpp"
#include "r2opt/r2util.hpp"
#include "r2opt/surrogate.hpp"

namespace r2opt {

inline constexpr const char* kVersion = "0.1.0";

/// A malformed or invalid experiment configuration. line is 0 when unknown.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& message);
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ProblemConfig {
  std::string name = "hypersphere";
  std::size_t D = 0;
  std::size_t M = 2;
};

enum class NormalisationMode { none, front, bounds };

/// front: map the reference front's bounding box onto the unit cube.
/// bounds: map [lower, upper] onto the unit cube.
struct NormalisationConfig {
  NormalisationMode mode = NormalisationMode::none;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// kind: hypervolume (nadir), chebyshev (ideal; the standard R2 utility),
/// aug_chebyshev (ideal, gamma), lp (ideal, p), linear, igd / igd_plus
/// (references, p, q), d1 (references, weights).
struct UtilityConfig {
  std::string kind = "hypervolume";
  std::vector<double> ideal;
  std::vector<double> nadir;
  std::vector<std::vector<double>> references;
  std::vector<double> weights;
  double p = 2.0;
  double q = 1.0;
  double gamma = 0.0;
  /// Atoms of the frozen reporting bank when no exact evaluator exists.
  std::size_t J_eval = 100000;

  /// Spec in the (normalised) objective space of dimension M.
  [[nodiscard]] R2UtilitySpec build(std::size_t M) const;
};

struct AcquisitionConfig {
  AcquisitionKind kind = AcquisitionKind::eui;
  std::size_t J = 256;
  std::size_t H = 128;
  double beta = 2.0;
  AdjustmentConfig adjustment;
  MixingConfig mixing;
  /// frozen: one bank per run; per_call: a fresh bank every iteration.
  ResamplePolicy resample = ResamplePolicy::per_call;
};

struct ModelConfig {
  /// Unset: 0 for noise-free problems, otherwise learned.
  std::optional<double> fixed_noise;
  std::size_t starts = 8;
  std::size_t max_evaluations = 400;
  /// Fixed-hyperparameter mode: the same (unit-cube) lengthscale and
  /// model-space variances for every output.
  std::optional<double> fixed_lengthscale;
  double fixed_signal = 1.0;
  /// Gamma prior on learned lengthscales; unset fits by maximum likelihood.
  std::optional<GammaPrior> lengthscale_prior = GammaPrior{};
};

struct GreedyConfig {
  std::size_t pool = 10000;
  std::size_t J = 128;
  ResamplePolicy resample = ResamplePolicy::per_call;
  /// Cardinality of the comparator for the bound report; 0 skips it.
  std::size_t P = 0;
  double delta = 0.1;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemConfig problem;
  double sigma_fraction = 0.0;
  NormalisationConfig normalisation;
  UtilityConfig utility;
  AcquisitionConfig acquisition;
  std::size_t budget = 10;
  std::optional<std::size_t> initial_design;
  CandidateSet candidates;
  ModelConfig model;
  std::uint64_t seed = 0;
  std::size_t replications = 1;
  std::size_t front_resolution = 100000;
  GreedyConfig greedy;

  /// Everything but the budget and replication counts.
  void validate_nested() const;
  /// Adds budget >= 1 and replications >= 1.
  void validate() const;
  [[nodiscard]] std::size_t initial_size(std::size_t D) const { return initial_design.value_or(2 * (D + 1)); }
};

/// Strict parse: unknown keys, wrong types and invalid values throw
/// ConfigError naming the line in text.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
/// Sorted-key JSON holding every field, defaults included.
std::string canonical_json(const ExperimentConfig& config);
/// FNV-1a of canonical_json, 16 hex digits.
std::string config_digest(const ExperimentConfig& config);

/// Quantities shared by every replication of one configuration.
struct Experiment {
  ExperimentConfig config;
  ProblemSpec problem;
  std::optional<ObjectiveTransform> transform;
  /// Utility in the normalised space, unfrozen.
  R2UtilitySpec utility;
  /// The reporting evaluator: exact when available, else a frozen J_eval bank.
  std::shared_ptr<const SetUtility> reporter;
  double max_utility = 0.0;
  std::size_t front_size = 0;
  std::string digest;
  std::uint64_t master_seed = 0;
};

/// Builds the reference front (cached under cache_dir when given), the
/// normalisation and the reporting evaluator. Streams: reference-front and
/// scalarisation-bank children of the master seed.
Experiment prepare_experiment(const ExperimentConfig& config, const std::optional<std::string>& cache_dir = std::nullopt);

ObjectiveVector normalised(const Experiment& experiment, const ObjectiveVector& y);

/// log(max(regret, 1e-12)).
double log_regret(double max_utility, double utility);

struct RunRow {
  std::size_t iteration = 0;  // 0 for the initial design
  std::vector<double> x;
  std::vector<double> y;      // observed, possibly noisy
  double utility = 0.0;       // reporting utility of the noise-free images so far
  double log_regret = 0.0;
  double acq_value = 0.0;     // NaN for the initial design and the random baseline
  double lambda = 0.0;        // NaN unless the kind mixes in an adjustment
  double millis = 0.0;        // 0 unless timing
};

struct RunRecord {
  std::size_t replication = 0;
  std::uint64_t seed = 0;     // key of the replication stream
  std::string digest;
  std::string version = kVersion;
  std::size_t initial_size = 0;
  std::size_t D = 0;
  std::size_t M = 0;
  double max_utility = 0.0;
  std::vector<RunRow> rows;
  /// Set when the run was aborted; rows hold what completed.
  std::optional<std::string> error;

  [[nodiscard]] bool failed() const { return error.has_value(); }
};

/// Initial uniform design, then budget iterations of fit, acquire, evaluate.
/// Streams: initial-design, model-fit, acquisition, noise and
/// scalarisation-bank children of rng, indexed per iteration below them.
/// budget overrides config.budget when given (0 is allowed).
RunRecord bo_run(const Experiment& experiment, const RandomStream& rng, bool timing = false,
                 std::optional<std::size_t> budget = std::nullopt);

/// Approximate greedy over a uniform pool of config.greedy.pool inputs for
/// config.budget picks. Rows: one per pick, iteration 1..N; acq_value is the
/// estimated gain. Streams: pool and greedy children of rng.
RunRecord greedy_run(const Experiment& experiment, const RandomStream& rng, BoundReport* bound = nullptr,
                     bool timing = false);

/// Row-wise mean and sample std of log regret over successful runs.
struct RegretCurve {
  std::vector<std::size_t> iteration;
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t runs = 0;
  std::size_t failures = 0;

  [[nodiscard]] std::size_t size() const { return mean.size(); }
};

/// Summation in replication order, so the result does not depend on how
/// the records were produced. Throws if successful runs differ in length.
RegretCurve aggregate(const std::vector<RunRecord>& records);

struct Replication {
  std::vector<RunRecord> records;
  RegretCurve curve;
  std::vector<BoundReport> bounds;  // greedy runs with P > 0 only
};

enum class RunMode { bo, greedy };

/// Replication r draws from child "replication-<r>" of the master seed.
/// Runs execute on up to parallelism threads; records are indexed by r.
Replication replicate(const Experiment& experiment, std::size_t parallelism, RunMode mode = RunMode::bo,
                      bool timing = false);

/// CSV columns: iteration, x_0..x_{D-1}, y_0..y_{M-1}, utility, log_regret,
/// acq_value, lambda_n, millis. Values use %.17g; NaN prints as nan.
std::string run_csv(const RunRecord& record);
/// Header fields with sorted keys.
std::string run_json(const RunRecord& record, const ExperimentConfig& config);
/// Columns: iteration, mean_log_regret, std_log_regret.
std::string curve_csv(const RegretCurve& curve);
/// Rows of a run_csv document; inverse of run_csv up to the header fields.
RunRecord parse_run_csv(const std::string& text);

/// Writes run-<r>.csv and run-<r>.json per record, curve.csv and
/// summary.json into dir.
void write_replication(const Replication& replication, const Experiment& experiment, const std::string& dir);

/// Command line entry point. Exit codes: 0 success, 2 configuration or usage
/// error, 1 runtime failure.
int run_cli(int argc, const char* const* argv);

}  // namespace r2opt
