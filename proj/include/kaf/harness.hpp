#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kaf/datagen.hpp"
#include "kaf/filters.hpp"
#include "kaf/metrics.hpp"

namespace kaf {

enum class Scenario { GpTracking, PoissonTuning, LogisticBoundary, SteadyState };

enum class Algorithm { Klms, Fklms, Norma, Qklms, Nlms, PoissonKlms, BernoulliKlms };

std::string to_string(Scenario s);
std::string to_string(Algorithm a);
Scenario scenario_from_string(const std::string& name);
Algorithm algorithm_from_string(const std::string& name);

/// Observation model the scenario's stream emits; the algorithm must match.
Likelihood scenario_likelihood(Scenario s);

/// A full experiment: scenario, algorithm, hyperparameters, repeat plan and
/// output location. Parsed from a single strict JSON document (unknown keys
/// are errors).
///
/// The interpretation of eta depends on the algorithm: SGD learning rate for
/// klms/norma/qklms (and for klms on steady_state, where the filter runs in
/// weight space under the linear kernel), NLMS step size for nlms. fklms and
/// the GLM filters derive their gain from sigma_d2/sigma_n2 instead.
struct ExperimentConfig {
  std::string run_id = "run";
  Scenario scenario = Scenario::GpTracking;
  Algorithm algorithm = Algorithm::Klms;

  double gamma = 12.5;
  double lambda = 1.0;
  double sigma_d2 = 1.0;
  double sigma_n2 = 1.0;
  double eta = 0.2;
  double eps_q = 0.05;
  std::optional<int> budget;
  std::optional<double> prune_threshold;

  int repeats = 1;
  std::uint64_t base_seed = 1;
  int threads = 1;
  bool log_steps = true;
  std::string output_dir;  // empty: no files written
  int asymptotic_start = 200;
  int asymptotic_window = 800;

  GpStreamConfig gp;
  TuningStreamConfig tuning;
  BoundaryStreamConfig boundary;
  RandomWalkConfig walk;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Cross-field checks: scenario/algorithm compatibility, parameter ranges.
/// Throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

/// The scenario's stream for one repeat, seeded with base_seed + repeat.
Stream make_stream(const ExperimentConfig& cfg, int repeat);

/// Runs the configured filter over one stream, one sample at a time:
/// predict (one-step-ahead, before seeing y_t), update, prune, record.
/// center_count is the expansion size after the step; linear baselines
/// report 0. nmse fields are NaN where undefined (zero observation
/// variance, or series shorter than the asymptotic window).
MetricSeries run_stream(const ExperimentConfig& cfg, const Stream& stream);

struct RepeatOutcome {
  int repeat = 0;
  bool failed = false;
  std::string error;

  MetricSeries series;  // steps cleared when log_steps is off or on failure
  ErrorSums full_sums;
  std::optional<ErrorSums> asymptotic_sums;
  double mean_center_count = 0.0;
  std::int64_t step_count = 0;
};

struct AggregateSummary {
  double nmse_db = 0.0;
  double asymptotic_nmse_db = 0.0;
  double mean_center_count = 0.0;
  int repeats = 0;  // successful repeats aggregated
  int failures = 0;
};

struct ExperimentResult {
  std::vector<RepeatOutcome> repeats;
  AggregateSummary summary;
};

/// Runs all repeats (in parallel when cfg.threads > 1; results are merged
/// by repeat index, so thread count never changes the output), aggregates
/// NMSE by pooling per-repeat error sums before the log, and writes
/// <run_id>_steps.csv / <run_id>_summary.csv when output_dir is set.
/// A numerical failure marks its repeat failed and the run continues.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct ScanSpec {
  std::string parameter;  // eta, lambda, gamma, sigma_d2, sigma_n2, eps_q, budget, prune_threshold
  std::vector<double> values;
};

struct ScanResult {
  double best_value = 0.0;
  AggregateSummary best_summary;
  std::vector<std::pair<double, AggregateSummary>> candidates;
};

/// Evaluates every candidate value on identical streams (shared per-repeat
/// seeds, generated once) and picks the least pooled NMSE; ties break toward
/// the smaller value. Writes <run_id>_scan_<parameter>.csv when output_dir
/// is set.
ScanResult run_scan(const ExperimentConfig& cfg, const ScanSpec& scan);

/// Returns a copy of cfg with the scanned parameter set to `value`.
ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& parameter,
                                double value);

void write_steps_csv(const ExperimentConfig& cfg, const ExperimentResult& result,
                     const std::string& path);
void write_summary_csv(const ExperimentConfig& cfg, const ExperimentResult& result,
                       const std::string& path);

}  // namespace kaf
