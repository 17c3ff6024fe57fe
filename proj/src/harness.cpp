#include "kaf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kaf/csv.hpp"
#include "kaf/errors.hpp"

namespace kaf {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) {
  throw ConfigError("config: " + ctx + ": " + msg);
}

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(ctx, "unknown key '" + it.key() + "'");
  }
}

double get_double(const json& v, const std::string& ctx) {
  if (!v.is_number()) fail(ctx, "expected a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) fail(ctx, "expected an integer");
  const std::int64_t x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    fail(ctx, "integer out of range");
  return static_cast<int>(x);
}

std::uint64_t get_u64(const json& v, const std::string& ctx) {
  if (!v.is_number_integer()) fail(ctx, "expected an integer");
  const std::int64_t x = v.get<std::int64_t>();
  if (x < 0) fail(ctx, "expected a non-negative integer");
  return static_cast<std::uint64_t>(x);
}

bool get_bool(const json& v, const std::string& ctx) {
  if (!v.is_boolean()) fail(ctx, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& ctx) {
  if (!v.is_string()) fail(ctx, "expected a string");
  return v.get<std::string>();
}

Eigen::Vector2d get_vec2(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 2) fail(ctx, "expected an array of 2 numbers");
  return {get_double(v[0], ctx), get_double(v[1], ctx)};
}

void parse_stream_section(const json& js, ExperimentConfig& cfg) {
  if (!js.is_object()) fail("stream", "expected an object");
  switch (cfg.scenario) {
    case Scenario::GpTracking: {
      check_keys(js, "stream", {"n", "temporal_ls", "spatial_ls", "snr_db"});
      if (auto it = js.find("n"); it != js.end()) cfg.gp.n = get_int(*it, "stream.n");
      if (auto it = js.find("temporal_ls"); it != js.end())
        cfg.gp.temporal_ls = get_double(*it, "stream.temporal_ls");
      if (auto it = js.find("spatial_ls"); it != js.end())
        cfg.gp.spatial_ls = get_double(*it, "stream.spatial_ls");
      if (auto it = js.find("snr_db"); it != js.end())
        cfg.gp.snr_db = get_double(*it, "stream.snr_db");
      break;
    }
    case Scenario::PoissonTuning: {
      check_keys(js, "stream", {"n", "gain", "offset", "total_drift_deg"});
      if (auto it = js.find("n"); it != js.end()) cfg.tuning.n = get_int(*it, "stream.n");
      if (auto it = js.find("gain"); it != js.end())
        cfg.tuning.gain = get_double(*it, "stream.gain");
      if (auto it = js.find("offset"); it != js.end())
        cfg.tuning.offset = get_double(*it, "stream.offset");
      if (auto it = js.find("total_drift_deg"); it != js.end())
        cfg.tuning.total_drift_deg = get_double(*it, "stream.total_drift_deg");
      break;
    }
    case Scenario::LogisticBoundary: {
      check_keys(js, "stream", {"n", "radius", "start", "end"});
      if (auto it = js.find("n"); it != js.end()) cfg.boundary.n = get_int(*it, "stream.n");
      if (auto it = js.find("radius"); it != js.end())
        cfg.boundary.radius = get_double(*it, "stream.radius");
      if (auto it = js.find("start"); it != js.end())
        cfg.boundary.start = get_vec2(*it, "stream.start");
      if (auto it = js.find("end"); it != js.end()) cfg.boundary.end = get_vec2(*it, "stream.end");
      break;
    }
    case Scenario::SteadyState: {
      check_keys(js, "stream", {"n", "dim", "sigma_q2", "sigma_n2"});
      if (auto it = js.find("n"); it != js.end()) cfg.walk.n = get_int(*it, "stream.n");
      if (auto it = js.find("dim"); it != js.end()) cfg.walk.dim = get_int(*it, "stream.dim");
      if (auto it = js.find("sigma_q2"); it != js.end())
        cfg.walk.sigma_q2 = get_double(*it, "stream.sigma_q2");
      if (auto it = js.find("sigma_n2"); it != js.end())
        cfg.walk.sigma_n2 = get_double(*it, "stream.sigma_n2");
      break;
    }
  }
}

/// Sums of squared prediction error and observation variance over the step
/// range [begin, end). Degenerate windows yield zero sums, never throw.
ErrorSums sums_over(const std::vector<StepRecord>& steps, std::size_t begin, std::size_t end) {
  ErrorSums sums;
  if (begin >= end || end > steps.size()) return sums;
  double mean = 0.0;
  for (std::size_t i = begin; i < end; ++i) mean += steps[i].observation;
  mean /= static_cast<double>(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const double e = steps[i].prediction - steps[i].observation;
    const double d = steps[i].observation - mean;
    sums.squared_error += e * e;
    sums.observation_variance += d * d;
  }
  return sums;
}

double safe_nmse_db(const ErrorSums& sums) {
  if (!(sums.observation_variance > 0.0)) return kNan;
  return nmse_db_from_sums(sums);
}

void for_each_index(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

RepeatOutcome run_one_repeat(const ExperimentConfig& cfg, int repeat, const Stream* stream) {
  RepeatOutcome out;
  out.repeat = repeat;
  try {
    Stream local;
    if (stream == nullptr) {
      local = make_stream(cfg, repeat);
      stream = &local;
    }
    out.series = run_stream(cfg, *stream);
    const std::vector<StepRecord>& steps = out.series.steps;
    out.step_count = static_cast<std::int64_t>(steps.size());
    out.full_sums = sums_over(steps, 0, steps.size());
    const std::size_t start = static_cast<std::size_t>(cfg.asymptotic_start);
    const std::size_t window = static_cast<std::size_t>(cfg.asymptotic_window);
    if (steps.size() >= start + window)
      out.asymptotic_sums = sums_over(steps, start, start + window);
    double center_sum = 0.0;
    for (const StepRecord& s : steps) center_sum += s.center_count;
    out.mean_center_count = steps.empty() ? 0.0 : center_sum / static_cast<double>(steps.size());
    if (!cfg.log_steps) {
      out.series.steps.clear();
      out.series.steps.shrink_to_fit();
    }
  } catch (const std::exception& e) {
    out = RepeatOutcome{};
    out.repeat = repeat;
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

AggregateSummary aggregate(const std::vector<RepeatOutcome>& repeats) {
  AggregateSummary s;
  ErrorSums full, asym;
  bool any_asym = false;
  double center_sum = 0.0;
  for (const RepeatOutcome& r : repeats) {
    if (r.failed) {
      ++s.failures;
      continue;
    }
    ++s.repeats;
    full += r.full_sums;
    if (r.asymptotic_sums) {
      asym += *r.asymptotic_sums;
      any_asym = true;
    }
    center_sum += r.mean_center_count;
  }
  s.nmse_db = s.repeats > 0 ? safe_nmse_db(full) : kNan;
  s.asymptotic_nmse_db = any_asym ? safe_nmse_db(asym) : kNan;
  s.mean_center_count = s.repeats > 0 ? center_sum / s.repeats : kNan;
  return s;
}

/// Runs all repeats against an optional pre-generated stream cache (entries
/// may be missing when generation failed; `gen_errors` holds the reasons).
ExperimentResult run_repeats(const ExperimentConfig& cfg,
                             const std::vector<std::optional<Stream>>* cache,
                             const std::vector<std::string>* gen_errors) {
  ExperimentResult result;
  result.repeats.resize(static_cast<std::size_t>(cfg.repeats));
  for_each_index(cfg.repeats, cfg.threads, [&](int r) {
    const std::size_t i = static_cast<std::size_t>(r);
    if (cache != nullptr) {
      if (!(*cache)[i]) {
        result.repeats[i].repeat = r;
        result.repeats[i].failed = true;
        result.repeats[i].error = gen_errors != nullptr ? (*gen_errors)[i] : "stream generation failed";
        return;
      }
      result.repeats[i] = run_one_repeat(cfg, r, &**(cache->begin() + r));
      return;
    }
    result.repeats[i] = run_one_repeat(cfg, r, nullptr);
  });
  result.summary = aggregate(result.repeats);
  return result;
}

void write_scan_csv(const ExperimentConfig& cfg, const ScanSpec& scan, const ScanResult& result,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_scan_csv: cannot open " + path);
  out << "run_id,algorithm,parameter,value,nmse_db,asymptotic_nmse_db,mean_center_count,repeats\n";
  for (const auto& [value, summary] : result.candidates) {
    out << cfg.run_id << ',' << to_string(cfg.algorithm) << ',' << scan.parameter << ','
        << format_double(value) << ',' << format_double(summary.nmse_db) << ','
        << format_double(summary.asymptotic_nmse_db) << ','
        << format_double(summary.mean_center_count) << ',' << format_int(summary.repeats) << '\n';
  }
  if (!out) throw ConfigError("write_scan_csv: write failed for " + path);
}

bool safe_run_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::GpTracking:
      return "gp_tracking";
    case Scenario::PoissonTuning:
      return "poisson_tuning";
    case Scenario::LogisticBoundary:
      return "logistic_boundary";
    case Scenario::SteadyState:
      return "steady_state";
  }
  throw std::invalid_argument("to_string: unknown scenario");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Klms:
      return "klms";
    case Algorithm::Fklms:
      return "fklms";
    case Algorithm::Norma:
      return "norma";
    case Algorithm::Qklms:
      return "qklms";
    case Algorithm::Nlms:
      return "nlms";
    case Algorithm::PoissonKlms:
      return "poisson_klms";
    case Algorithm::BernoulliKlms:
      return "bernoulli_klms";
  }
  throw std::invalid_argument("to_string: unknown algorithm");
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "gp_tracking") return Scenario::GpTracking;
  if (name == "poisson_tuning") return Scenario::PoissonTuning;
  if (name == "logistic_boundary") return Scenario::LogisticBoundary;
  if (name == "steady_state") return Scenario::SteadyState;
  throw ConfigError("config: unknown scenario '" + name +
                    "' (expected gp_tracking, poisson_tuning, logistic_boundary or steady_state)");
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "klms") return Algorithm::Klms;
  if (name == "fklms") return Algorithm::Fklms;
  if (name == "norma") return Algorithm::Norma;
  if (name == "qklms") return Algorithm::Qklms;
  if (name == "nlms") return Algorithm::Nlms;
  if (name == "poisson_klms") return Algorithm::PoissonKlms;
  if (name == "bernoulli_klms") return Algorithm::BernoulliKlms;
  throw ConfigError("config: unknown algorithm '" + name +
                    "' (expected klms, fklms, norma, qklms, nlms, poisson_klms or bernoulli_klms)");
}

Likelihood scenario_likelihood(Scenario s) {
  switch (s) {
    case Scenario::GpTracking:
    case Scenario::SteadyState:
      return Likelihood::Gaussian;
    case Scenario::PoissonTuning:
      return Likelihood::Poisson;
    case Scenario::LogisticBoundary:
      return Likelihood::Bernoulli;
  }
  throw std::invalid_argument("scenario_likelihood: unknown scenario");
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) fail("root", "expected a JSON object");
  check_keys(j, "root",
             {"run_id", "scenario", "algorithm", "gamma", "lambda", "sigma_d2", "sigma_n2", "eta",
              "eps_q", "budget", "prune_threshold", "repeats", "base_seed", "threads", "log_steps",
              "output_dir", "asymptotic_start", "asymptotic_window", "stream"});

  ExperimentConfig cfg;
  if (auto it = j.find("scenario"); it != j.end())
    cfg.scenario = scenario_from_string(get_string(*it, "scenario"));
  if (auto it = j.find("algorithm"); it != j.end())
    cfg.algorithm = algorithm_from_string(get_string(*it, "algorithm"));
  if (auto it = j.find("run_id"); it != j.end()) cfg.run_id = get_string(*it, "run_id");
  if (auto it = j.find("gamma"); it != j.end()) cfg.gamma = get_double(*it, "gamma");
  if (auto it = j.find("lambda"); it != j.end()) cfg.lambda = get_double(*it, "lambda");
  if (auto it = j.find("sigma_d2"); it != j.end()) cfg.sigma_d2 = get_double(*it, "sigma_d2");
  if (auto it = j.find("sigma_n2"); it != j.end()) cfg.sigma_n2 = get_double(*it, "sigma_n2");
  if (auto it = j.find("eta"); it != j.end()) cfg.eta = get_double(*it, "eta");
  if (auto it = j.find("eps_q"); it != j.end()) cfg.eps_q = get_double(*it, "eps_q");
  if (auto it = j.find("budget"); it != j.end()) {
    if (it->is_null())
      cfg.budget.reset();
    else
      cfg.budget = get_int(*it, "budget");
  }
  if (auto it = j.find("prune_threshold"); it != j.end()) {
    if (it->is_null())
      cfg.prune_threshold.reset();
    else
      cfg.prune_threshold = get_double(*it, "prune_threshold");
  }
  if (auto it = j.find("repeats"); it != j.end()) cfg.repeats = get_int(*it, "repeats");
  if (auto it = j.find("base_seed"); it != j.end()) cfg.base_seed = get_u64(*it, "base_seed");
  if (auto it = j.find("threads"); it != j.end()) cfg.threads = get_int(*it, "threads");
  if (auto it = j.find("log_steps"); it != j.end()) cfg.log_steps = get_bool(*it, "log_steps");
  if (auto it = j.find("output_dir"); it != j.end()) cfg.output_dir = get_string(*it, "output_dir");
  if (auto it = j.find("asymptotic_start"); it != j.end())
    cfg.asymptotic_start = get_int(*it, "asymptotic_start");
  if (auto it = j.find("asymptotic_window"); it != j.end())
    cfg.asymptotic_window = get_int(*it, "asymptotic_window");
  if (auto it = j.find("stream"); it != j.end()) parse_stream_section(*it, cfg);

  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (!safe_run_id(cfg.run_id))
    fail("run_id", "must be non-empty and use only [A-Za-z0-9._-]");
  if (cfg.repeats < 1) fail("repeats", "must be >= 1");
  if (cfg.threads < 1) fail("threads", "must be >= 1");
  if (cfg.asymptotic_start < 0) fail("asymptotic_start", "must be >= 0");
  if (cfg.asymptotic_window < 1) fail("asymptotic_window", "must be >= 1");
  if (!(cfg.gamma > 0.0)) fail("gamma", "must be positive");
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) fail("lambda", "must be in (0,1]");
  if (!(cfg.sigma_d2 > 0.0)) fail("sigma_d2", "must be positive");
  if (!(cfg.sigma_n2 > 0.0)) fail("sigma_n2", "must be positive");
  if (cfg.budget && *cfg.budget < 1) fail("budget", "must be >= 1");
  if (cfg.prune_threshold && !(*cfg.prune_threshold >= 0.0))
    fail("prune_threshold", "must be >= 0");

  bool compatible = false;
  switch (cfg.scenario) {
    case Scenario::GpTracking:
      compatible = cfg.algorithm == Algorithm::Klms || cfg.algorithm == Algorithm::Fklms ||
                   cfg.algorithm == Algorithm::Norma || cfg.algorithm == Algorithm::Qklms ||
                   cfg.algorithm == Algorithm::Nlms;
      break;
    case Scenario::SteadyState:
      compatible = cfg.algorithm == Algorithm::Klms || cfg.algorithm == Algorithm::Nlms;
      break;
    case Scenario::PoissonTuning:
      compatible = cfg.algorithm == Algorithm::PoissonKlms;
      break;
    case Scenario::LogisticBoundary:
      compatible = cfg.algorithm == Algorithm::BernoulliKlms;
      break;
  }
  if (!compatible)
    fail("algorithm", "'" + to_string(cfg.algorithm) + "' is incompatible with scenario '" +
                          to_string(cfg.scenario) + "'");

  // eta range depends on the update rule: kernel SGD needs (0,1), the
  // weight-space rules accept (0,2).
  const bool kernel_sgd = (cfg.algorithm == Algorithm::Klms &&
                           cfg.scenario != Scenario::SteadyState) ||
                          cfg.algorithm == Algorithm::Norma || cfg.algorithm == Algorithm::Qklms;
  const bool weight_space = cfg.algorithm == Algorithm::Nlms ||
                            (cfg.algorithm == Algorithm::Klms &&
                             cfg.scenario == Scenario::SteadyState);
  if (kernel_sgd && !(cfg.eta > 0.0 && cfg.eta < 1.0)) fail("eta", "must be in (0,1)");
  if (weight_space && !(cfg.eta > 0.0 && cfg.eta < 2.0)) fail("eta", "must be in (0,2)");
  if (cfg.algorithm == Algorithm::Qklms && !(cfg.eps_q > 0.0)) fail("eps_q", "must be positive");

  switch (cfg.scenario) {
    case Scenario::GpTracking:
      if (cfg.gp.n < 1) fail("stream.n", "must be >= 1");
      if (!(cfg.gp.temporal_ls > 0.0)) fail("stream.temporal_ls", "must be positive");
      if (!(cfg.gp.spatial_ls > 0.0)) fail("stream.spatial_ls", "must be positive");
      if (!(cfg.gp.snr_db >= -300.0 && cfg.gp.snr_db <= 300.0))
        fail("stream.snr_db", "must be in [-300, 300]");
      break;
    case Scenario::PoissonTuning:
      if (cfg.tuning.n < 1) fail("stream.n", "must be >= 1");
      break;
    case Scenario::LogisticBoundary:
      if (cfg.boundary.n < 1) fail("stream.n", "must be >= 1");
      if (!(cfg.boundary.radius > 0.0)) fail("stream.radius", "must be positive");
      break;
    case Scenario::SteadyState:
      if (cfg.walk.n < 1) fail("stream.n", "must be >= 1");
      if (cfg.walk.dim < 1) fail("stream.dim", "must be >= 1");
      if (!(cfg.walk.sigma_q2 >= 0.0)) fail("stream.sigma_q2", "must be >= 0");
      if (!(cfg.walk.sigma_n2 >= 0.0)) fail("stream.sigma_n2", "must be >= 0");
      break;
  }
}

Stream make_stream(const ExperimentConfig& cfg, int repeat) {
  if (repeat < 0) throw std::invalid_argument("make_stream: repeat must be >= 0");
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(repeat);
  switch (cfg.scenario) {
    case Scenario::GpTracking: {
      GpStreamConfig c = cfg.gp;
      c.seed = seed;
      return gp_stream(c);
    }
    case Scenario::PoissonTuning: {
      TuningStreamConfig c = cfg.tuning;
      c.seed = seed;
      return tuning_stream(c);
    }
    case Scenario::LogisticBoundary: {
      BoundaryStreamConfig c = cfg.boundary;
      c.seed = seed;
      return boundary_stream(c);
    }
    case Scenario::SteadyState: {
      RandomWalkConfig c = cfg.walk;
      c.seed = seed;
      return random_walk_stream(c);
    }
  }
  throw std::invalid_argument("make_stream: unknown scenario");
}

MetricSeries run_stream(const ExperimentConfig& cfg, const Stream& stream) {
  validate_config(cfg);
  const Likelihood lik = scenario_likelihood(cfg.scenario);
  const bool linear = cfg.algorithm == Algorithm::Nlms ||
                      (cfg.algorithm == Algorithm::Klms && cfg.scenario == Scenario::SteadyState);

  FilterState st;
  LinearFilterState lin;
  if (linear) {
    lin.step_size = cfg.eta;
  } else {
    st.kernel.gamma = cfg.gamma;
    st.lambda = cfg.lambda;
    st.sigma_d2 = cfg.sigma_d2;
    st.sigma_n2 = cfg.sigma_n2;
    st.budget = cfg.budget;
    st.prune_threshold = cfg.prune_threshold;
  }
  const ObservationModel model{lik, cfg.sigma_n2};

  MetricSeries series;
  series.steps.reserve(stream.size());
  for (const StreamSample& s : stream) {
    const double score = linear
                             ? (lin.weights.size() == 0 ? 0.0 : lin.weights.dot(s.x))
                             : predict_score(st, s.x);
    const double prediction = mean_from_score(lik, score);

    switch (cfg.algorithm) {
      case Algorithm::Klms:
        if (cfg.scenario == Scenario::SteadyState)
          lms_step(lin, s.x, s.y);
        else
          klms_step_sgd(st, s.x, s.y, cfg.eta);
        break;
      case Algorithm::Fklms:
        fklms_step(st, s.x, s.y);
        break;
      case Algorithm::Norma:
        norma_step(st, s.x, s.y, cfg.eta);
        break;
      case Algorithm::Qklms:
        qklms_step(st, s.x, s.y, cfg.eta, cfg.eps_q);
        break;
      case Algorithm::Nlms:
        nlms_step(lin, s.x, s.y);
        break;
      case Algorithm::PoissonKlms:
      case Algorithm::BernoulliKlms:
        glm_map_step(st, s.x, s.y, model);
        break;
    }
    if (!linear) apply_pruning(st);

    StepRecord rec;
    rec.step = s.t;
    rec.prediction = prediction;
    rec.observation = s.y;
    rec.truth = s.truth;
    const double e = prediction - s.y;
    rec.squared_error = e * e;
    rec.center_count = linear ? 0 : static_cast<int>(st.centers.size());
    series.steps.push_back(rec);
  }

  series.nmse_db = safe_nmse_db(sums_over(series.steps, 0, series.steps.size()));
  const std::size_t start = static_cast<std::size_t>(cfg.asymptotic_start);
  const std::size_t window = static_cast<std::size_t>(cfg.asymptotic_window);
  series.asymptotic_nmse_db =
      series.steps.size() >= start + window
          ? safe_nmse_db(sums_over(series.steps, start, start + window))
          : kNan;
  return series;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ExperimentResult result = run_repeats(cfg, nullptr, nullptr);
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    if (cfg.log_steps)
      write_steps_csv(cfg, result, (dir / (cfg.run_id + "_steps.csv")).string());
    write_summary_csv(cfg, result, (dir / (cfg.run_id + "_summary.csv")).string());
  }
  return result;
}

ExperimentConfig with_parameter(const ExperimentConfig& cfg, const std::string& parameter,
                                double value) {
  ExperimentConfig out = cfg;
  if (parameter == "eta") {
    out.eta = value;
  } else if (parameter == "lambda") {
    out.lambda = value;
  } else if (parameter == "gamma") {
    out.gamma = value;
  } else if (parameter == "sigma_d2") {
    out.sigma_d2 = value;
  } else if (parameter == "sigma_n2") {
    out.sigma_n2 = value;
  } else if (parameter == "eps_q") {
    out.eps_q = value;
  } else if (parameter == "budget") {
    if (!(value >= 1.0) || value != std::floor(value))
      throw ConfigError("scan: budget values must be positive integers");
    out.budget = static_cast<int>(value);
  } else if (parameter == "prune_threshold") {
    out.prune_threshold = value;
  } else {
    throw ConfigError("scan: unknown parameter '" + parameter +
                      "' (expected eta, lambda, gamma, sigma_d2, sigma_n2, eps_q, budget or "
                      "prune_threshold)");
  }
  return out;
}

ScanResult run_scan(const ExperimentConfig& cfg, const ScanSpec& scan) {
  if (scan.values.empty()) throw ConfigError("scan: candidate list must be non-empty");
  validate_config(cfg);

  // Validate the whole grid before any work so a bad value fails fast.
  std::vector<ExperimentConfig> candidates;
  candidates.reserve(scan.values.size());
  for (double v : scan.values) {
    ExperimentConfig c = with_parameter(cfg, scan.parameter, v);
    c.output_dir.clear();
    c.log_steps = false;
    validate_config(c);
    candidates.push_back(std::move(c));
  }

  // Candidates share streams: one generation per repeat, reused throughout.
  std::vector<std::optional<Stream>> cache(static_cast<std::size_t>(cfg.repeats));
  std::vector<std::string> gen_errors(static_cast<std::size_t>(cfg.repeats));
  for_each_index(cfg.repeats, cfg.threads, [&](int r) {
    const std::size_t i = static_cast<std::size_t>(r);
    try {
      cache[i] = make_stream(cfg, r);
    } catch (const std::exception& e) {
      gen_errors[i] = e.what();
    }
  });

  ScanResult result;
  bool have_best = false;
  double best_nmse = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const ExperimentResult er = run_repeats(candidates[i], &cache, &gen_errors);
    result.candidates.emplace_back(scan.values[i], er.summary);
    const double nmse = er.summary.nmse_db;
    if (!std::isfinite(nmse)) continue;
    const bool better =
        !have_best || nmse < best_nmse || (nmse == best_nmse && scan.values[i] < result.best_value);
    if (better) {
      have_best = true;
      best_nmse = nmse;
      result.best_value = scan.values[i];
      result.best_summary = er.summary;
    }
  }
  if (!have_best) throw NumericalError("scan: no candidate produced a finite NMSE");

  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    write_scan_csv(cfg, scan, result,
                   (dir / (cfg.run_id + "_scan_" + scan.parameter + ".csv")).string());
  }
  return result;
}

void write_steps_csv(const ExperimentConfig& cfg, const ExperimentResult& result,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_steps_csv: cannot open " + path);
  out << "run_id,repeat,step,algorithm,prediction,observation,truth,squared_error,center_count\n";
  const std::string alg = to_string(cfg.algorithm);
  for (const RepeatOutcome& r : result.repeats) {
    if (r.failed) continue;
    for (const StepRecord& s : r.series.steps) {
      out << cfg.run_id << ',' << format_int(r.repeat) << ',' << format_int(s.step) << ',' << alg
          << ',' << format_double(s.prediction) << ',' << format_double(s.observation) << ','
          << format_double(s.truth) << ',' << format_double(s.squared_error) << ','
          << format_int(s.center_count) << '\n';
    }
  }
  if (!out) throw ConfigError("write_steps_csv: write failed for " + path);
}

void write_summary_csv(const ExperimentConfig& cfg, const ExperimentResult& result,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_summary_csv: cannot open " + path);
  out << "run_id,algorithm,nmse_db,asymptotic_nmse_db,mean_center_count,repeats\n";
  const AggregateSummary& s = result.summary;
  out << cfg.run_id << ',' << to_string(cfg.algorithm) << ',' << format_double(s.nmse_db) << ','
      << format_double(s.asymptotic_nmse_db) << ',' << format_double(s.mean_center_count) << ','
      << format_int(s.repeats) << '\n';
  if (!out) throw ConfigError("write_summary_csv: write failed for " + path);
}

}  // namespace kaf
