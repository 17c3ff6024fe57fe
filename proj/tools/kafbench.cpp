#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kaf/csv.hpp"
#include "kaf/errors.hpp"
#include "kaf/harness.hpp"
#include "kaf/snapshot.hpp"

namespace {

using kaf::ConfigError;

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ConfigError(what + ": '" + text + "' is not a number");
  return v;
}

std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, "--values"));
  if (out.empty()) throw ConfigError("--values: expected at least one number");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct Overrides {
  int repeats = -1;
  std::int64_t seed = -1;
  std::string out_dir;
  int threads = 0;
};

void apply_overrides(kaf::ExperimentConfig& cfg, const Overrides& o) {
  if (o.repeats > 0) cfg.repeats = o.repeats;
  if (o.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(o.seed);
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (o.threads > 0) cfg.threads = o.threads;
}

void print_summary(const kaf::ExperimentConfig& cfg, const kaf::AggregateSummary& s) {
  std::cout << "run_id=" << cfg.run_id << " scenario=" << kaf::to_string(cfg.scenario)
            << " algorithm=" << kaf::to_string(cfg.algorithm) << " repeats=" << s.repeats
            << " failures=" << s.failures << " nmse_db=" << kaf::format_double(s.nmse_db)
            << " asymptotic_nmse_db=" << kaf::format_double(s.asymptotic_nmse_db)
            << " mean_center_count=" << kaf::format_double(s.mean_center_count) << "\n";
}

int report_failures(const std::vector<kaf::RepeatOutcome>& repeats) {
  int failures = 0;
  for (const kaf::RepeatOutcome& r : repeats) {
    if (!r.failed) continue;
    ++failures;
    std::cerr << "repeat " << r.repeat << " failed: " << r.error << "\n";
  }
  return failures;
}

int cmd_run(const std::string& config_path, const Overrides& o) {
  kaf::ExperimentConfig cfg = kaf::load_experiment_config(config_path);
  apply_overrides(cfg, o);
  kaf::validate_config(cfg);
  const kaf::ExperimentResult result = kaf::run_experiment(cfg);
  print_summary(cfg, result.summary);
  return report_failures(result.repeats) > 0 ? 1 : 0;
}

int cmd_scan(const std::string& config_path, const std::string& param, const std::string& values,
             const Overrides& o) {
  kaf::ExperimentConfig cfg = kaf::load_experiment_config(config_path);
  apply_overrides(cfg, o);
  kaf::validate_config(cfg);
  kaf::ScanSpec spec{param, parse_value_list(values)};
  const kaf::ScanResult result = kaf::run_scan(cfg, spec);
  int failures = 0;
  for (const auto& [value, summary] : result.candidates) {
    std::cout << param << "=" << kaf::format_double(value)
              << " nmse_db=" << kaf::format_double(summary.nmse_db)
              << " asymptotic_nmse_db=" << kaf::format_double(summary.asymptotic_nmse_db)
              << " repeats=" << summary.repeats << " failures=" << summary.failures << "\n";
    failures += summary.failures;
  }
  std::cout << "best " << param << "=" << kaf::format_double(result.best_value)
            << " nmse_db=" << kaf::format_double(result.best_summary.nmse_db) << "\n";
  return failures > 0 ? 1 : 0;
}

int cmd_generate(const std::string& scenario_name, const std::string& out_path, std::int64_t seed,
                 int n) {
  const kaf::Scenario scenario = kaf::scenario_from_string(scenario_name);
  const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : 0;
  kaf::Stream stream;
  switch (scenario) {
    case kaf::Scenario::GpTracking: {
      kaf::GpStreamConfig c;
      c.seed = s;
      if (n > 0) c.n = n;
      stream = kaf::gp_stream(c);
      break;
    }
    case kaf::Scenario::PoissonTuning: {
      kaf::TuningStreamConfig c;
      c.seed = s;
      if (n > 0) c.n = n;
      stream = kaf::tuning_stream(c);
      break;
    }
    case kaf::Scenario::LogisticBoundary: {
      kaf::BoundaryStreamConfig c;
      c.seed = s;
      if (n > 0) c.n = n;
      stream = kaf::boundary_stream(c);
      break;
    }
    case kaf::Scenario::SteadyState: {
      kaf::RandomWalkConfig c;
      c.seed = s;
      if (n > 0) c.n = n;
      stream = kaf::random_walk_stream(c);
      break;
    }
  }
  kaf::write_stream_csv(stream, out_path);
  std::cout << "wrote " << stream.size() << " samples to " << out_path << "\n";
  return 0;
}

/// Reads probe points from a CSV with columns x_0..x_{d-1}; extra columns
/// (t, y, truth from `generate`) are ignored.
Eigen::MatrixXd read_probe_csv(const std::string& path, Eigen::Index expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("probe: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("probe: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  std::vector<int> col_of_dim;
  for (Eigen::Index d = 0;; ++d) {
    const std::string name = "x_" + std::to_string(d);
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) break;
    col_of_dim.push_back(static_cast<int>(it - header.begin()));
  }
  if (col_of_dim.empty()) throw ConfigError("probe: no x_0 column in " + path);
  if (expected_dim > 0 && static_cast<Eigen::Index>(col_of_dim.size()) != expected_dim)
    throw ConfigError("probe: file has " + std::to_string(col_of_dim.size()) +
                      " coordinate columns, snapshot expects " + std::to_string(expected_dim));

  std::vector<Eigen::VectorXd> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    Eigen::VectorXd x(static_cast<Eigen::Index>(col_of_dim.size()));
    for (std::size_t d = 0; d < col_of_dim.size(); ++d) {
      const std::size_t col = static_cast<std::size_t>(col_of_dim[d]);
      if (col >= fields.size())
        throw ConfigError("probe: line " + std::to_string(line_no) + " has too few fields");
      x[static_cast<Eigen::Index>(d)] =
          parse_double(fields[col], "probe line " + std::to_string(line_no));
    }
    rows.push_back(std::move(x));
  }
  if (rows.empty()) throw ConfigError("probe: no data rows in " + path);
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = rows[i];
  return xs;
}

int cmd_snapshot(const std::string& in_path, const std::string& probe_path,
                 const std::string& out_path) {
  const kaf::ModelSnapshot snap = kaf::load_snapshot(in_path);
  const Eigen::Index dim =
      snap.state.centers.empty() ? 0 : snap.state.centers.front().point.size();
  const Eigen::MatrixXd xs = read_probe_csv(probe_path, dim);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::binary);
    if (!file) throw ConfigError("snapshot: cannot open " + out_path);
    out = &file;
  }
  const Eigen::VectorXd scores = kaf::predict_scores(snap.state, xs);
  *out << "row,score,mean\n";
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    *out << i << ',' << kaf::format_double(scores[i]) << ','
         << kaf::format_double(kaf::mean_from_score(snap.likelihood, scores[i])) << '\n';
  }
  if (!*out) throw ConfigError("snapshot: write failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel adaptive filtering benchmark"};
  app.require_subcommand(1);

  std::string config_path, param, values, scenario_name, out_path, in_path, probe_path;
  Overrides overrides;
  std::int64_t gen_seed = -1;
  int gen_n = -1;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "path to the JSON experiment config")->required();
  run->add_option("--repeats", overrides.repeats, "override the number of repeats");
  run->add_option("--seed", overrides.seed, "override base_seed");
  run->add_option("--out", overrides.out_dir, "override the output directory");
  run->add_option("--threads", overrides.threads, "override the worker thread count");

  CLI::App* scan = app.add_subcommand("scan", "grid-scan one parameter, pick least NMSE");
  scan->add_option("--config", config_path, "path to the JSON experiment config")->required();
  scan->add_option("--param", param, "parameter to scan")->required();
  scan->add_option("--values", values, "comma-separated candidate values")->required();
  scan->add_option("--repeats", overrides.repeats, "override the number of repeats");
  scan->add_option("--seed", overrides.seed, "override base_seed");
  scan->add_option("--out", overrides.out_dir, "override the output directory");
  scan->add_option("--threads", overrides.threads, "override the worker thread count");

  CLI::App* generate = app.add_subcommand("generate", "export a synthetic stream as CSV");
  generate->add_option("--scenario", scenario_name, "scenario name")->required();
  generate->add_option("--out", out_path, "output CSV path")->required();
  generate->add_option("--seed", gen_seed, "stream seed (default 0)");
  generate->add_option("--n", gen_n, "stream length (default per scenario)");

  CLI::App* snapshot = app.add_subcommand("snapshot", "evaluate a saved filter on probe points");
  snapshot->add_option("--in", in_path, "snapshot JSON path")->required();
  snapshot->add_option("--probe", probe_path, "CSV of probe points (columns x_0..x_{d-1})")
      ->required();
  snapshot->add_option("--out", out_path, "write predictions here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, overrides);
    if (scan->parsed()) return cmd_scan(config_path, param, values, overrides);
    if (generate->parsed()) return cmd_generate(scenario_name, out_path, gen_seed, gen_n);
    if (snapshot->parsed()) return cmd_snapshot(in_path, probe_path, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const kaf::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
