#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

namespace kaf {

struct StepRecord {
  std::int64_t step = 0;
  double prediction = 0.0;
  double observation = 0.0;
  double truth = 0.0;
  double squared_error = 0.0;
  int center_count = 0;
};

struct MetricSeries {
  std::vector<StepRecord> steps;
  double nmse_db = 0.0;
  double asymptotic_nmse_db = 0.0;
};

/// Raw sums behind an NMSE value. Additive, so repeats pool by summing
/// parts before taking the ratio and the log.
struct ErrorSums {
  double squared_error = 0.0;
  double observation_variance = 0.0;

  ErrorSums& operator+=(const ErrorSums& o) {
    squared_error += o.squared_error;
    observation_variance += o.observation_variance;
    return *this;
  }
};

ErrorSums nmse_sums(std::span<const double> predictions, std::span<const double> observations);

/// 10 log10(squared_error / observation_variance), floored at -300 dB so a
/// zero-error series stays numeric.
double nmse_db_from_sums(const ErrorSums& sums);

/// One-step prediction NMSE in dB: 10 log10(sum (pred-obs)^2 / sum (obs-mean)^2).
double nmse_db(std::span<const double> predictions, std::span<const double> observations);

/// NMSE over the step range [start_step, start_step + window) of the series.
double asymptotic_nmse(const MetricSeries& series, int start_step = 200, int window = 800);

ErrorSums asymptotic_sums(const MetricSeries& series, int start_step = 200, int window = 800);

/// Normalized squared deviation between two functions tabulated on the same
/// grid: sum (estimate-truth)^2 / sum truth^2.
double function_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

struct SteadyStateParams {
  double eta = 0.1;
  double sigma_q2 = 0.0;
  double sigma_n2 = 1.0;
};

/// Closed-form steady-state excess error of LMS tracking a random-walk
/// target: (sigma_q2 + eta^2 sigma_n2) / (eta (2 - eta)).
double steady_state_theory(const SteadyStateParams& p);

}  // namespace kaf
