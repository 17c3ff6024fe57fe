#include "kaf/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace kaf {

ErrorSums nmse_sums(std::span<const double> predictions, std::span<const double> observations) {
  if (predictions.size() != observations.size())
    throw std::invalid_argument("nmse: sequence length mismatch");
  if (predictions.empty()) throw std::invalid_argument("nmse: empty sequences");

  double mean = 0.0;
  for (double o : observations) mean += o;
  mean /= static_cast<double>(observations.size());

  ErrorSums sums;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - observations[i];
    const double d = observations[i] - mean;
    sums.squared_error += e * e;
    sums.observation_variance += d * d;
  }
  if (sums.observation_variance == 0.0)
    throw std::invalid_argument("nmse: observations have zero variance");
  return sums;
}

double nmse_db_from_sums(const ErrorSums& sums) {
  if (sums.observation_variance <= 0.0)
    throw std::invalid_argument("nmse: observation variance must be positive");
  if (sums.squared_error < 0.0) throw std::invalid_argument("nmse: negative squared error");
  if (sums.squared_error == 0.0) return -300.0;
  return std::max(-300.0, 10.0 * std::log10(sums.squared_error / sums.observation_variance));
}

double nmse_db(std::span<const double> predictions, std::span<const double> observations) {
  return nmse_db_from_sums(nmse_sums(predictions, observations));
}

ErrorSums asymptotic_sums(const MetricSeries& series, int start_step, int window) {
  if (start_step < 0 || window <= 0)
    throw std::invalid_argument("asymptotic_nmse: window must be positive");
  if (series.steps.size() < static_cast<std::size_t>(start_step) + static_cast<std::size_t>(window))
    throw std::invalid_argument("asymptotic_nmse: series shorter than start_step + window");
  std::vector<double> pred(static_cast<std::size_t>(window));
  std::vector<double> obs(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i) {
    const StepRecord& r = series.steps[static_cast<std::size_t>(start_step + i)];
    pred[static_cast<std::size_t>(i)] = r.prediction;
    obs[static_cast<std::size_t>(i)] = r.observation;
  }
  return nmse_sums(pred, obs);
}

double asymptotic_nmse(const MetricSeries& series, int start_step, int window) {
  return nmse_db_from_sums(asymptotic_sums(series, start_step, window));
}

double function_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("function_error: grid size mismatch");
  if (estimate.size() == 0) throw std::invalid_argument("function_error: empty grid");
  const double denom = truth.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("function_error: truth is identically zero");
  return (estimate - truth).squaredNorm() / denom;
}

double steady_state_theory(const SteadyStateParams& p) {
  if (!(p.eta > 0.0 && p.eta < 2.0))
    throw std::invalid_argument("steady_state_theory: eta must lie in (0, 2)");
  if (p.sigma_q2 < 0.0) throw std::invalid_argument("steady_state_theory: sigma_q2 must be >= 0");
  if (p.sigma_n2 < 0.0) throw std::invalid_argument("steady_state_theory: sigma_n2 must be >= 0");
  return (p.sigma_q2 + p.eta * p.eta * p.sigma_n2) / (p.eta * (2.0 - p.eta));
}

}  // namespace kaf
