#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kaf/kernels.hpp"

namespace kaf {

/// One element of a data stream. `truth` is the noiseless target (latent
/// function value, rate, or label) and exists for metrics only; filter
/// updates never see it.
struct StreamSample {
  std::int64_t t = 0;
  InputPoint x;
  double y = 0.0;
  double truth = 0.0;
};

using Stream = std::vector<StreamSample>;

/// Spatio-temporal GP regression stream: x_t uniform on [0,1], latent f
/// jointly Gaussian with unit marginal variance and separable covariance
/// exp(-(t-s)^2/(2 temporal_ls^2)) * exp(-(x-x')^2/(2 spatial_ls^2)),
/// y = f + noise at the configured SNR.
struct GpStreamConfig {
  int n = 1000;
  double temporal_ls = 10.0;
  double spatial_ls = 0.2;
  double snr_db = 10.0;
  std::uint64_t seed = 0;
};

/// Drifting tuning-curve stream: x_t uniform on [0,360) degrees, counts
/// y_t ~ Poisson(exp(gain*cos(x_t - mu_t) + offset)) with the preferred
/// stimulus mu_t = (t/n) * total_drift_deg.
struct TuningStreamConfig {
  int n = 1000;
  double gain = 4.0;
  double offset = -0.1;
  double total_drift_deg = 100.0;
  std::uint64_t seed = 0;
};

/// Translating circular decision boundary: x_t uniform on [-2,2]^2, label 1
/// iff x_t lies inside the circle of the given radius around a center that
/// moves linearly from `start` to `end` over the run. Labels are noise-free.
struct BoundaryStreamConfig {
  int n = 1000;
  double radius = 0.5;
  Eigen::Vector2d start{-1.0, -1.0};
  Eigen::Vector2d end{1.0, 1.0};
  std::uint64_t seed = 0;
};

/// Linear random-walk target for steady-state validation: w*_0 = 0,
/// w*_{t+1} = w*_t + q_t with isotropic Gaussian q of total variance
/// sigma_q2, inputs uniform on the unit sphere, y = w*.x + N(0, sigma_n2).
struct RandomWalkConfig {
  int n = 1000;
  int dim = 8;
  double sigma_q2 = 0.0;
  double sigma_n2 = 0.01;
  std::uint64_t seed = 0;
};

Stream gp_stream(const GpStreamConfig& cfg);
Stream tuning_stream(const TuningStreamConfig& cfg);
Stream boundary_stream(const BoundaryStreamConfig& cfg);
Stream random_walk_stream(const RandomWalkConfig& cfg);

/// Joint covariance of the GP latent at sites (ts[i], xs[i]).
Eigen::MatrixXd gp_covariance(const Eigen::VectorXd& ts, const Eigen::VectorXd& xs,
                              double temporal_ls, double spatial_ls);

/// Draws the GP latent at the given sites by dense factorization, with
/// diagonal jitter escalating from 1e-10 to 1e-6 on failure.
Eigen::VectorXd gp_latent(const Eigen::VectorXd& ts, const Eigen::VectorXd& xs,
                          double temporal_ls, double spatial_ls, std::mt19937_64& rng);

/// exp(gain * cos(x - mu) + offset), angles in degrees.
double tuning_rate(double x_deg, double mu_deg, double gain, double offset);

/// Writes columns t, x_0..x_{d-1}, y, truth (UTF-8, LF, '.' decimals).
void write_stream_csv(const Stream& stream, const std::string& path);

}  // namespace kaf
