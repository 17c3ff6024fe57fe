#include "kaf/datagen.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "kaf/csv.hpp"
#include "kaf/errors.hpp"

namespace kaf {

namespace {

void check_length(int n) {
  if (n <= 0) throw std::invalid_argument("stream length must be positive");
}

}  // namespace

Eigen::MatrixXd gp_covariance(const Eigen::VectorXd& ts, const Eigen::VectorXd& xs,
                              double temporal_ls, double spatial_ls) {
  if (ts.size() != xs.size()) throw std::invalid_argument("gp_covariance: site count mismatch");
  if (temporal_ls <= 0.0 || spatial_ls <= 0.0)
    throw std::invalid_argument("gp_covariance: length scales must be positive");
  const Eigen::Index n = ts.size();
  const double ct = 1.0 / (2.0 * temporal_ls * temporal_ls);
  const double cx = 1.0 / (2.0 * spatial_ls * spatial_ls);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dt = ts[i] - ts[j];
      const double dx = xs[i] - xs[j];
      k(i, j) = std::exp(-ct * dt * dt - cx * dx * dx);
    }
  }
  return k;
}

Eigen::VectorXd gp_latent(const Eigen::VectorXd& ts, const Eigen::VectorXd& xs,
                          double temporal_ls, double spatial_ls, std::mt19937_64& rng) {
  const Eigen::MatrixXd k = gp_covariance(ts, xs, temporal_ls, spatial_ls);
  const Eigen::Index n = k.rows();

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = gauss(rng);

  // Nearby sites make the covariance nearly singular; escalate the diagonal
  // jitter until the factorization succeeds.
  for (double jitter = 1e-10; jitter <= 1e-6; jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(kj);
    if (llt.info() == Eigen::Success) return llt.matrixL() * z;
  }
  throw NumericalError("gp_latent: covariance factorization failed at jitter 1e-6");
}

Stream gp_stream(const GpStreamConfig& cfg) {
  check_length(cfg.n);
  if (cfg.snr_db < -300.0 || cfg.snr_db > 300.0)
    throw std::invalid_argument("gp_stream: snr_db out of range");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Draw order: n input locations, then the n latent normals, then n noise
  // normals. The latent has unit marginal variance, so SNR fixes the noise
  // variance directly.
  Eigen::VectorXd ts(cfg.n), xs(cfg.n);
  for (int t = 0; t < cfg.n; ++t) {
    ts[t] = static_cast<double>(t);
    xs[t] = unif(rng);
  }
  const Eigen::VectorXd f = gp_latent(ts, xs, cfg.temporal_ls, cfg.spatial_ls, rng);
  const double noise_sd = std::sqrt(std::pow(10.0, -cfg.snr_db / 10.0));

  Stream out(cfg.n);
  for (int t = 0; t < cfg.n; ++t) {
    out[t].t = t;
    out[t].x = Eigen::VectorXd::Constant(1, xs[t]);
    out[t].truth = f[t];
    out[t].y = f[t] + noise_sd * gauss(rng);
  }
  return out;
}

double tuning_rate(double x_deg, double mu_deg, double gain, double offset) {
  const double rad = (x_deg - mu_deg) * std::numbers::pi / 180.0;
  return std::exp(gain * std::cos(rad) + offset);
}

Stream tuning_stream(const TuningStreamConfig& cfg) {
  check_length(cfg.n);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 360.0);

  // Draw order per step: stimulus angle, then the Poisson count.
  Stream out(cfg.n);
  for (int t = 0; t < cfg.n; ++t) {
    const double mu = (static_cast<double>(t) / cfg.n) * cfg.total_drift_deg;
    const double x = unif(rng);
    const double rate = tuning_rate(x, mu, cfg.gain, cfg.offset);
    std::poisson_distribution<long> pois(rate);
    out[t].t = t;
    out[t].x = Eigen::VectorXd::Constant(1, x);
    out[t].truth = rate;
    out[t].y = static_cast<double>(pois(rng));
  }
  return out;
}

Stream boundary_stream(const BoundaryStreamConfig& cfg) {
  check_length(cfg.n);
  if (cfg.radius <= 0.0) throw std::invalid_argument("boundary_stream: radius must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);

  // Draw order per step: x coordinate, then y coordinate.
  Stream out(cfg.n);
  for (int t = 0; t < cfg.n; ++t) {
    const double frac = cfg.n > 1 ? static_cast<double>(t) / (cfg.n - 1) : 0.0;
    const Eigen::Vector2d center = cfg.start + frac * (cfg.end - cfg.start);
    Eigen::Vector2d x(unif(rng), unif(rng));
    const double label = (x - center).norm() < cfg.radius ? 1.0 : 0.0;
    out[t].t = t;
    out[t].x = x;
    out[t].truth = label;
    out[t].y = label;
  }
  return out;
}

Stream random_walk_stream(const RandomWalkConfig& cfg) {
  check_length(cfg.n);
  if (cfg.dim <= 0) throw std::invalid_argument("random_walk_stream: dim must be positive");
  if (cfg.sigma_q2 < 0.0) throw std::invalid_argument("random_walk_stream: sigma_q2 must be >= 0");
  if (cfg.sigma_n2 < 0.0) throw std::invalid_argument("random_walk_stream: sigma_n2 must be >= 0");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double noise_sd = std::sqrt(cfg.sigma_n2);
  // Total drift variance sigma_q2 splits evenly across coordinates.
  const double q_sd = std::sqrt(cfg.sigma_q2 / cfg.dim);

  // Draw order per step: dim normals for the input direction, one noise
  // normal, then (only when sigma_q2 > 0) dim normals for the weight drift.
  // The sample records the target weights before they drift.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(cfg.dim);
  Stream out(cfg.n);
  for (int t = 0; t < cfg.n; ++t) {
    Eigen::VectorXd x(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) x[i] = gauss(rng);
    const double norm = x.norm();
    if (norm < 1e-300) {
      x.setZero();
      x[0] = 1.0;
    } else {
      x /= norm;
    }
    const double truth = w.dot(x);
    out[t].t = t;
    out[t].x = x;
    out[t].truth = truth;
    out[t].y = truth + noise_sd * gauss(rng);
    if (cfg.sigma_q2 > 0.0) {
      for (int i = 0; i < cfg.dim; ++i) w[i] += q_sd * gauss(rng);
    }
  }
  return out;
}

void write_stream_csv(const Stream& stream, const std::string& path) {
  if (stream.empty()) throw std::invalid_argument("write_stream_csv: empty stream");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("write_stream_csv: cannot open " + path);
  const Eigen::Index dim = stream.front().x.size();
  out << "t";
  for (Eigen::Index i = 0; i < dim; ++i) out << ",x_" << i;
  out << ",y,truth\n";
  for (const StreamSample& s : stream) {
    if (s.x.size() != dim) throw std::invalid_argument("write_stream_csv: ragged input dimensions");
    out << format_int(s.t);
    for (Eigen::Index i = 0; i < dim; ++i) out << ',' << format_double(s.x[i]);
    out << ',' << format_double(s.y) << ',' << format_double(s.truth) << '\n';
  }
  if (!out) throw ConfigError("write_stream_csv: write failed for " + path);
}

}  // namespace kaf
