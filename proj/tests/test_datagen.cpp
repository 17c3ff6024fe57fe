#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kaf/datagen.hpp"
#include "kaf/errors.hpp"

using kaf::Stream;

namespace {

bool streams_identical(const Stream& a, const Stream& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].t != b[i].t || a[i].y != b[i].y || a[i].truth != b[i].truth) return false;
    if ((a[i].x - b[i].x).norm() != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generators are bit-deterministic in the seed") {
  kaf::GpStreamConfig gp;
  gp.n = 64;
  gp.seed = 42;
  CHECK(streams_identical(kaf::gp_stream(gp), kaf::gp_stream(gp)));

  kaf::TuningStreamConfig tune;
  tune.n = 128;
  tune.seed = 42;
  CHECK(streams_identical(kaf::tuning_stream(tune), kaf::tuning_stream(tune)));

  kaf::BoundaryStreamConfig bnd;
  bnd.n = 128;
  bnd.seed = 42;
  CHECK(streams_identical(kaf::boundary_stream(bnd), kaf::boundary_stream(bnd)));

  kaf::RandomWalkConfig walk;
  walk.n = 128;
  walk.dim = 4;
  walk.sigma_q2 = 0.01;
  walk.seed = 42;
  CHECK(streams_identical(kaf::random_walk_stream(walk), kaf::random_walk_stream(walk)));

  gp.seed = 43;  // a different seed must change the draw
  CHECK(!streams_identical(kaf::gp_stream(gp), kaf::gp_stream({64, 10.0, 0.2, 10.0, 42})));
}

TEST_CASE("gp covariance matches the closed form") {
  Eigen::VectorXd ts(2), xs(2);
  ts << 0.0, 0.0;
  xs << 0.0, 0.2;
  const Eigen::MatrixXd k = kaf::gp_covariance(ts, xs, 10.0, 0.2);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(1, 1) == 1.0);
  CHECK(k(0, 1) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(k(0, 1) == k(1, 0));

  ts << 0.0, 10.0;
  xs << 0.5, 0.5;
  const Eigen::MatrixXd kt = kaf::gp_covariance(ts, xs, 10.0, 0.2);
  CHECK(kt(0, 1) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
}

TEST_CASE("gp latent empirical covariance matches the target within 3 SE") {
  // Monte-Carlo oracle: 10 fixed sites, 5000 joint draws.
  const int sites = 10, reps = 5000;
  Eigen::VectorXd ts(sites), xs(sites);
  for (int i = 0; i < sites; ++i) {
    ts[i] = 5.0 * i;
    xs[i] = 0.05 + 0.1 * i;
  }
  const Eigen::MatrixXd target = kaf::gp_covariance(ts, xs, 10.0, 0.2);

  std::mt19937_64 rng(777);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(sites, sites);
  for (int r = 0; r < reps; ++r) {
    const Eigen::VectorXd f = kaf::gp_latent(ts, xs, 10.0, 0.2, rng);
    sum += f * f.transpose();
  }
  const Eigen::MatrixXd emp = sum / reps;
  for (int i = 0; i < sites; ++i) {
    for (int j = 0; j < sites; ++j) {
      const double se = std::sqrt(
          (target(i, i) * target(j, j) + target(i, j) * target(i, j)) / reps);
      CHECK(std::abs(emp(i, j) - target(i, j)) <= 3.0 * se);
    }
  }
}

TEST_CASE("gp stream honors domain and the 10 dB noise level") {
  kaf::GpStreamConfig cfg;
  cfg.n = 1000;
  cfg.seed = 7;
  const Stream s = kaf::gp_stream(cfg);
  REQUIRE(s.size() == 1000);
  double noise_var = 0.0;
  for (const kaf::StreamSample& smp : s) {
    CHECK(smp.x.size() == 1);
    CHECK(smp.x[0] >= 0.0);
    CHECK(smp.x[0] < 1.0);
    const double eps = smp.y - smp.truth;
    noise_var += eps * eps / cfg.n;
  }
  // Noise variance 10^(-10/10) = 0.1, sampling tolerance ~3 SE.
  CHECK(std::abs(noise_var - 0.1) <= 0.015);
}

TEST_CASE("tuning rate closed forms") {
  CHECK(kaf::tuning_rate(33.0, 33.0, 4.0, -0.1) ==
        doctest::Approx(49.40244910553017).epsilon(1e-14));
  CHECK(kaf::tuning_rate(213.0, 33.0, 4.0, -0.1) ==
        doctest::Approx(0.016572675401761255).epsilon(1e-12));
}

TEST_CASE("tuning stream: counts, domain, drift and the gain-0 case") {
  kaf::TuningStreamConfig cfg;
  cfg.n = 1000;
  cfg.seed = 5;
  const Stream s = kaf::tuning_stream(cfg);
  double mean_y = 0.0, mean_rate = 0.0;
  for (const kaf::StreamSample& smp : s) {
    CHECK(smp.x[0] >= 0.0);
    CHECK(smp.x[0] < 360.0);
    CHECK(smp.y >= 0.0);
    CHECK(smp.y == std::floor(smp.y));
    // The preferred stimulus at step t is (t/n) * 100 degrees.
    const double mu = (static_cast<double>(smp.t) / cfg.n) * cfg.total_drift_deg;
    CHECK(smp.truth == doctest::Approx(kaf::tuning_rate(smp.x[0], mu, 4.0, -0.1))
                           .epsilon(1e-12));
    mean_y += smp.y / cfg.n;
    mean_rate += smp.truth / cfg.n;
  }
  CHECK(std::abs(mean_y - mean_rate) <= 0.35);  // Poisson mean matches rate

  kaf::TuningStreamConfig flat = cfg;
  flat.gain = 0.0;
  for (const kaf::StreamSample& smp : kaf::tuning_stream(flat))
    CHECK(smp.truth == doctest::Approx(0.9048374180359595).epsilon(1e-15));
}

TEST_CASE("boundary stream labels the instantaneous circle") {
  kaf::BoundaryStreamConfig cfg;
  cfg.n = 20000;
  cfg.seed = 11;
  const Stream s = kaf::boundary_stream(cfg);
  double positives = 0.0;
  for (const kaf::StreamSample& smp : s) {
    const double frac = static_cast<double>(smp.t) / (cfg.n - 1);
    const Eigen::Vector2d c = cfg.start + frac * (cfg.end - cfg.start);
    const double expected = (smp.x - c).norm() < cfg.radius ? 1.0 : 0.0;
    CHECK(smp.y == expected);
    CHECK(smp.truth == expected);
    CHECK(smp.x.minCoeff() >= -2.0);
    CHECK(smp.x.maxCoeff() <= 2.0);
    positives += smp.y / cfg.n;
  }
  // Area ratio pi*0.25/16, within ~3 binomial SE.
  CHECK(std::abs(positives - 0.04908738521234052) <= 0.0046);
}

TEST_CASE("random walk stream: unit inputs, zero-drift case, drift variance") {
  kaf::RandomWalkConfig cfg;
  cfg.n = 200;
  cfg.dim = 4;
  cfg.sigma_q2 = 0.0;
  cfg.sigma_n2 = 0.04;
  cfg.seed = 9;
  double noise_var = 0.0;
  for (const kaf::StreamSample& smp : kaf::random_walk_stream(cfg)) {
    CHECK(std::abs(smp.x.norm() - 1.0) <= 1e-12);
    CHECK(smp.truth == 0.0);  // weights never move from zero
    noise_var += smp.y * smp.y / cfg.n;
  }
  CHECK(std::abs(noise_var - cfg.sigma_n2) <= 3.0 * cfg.sigma_n2 * std::sqrt(2.0 / cfg.n));

  // E[truth_t^2] = t * sigma_q2 / dim for inputs uniform on the sphere.
  kaf::RandomWalkConfig drift;
  drift.n = 400;
  drift.dim = 4;
  drift.sigma_q2 = 0.01;
  drift.sigma_n2 = 0.01;
  const int runs = 10000;
  const int t_probe = 399;
  double second_moment = 0.0;
  for (int r = 0; r < runs; ++r) {
    drift.seed = 20000 + static_cast<std::uint64_t>(r);
    const Stream s = kaf::random_walk_stream(drift);
    second_moment += s[t_probe].truth * s[t_probe].truth / runs;
  }
  const double expected = t_probe * drift.sigma_q2 / drift.dim;
  CHECK(std::abs(second_moment - expected) <= 0.05 * expected);
}

TEST_CASE("stream CSV export round-trips a value and uses LF endings") {
  kaf::BoundaryStreamConfig cfg;
  cfg.n = 5;
  cfg.seed = 3;
  const Stream s = kaf::boundary_stream(cfg);
  const std::string path = "datagen_test_stream.csv";
  kaf::write_stream_csv(s, path);

  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.find("t,x_0,x_1,y,truth\n") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);

  // First data row starts with "0," and parses back to the exact x_0.
  std::istringstream lines(text);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  const std::size_t c1 = row.find(',');
  const std::size_t c2 = row.find(',', c1 + 1);
  CHECK(std::stod(row.substr(c1 + 1, c2 - c1 - 1)) == s[0].x[0]);
  std::remove(path.c_str());
}

TEST_CASE("invalid generator configs are rejected") {
  kaf::GpStreamConfig gp;
  gp.n = 0;
  CHECK_THROWS_AS(kaf::gp_stream(gp), std::invalid_argument);
  kaf::BoundaryStreamConfig bnd;
  bnd.radius = 0.0;
  CHECK_THROWS_AS(kaf::boundary_stream(bnd), std::invalid_argument);
  kaf::RandomWalkConfig walk;
  walk.dim = 0;
  CHECK_THROWS_AS(kaf::random_walk_stream(walk), std::invalid_argument);
}
