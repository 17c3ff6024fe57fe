#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "kaf/metrics.hpp"

using kaf::ErrorSums;
using kaf::MetricSeries;
using kaf::StepRecord;

TEST_CASE("nmse closed forms") {
  const std::vector<double> obs = {1.0, 2.0, 3.0, 4.0};

  // Perfect predictions hit the documented -300 dB floor.
  CHECK(kaf::nmse_db(obs, obs) == -300.0);

  // Predicting the mean gives exactly 0 dB.
  const std::vector<double> mean(4, 2.5);
  CHECK(kaf::nmse_db(mean, obs) == 0.0);

  // Constant offset c: 10*log10(c^2 / var), var = 1.25 here.
  std::vector<double> shifted = obs;
  for (double& v : shifted) v += 0.5;
  CHECK(kaf::nmse_db(shifted, obs) == doctest::Approx(-6.989700043360187).epsilon(1e-14));
}

TEST_CASE("nmse input validation") {
  const std::vector<double> obs = {1.0, 1.0, 1.0};
  const std::vector<double> pred = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(kaf::nmse_db(pred, obs), std::invalid_argument);  // zero variance
  CHECK_THROWS_AS(kaf::nmse_db(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(kaf::nmse_db(std::vector<double>{}, std::vector<double>{}),
                  std::invalid_argument);
}

TEST_CASE("asymptotic window excludes the transient exactly") {
  MetricSeries series;
  for (int t = 0; t < 1000; ++t) {
    StepRecord r;
    r.step = t;
    r.observation = (t % 2 == 0) ? 0.0 : 1.0;
    // Garbage during the transient, a clean +0.5 offset afterwards.
    r.prediction = t < 200 ? 100.0 : r.observation + 0.5;
    series.steps.push_back(r);
  }
  // Window [200, 1000): num = 800*0.25, den = 800*0.25 -> exactly 0 dB.
  CHECK(kaf::asymptotic_nmse(series, 200, 800) == 0.0);

  MetricSeries tiny;
  tiny.steps.resize(999);
  CHECK_THROWS_AS(kaf::asymptotic_nmse(tiny, 200, 800), std::invalid_argument);
}

TEST_CASE("repeat pooling sums error parts before the log") {
  const std::vector<double> obs1 = {0.0, 2.0};
  const std::vector<double> pred1 = {0.5, 2.0};
  const std::vector<double> obs2 = {1.0, 5.0, 3.0};
  const std::vector<double> pred2 = {1.0, 4.0, 3.0};

  ErrorSums pooled = kaf::nmse_sums(pred1, obs1);
  pooled += kaf::nmse_sums(pred2, obs2);

  // Hand-computed parts: (0.25, 2) and (1, 8).
  CHECK(pooled.squared_error == doctest::Approx(1.25).epsilon(1e-15));
  CHECK(pooled.observation_variance == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(kaf::nmse_db_from_sums(pooled) ==
        doctest::Approx(10.0 * std::log10(1.25 / 10.0)).epsilon(1e-15));
}

TEST_CASE("function error closed forms") {
  Eigen::VectorXd truth(3);
  truth << 1.0, -2.0, 0.5;
  CHECK(kaf::function_error(truth, truth) == 0.0);
  CHECK(kaf::function_error(Eigen::VectorXd::Zero(3), truth) == doctest::Approx(1.0));
  CHECK(kaf::function_error(2.0 * truth, truth) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(kaf::function_error(truth, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(kaf::function_error(truth, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("steady state law closed forms and shape") {
  CHECK(kaf::steady_state_theory({0.5, 0.0, 0.0}) == 0.0);
  CHECK(kaf::steady_state_theory({0.1, 0.0, 1.0}) ==
        doctest::Approx(0.05263157894736842).epsilon(1e-15));
  CHECK(kaf::steady_state_theory({1.0, 0.01, 1.0}) == doctest::Approx(1.01).epsilon(1e-15));

  // Monotone in both variances at fixed eta.
  CHECK(kaf::steady_state_theory({0.3, 0.02, 1.0}) > kaf::steady_state_theory({0.3, 0.01, 1.0}));
  CHECK(kaf::steady_state_theory({0.3, 0.01, 2.0}) > kaf::steady_state_theory({0.3, 0.01, 1.0}));

  // Tracking fails as the learning rate vanishes with drift present.
  CHECK(kaf::steady_state_theory({1e-3, 0.01, 1.0}) > kaf::steady_state_theory({1e-2, 0.01, 1.0}));

  CHECK_THROWS_AS(kaf::steady_state_theory({0.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(kaf::steady_state_theory({2.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(kaf::steady_state_theory({0.5, -1.0, 1.0}), std::invalid_argument);
}
