#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "kaf/kernels.hpp"

using kaf::KernelSpec;

namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST_CASE("kernel value at identical points is exactly 1") {
  KernelSpec spec{12.5};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd a(3);
    a << gauss(rng), gauss(rng), gauss(rng);
    CHECK(kaf::kernel_eval(spec, a, a) == 1.0);
  }
}

TEST_CASE("closed-form values at the benchmark bandwidths") {
  // gamma = 1/c for the exp(-(x-y)^2/c) parameterization: c=100 -> 0.01.
  CHECK(kaf::kernel_eval(KernelSpec{0.01}, vec1(0.0), vec1(10.0)) ==
        doctest::Approx(0.36787944117144233).epsilon(1e-15));
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 0.1, 0.0;
  CHECK(kaf::kernel_eval(KernelSpec{10.0}, a, b) ==
        doctest::Approx(0.9048374180359595).epsilon(1e-15));
}

TEST_CASE("symmetry is exact") {
  KernelSpec spec{3.7};
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd a(4), b(4);
    for (int d = 0; d < 4; ++d) {
      a[d] = gauss(rng);
      b[d] = gauss(rng);
    }
    CHECK(kaf::kernel_eval(spec, a, b) == kaf::kernel_eval(spec, b, a));
  }
}

TEST_CASE("sampled Gram matrices are positive semidefinite") {
  KernelSpec spec{2.0};
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = 20;
  Eigen::MatrixXd pts(n, 3);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) pts(i, d) = unif(rng);
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram(i, j) = kaf::kernel_eval(spec, pts.row(i).transpose(), pts.row(j).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("kernel decays monotonically along a ray") {
  KernelSpec spec{0.8};
  Eigen::VectorXd a(2), dir(2);
  a << 0.3, -0.2;
  dir << 0.6, 0.8;
  double prev = 1.0;
  for (int i = 1; i <= 40; ++i) {
    const double k = kaf::kernel_eval(spec, a, a + (0.1 * i) * dir);
    CHECK(k <= prev);
    prev = k;
  }
}

TEST_CASE("dimension mismatch is rejected") {
  Eigen::VectorXd a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(kaf::kernel_eval(KernelSpec{1.0}, a, b), std::invalid_argument);
}

TEST_CASE("row-batch evaluation matches the scalar path and is counted") {
  KernelSpec spec{5.0};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd pts(17, 2);
  for (int i = 0; i < pts.rows(); ++i)
    for (int d = 0; d < 2; ++d) pts(i, d) = unif(rng);
  Eigen::VectorXd x(2);
  x << 0.4, 0.9;

  kaf::reset_kernel_eval_count();
  const Eigen::VectorXd batch = kaf::kernel_eval_rows(spec, pts, x);
  CHECK(kaf::kernel_eval_count() == 17);
  for (int i = 0; i < pts.rows(); ++i)
    CHECK(batch[i] == doctest::Approx(kaf::kernel_eval(spec, pts.row(i).transpose(), x))
                          .epsilon(1e-15));

  kaf::reset_kernel_eval_count();
  kaf::kernel_eval(spec, x, x);
  CHECK(kaf::kernel_eval_count() == 1);
}
