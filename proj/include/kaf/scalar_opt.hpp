#pragma once

#include <functional>

namespace kaf {

/// A strictly concave, twice-differentiable scalar objective. curvature(a)
/// must be negative for all finite a; the gradient is then strictly
/// decreasing and has at most one root.
struct ScalarObjective {
  std::function<double(double)> value;
  std::function<double(double)> gradient;
  std::function<double(double)> curvature;
};

/// Maximizes a strictly concave objective with safeguarded Newton steps:
/// a sign-change bracket for the gradient is grown outward from [-1, 1],
/// Newton iterates that leave the bracket fall back to bisection. Returns
/// a* with |gradient(a*)| <= tol. Deterministic for identical inputs.
///
/// Throws NumericalError if no sign change is found by |a| = 1e6 or the
/// iteration budget is exhausted.
double maximize_concave(const ScalarObjective& obj, double tol = 1e-10, int max_iter = 100);

}  // namespace kaf
