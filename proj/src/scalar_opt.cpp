#include "kaf/scalar_opt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "kaf/errors.hpp"

namespace kaf {

namespace {
constexpr double kBracketLimit = 1e6;
}

double maximize_concave(const ScalarObjective& obj, double tol, int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("maximize_concave: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("maximize_concave: max_iter must be positive");

  // Grow [lo, hi] outward until gradient(lo) >= 0 >= gradient(hi). The
  // gradient is strictly decreasing, so this brackets the unique root.
  double lo = -1.0;
  double hi = 1.0;
  while (obj.gradient(lo) < 0.0) {
    hi = lo;
    lo *= 2.0;
    if (lo < -kBracketLimit) {
      throw NumericalError("maximize_concave: no gradient sign change by a = -1e6");
    }
  }
  while (obj.gradient(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > kBracketLimit) {
      throw NumericalError("maximize_concave: no gradient sign change by a = 1e6");
    }
  }

  double x = std::clamp(0.0, lo, hi);
  for (int i = 0; i < max_iter; ++i) {
    const double g = obj.gradient(x);
    if (std::abs(g) <= tol) return x;
    if (g > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double h = obj.curvature(x);
    double next = x - g / h;
    if (!std::isfinite(next) || next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);  // Newton left the bracket; bisect instead
    }
    x = next;
  }
  throw NumericalError("maximize_concave: max_iter exceeded");
}

}  // namespace kaf
