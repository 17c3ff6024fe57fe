#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace kaf {

using InputPoint = Eigen::VectorXd;

/// Squared-exponential kernel k(a,b) = exp(-gamma * |a-b|^2), so k(x,x) = 1.
/// Conversions: gamma = 1/(2h^2) for a kernel size h, gamma = 1/c for the
/// exp(-(x-y)^2/c) parameterization.
struct KernelSpec {
  double gamma = 1.0;
};

/// Evaluates k(a,b). Throws std::invalid_argument on dimension mismatch.
double kernel_eval(const KernelSpec& spec, const InputPoint& a, const InputPoint& b);

/// Column vector of k(x, points.row(i)) for all rows, single pass over the
/// point matrix. Equivalent to calling kernel_eval per row.
Eigen::VectorXd kernel_eval_rows(const KernelSpec& spec, const Eigen::MatrixXd& points,
                                 const InputPoint& x);

// Per-thread count of scalar kernel evaluations, for cost instrumentation.
// kernel_eval adds 1, kernel_eval_rows adds the number of rows.
std::uint64_t kernel_eval_count();
void reset_kernel_eval_count();

}  // namespace kaf
