#include "kaf/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace kaf {

namespace {
thread_local std::uint64_t g_kernel_evals = 0;
}

double kernel_eval(const KernelSpec& spec, const InputPoint& a, const InputPoint& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("kernel_eval: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  ++g_kernel_evals;
  return std::exp(-spec.gamma * (a - b).squaredNorm());
}

Eigen::VectorXd kernel_eval_rows(const KernelSpec& spec, const Eigen::MatrixXd& points,
                                 const InputPoint& x) {
  if (points.cols() != x.size()) {
    throw std::invalid_argument("kernel_eval_rows: dimension mismatch");
  }
  g_kernel_evals += static_cast<std::uint64_t>(points.rows());
  return (-spec.gamma * (points.rowwise() - x.transpose()).rowwise().squaredNorm())
      .array()
      .exp()
      .matrix();
}

std::uint64_t kernel_eval_count() { return g_kernel_evals; }

void reset_kernel_eval_count() { g_kernel_evals = 0; }

}  // namespace kaf
