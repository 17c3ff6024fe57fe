#include "kaf/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kaf {

namespace {

void check_finite_observation(double y) {
  if (!std::isfinite(y)) {
    throw std::invalid_argument("filter step: observation is not finite");
  }
}

void check_input_dimension(const FilterState& state, const InputPoint& x) {
  if (x.size() < 1) {
    throw std::invalid_argument("filter step: zero-dimensional input");
  }
  if (!state.centers.empty() && state.centers.front().point.size() != x.size()) {
    throw std::invalid_argument("filter step: input dimension does not match expansion");
  }
}

void check_state_space_params(const FilterState& state) {
  if (!(state.sigma_d2 > 0.0) || !(state.sigma_n2 > 0.0)) {
    throw std::invalid_argument("filter step: sigma_d2 and sigma_n2 must be positive");
  }
}

void check_lambda(const FilterState& state) {
  if (!(state.lambda > 0.0) || state.lambda > 1.0) {
    throw std::invalid_argument("filter step: lambda must be in (0,1]");
  }
}

void append_center(FilterState& state, const InputPoint& x, double coeff) {
  state.centers.push_back(Center{x, coeff, state.step});
}

void decay_coefficients(FilterState& state) {
  for (Center& c : state.centers) c.coeff *= state.lambda;
}

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double eta_prime(const FilterState& state) { return state.sigma_d2 / state.sigma_n2; }

double effective_eta(const FilterState& state) {
  const double ep = eta_prime(state);
  return ep / (1.0 + ep);
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double t = std::exp(z);
  return t / (1.0 + t);
}

double predict_score(const FilterState& state, const InputPoint& x) {
  check_input_dimension(state, x);
  double score = 0.0;
  for (const Center& c : state.centers) {
    score += c.coeff * kernel_eval(state.kernel, c.point, x);
  }
  return score;
}

Eigen::VectorXd predict_scores(const FilterState& state, const Eigen::MatrixXd& xs) {
  if (state.centers.empty()) return Eigen::VectorXd::Zero(xs.rows());
  const Eigen::Index d = state.centers.front().point.size();
  if (xs.cols() != d) {
    throw std::invalid_argument("predict_scores: query dimension does not match expansion");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(state.centers.size());
  Eigen::MatrixXd centers(m, d);
  Eigen::VectorXd coeffs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    centers.row(i) = state.centers[static_cast<std::size_t>(i)].point.transpose();
    coeffs[i] = state.centers[static_cast<std::size_t>(i)].coeff;
  }
  // |q - c|^2 = |q|^2 + |c|^2 - 2 q.c, evaluated as one GEMM.
  Eigen::MatrixXd d2 = -2.0 * xs * centers.transpose();
  d2.colwise() += xs.rowwise().squaredNorm();
  d2.rowwise() += centers.rowwise().squaredNorm().transpose();
  return (-state.kernel.gamma * d2.array()).exp().matrix() * coeffs;
}

double mean_from_score(Likelihood tag, double score) {
  switch (tag) {
    case Likelihood::Gaussian:
      return score;
    case Likelihood::Poisson:
      return std::exp(score);
    case Likelihood::Bernoulli:
      return logistic(score);
  }
  throw std::invalid_argument("mean_from_score: unknown observation model");
}

double predict_mean(const FilterState& state, const ObservationModel& model, const InputPoint& x) {
  return mean_from_score(model.tag, predict_score(state, x));
}

void klms_step_sgd(FilterState& state, const InputPoint& x, double y, double eta) {
  check_finite_observation(y);
  check_input_dimension(state, x);
  if (!(eta > 0.0) || !(eta < 1.0)) {
    throw std::invalid_argument("klms_step_sgd: eta must be in (0,1)");
  }
  const double err = y - predict_score(state, x);
  append_center(state, x, eta * err);
  ++state.step;
}

void klms_step_bayes(FilterState& state, const InputPoint& x, double y) {
  check_finite_observation(y);
  check_input_dimension(state, x);
  check_state_space_params(state);
  const double ep = eta_prime(state);
  const double kxx = kernel_eval(state.kernel, x, x);
  const double err = y - predict_score(state, x);
  append_center(state, x, ep * err / (1.0 + ep * kxx));
  ++state.step;
}

void fklms_step(FilterState& state, const InputPoint& x, double y) {
  check_finite_observation(y);
  check_input_dimension(state, x);
  check_state_space_params(state);
  check_lambda(state);
  decay_coefficients(state);
  const double ep = eta_prime(state);
  const double kxx = kernel_eval(state.kernel, x, x);
  const double err = y - predict_score(state, x);  // error against decayed expansion
  append_center(state, x, ep * err / (1.0 + ep * kxx));
  ++state.step;
}

void norma_step(FilterState& state, const InputPoint& x, double y, double eta) {
  check_finite_observation(y);
  check_input_dimension(state, x);
  check_lambda(state);
  if (!(eta > 0.0)) {
    throw std::invalid_argument("norma_step: eta must be positive");
  }
  const double err = y - predict_score(state, x);  // error before the decay
  decay_coefficients(state);
  append_center(state, x, eta * err);
  ++state.step;
}

void qklms_step(FilterState& state, const InputPoint& x, double y, double eta, double eps_q) {
  check_finite_observation(y);
  check_input_dimension(state, x);
  if (!(eta > 0.0)) throw std::invalid_argument("qklms_step: eta must be positive");
  if (!(eps_q > 0.0)) throw std::invalid_argument("qklms_step: eps_q must be positive");
  const double err = y - predict_score(state, x);
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.centers.size(); ++i) {
    const double dist = (state.centers[i].point - x).norm();
    if (dist < best) {  // strict: equidistant centers merge into the earliest
      best = dist;
      nearest = i;
    }
  }
  if (best <= eps_q) {
    state.centers[nearest].coeff += eta * err;
  } else {
    append_center(state, x, eta * err);
  }
  ++state.step;
}

void nlms_step(LinearFilterState& state, const InputPoint& x, double y) {
  check_finite_observation(y);
  if (x.size() < 1) throw std::invalid_argument("nlms_step: zero-dimensional input");
  if (!(state.step_size > 0.0) || !(state.step_size < 2.0)) {
    throw std::invalid_argument("nlms_step: step_size must be in (0,2)");
  }
  if (state.weights.size() == 0) state.weights = Eigen::VectorXd::Zero(x.size());
  if (state.weights.size() != x.size()) {
    throw std::invalid_argument("nlms_step: input dimension does not match weights");
  }
  constexpr double eps0 = 1e-8;
  const double err = y - state.weights.dot(x);
  state.weights += state.step_size * err / (eps0 + x.squaredNorm()) * x;
}

void lms_step(LinearFilterState& state, const InputPoint& x, double y) {
  check_finite_observation(y);
  if (x.size() < 1) throw std::invalid_argument("lms_step: zero-dimensional input");
  if (!(state.step_size > 0.0)) {
    throw std::invalid_argument("lms_step: step_size must be positive");
  }
  if (state.weights.size() == 0) state.weights = Eigen::VectorXd::Zero(x.size());
  if (state.weights.size() != x.size()) {
    throw std::invalid_argument("lms_step: input dimension does not match weights");
  }
  const double err = y - state.weights.dot(x);
  state.weights += state.step_size * err * x;
}

ScalarObjective poisson_map_objective(double score, double y, double sigma_d2) {
  ScalarObjective obj;
  obj.value = [=](double a) {
    return y * (score + a) - std::exp(score + a) - a * a / (2.0 * sigma_d2);
  };
  obj.gradient = [=](double a) { return y - std::exp(score + a) - a / sigma_d2; };
  obj.curvature = [=](double a) { return -std::exp(score + a) - 1.0 / sigma_d2; };
  return obj;
}

ScalarObjective bernoulli_map_objective(double score, double y, double sigma_d2) {
  ScalarObjective obj;
  obj.value = [=](double a) {
    return -y * softplus(-(score + a)) - (1.0 - y) * softplus(score + a) -
           a * a / (2.0 * sigma_d2);
  };
  obj.gradient = [=](double a) { return y - logistic(score + a) - a / sigma_d2; };
  obj.curvature = [=](double a) {
    const double p = logistic(score + a);
    return -p * (1.0 - p) - 1.0 / sigma_d2;
  };
  return obj;
}

void glm_map_step(FilterState& state, const InputPoint& x, double y,
                  const ObservationModel& model) {
  check_input_dimension(state, x);
  check_state_space_params(state);
  check_lambda(state);
  check_finite_observation(y);
  switch (model.tag) {
    case Likelihood::Poisson:
      if (y < 0.0 || std::floor(y) != y) {
        throw std::invalid_argument("glm_map_step: Poisson observation must be a count");
      }
      break;
    case Likelihood::Bernoulli:
      if (y != 0.0 && y != 1.0) {
        throw std::invalid_argument("glm_map_step: Bernoulli observation must be 0 or 1");
      }
      break;
    case Likelihood::Gaussian:
      throw std::invalid_argument(
          "glm_map_step: Gaussian model has a closed-form update, use fklms_step");
  }
  const double kxx = kernel_eval(state.kernel, x, x);
  if (std::abs(kxx - 1.0) > 1e-12) {
    throw std::invalid_argument("glm_map_step: requires a normalized kernel, k(x,x) = 1");
  }
  decay_coefficients(state);
  const double s = predict_score(state, x);
  const ScalarObjective obj = model.tag == Likelihood::Poisson
                                  ? poisson_map_objective(s, y, state.sigma_d2)
                                  : bernoulli_map_objective(s, y, state.sigma_d2);
  const double alpha = maximize_concave(obj);
  append_center(state, x, alpha);
  ++state.step;
}

void prune_threshold(FilterState& state, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("prune_threshold: threshold must be >= 0");
  std::erase_if(state.centers,
                [threshold](const Center& c) { return std::abs(c.coeff) < threshold; });
}

void prune_budget(FilterState& state) {
  if (!state.budget) return;
  const std::size_t budget = static_cast<std::size_t>(*state.budget);
  while (state.centers.size() > budget) {
    auto oldest = std::min_element(
        state.centers.begin(), state.centers.end(),
        [](const Center& a, const Center& b) { return a.step_added < b.step_added; });
    state.centers.erase(oldest);
  }
}

void apply_pruning(FilterState& state) {
  if (state.prune_threshold) prune_threshold(state, *state.prune_threshold);
  prune_budget(state);
}

}  // namespace kaf
