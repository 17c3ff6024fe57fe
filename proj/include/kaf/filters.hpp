#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "kaf/kernels.hpp"
#include "kaf/scalar_opt.hpp"

namespace kaf {

/// One term of the kernel expansion. `coeff` is the effective coefficient
/// with forgetting decay already applied in place.
struct Center {
  InputPoint point;
  double coeff = 0.0;
  std::int64_t step_added = 0;
};

enum class Likelihood { Gaussian, Poisson, Bernoulli };

struct ObservationModel {
  Likelihood tag = Likelihood::Gaussian;
  double sigma_n2 = 1.0;  // observation noise variance, Gaussian only
};

/// Online filter state: the kernel expansion of the MAP weight estimate plus
/// the state-space hyperparameters that drive the per-step updates.
///
/// Invariants: lambda in (0,1]; sigma_d2, sigma_n2 > 0; step_added strictly
/// increasing across `centers`; |centers| <= budget when budget is set.
struct FilterState {
  KernelSpec kernel;
  std::vector<Center> centers;
  double lambda = 1.0;
  double sigma_d2 = 1.0;
  double sigma_n2 = 1.0;
  std::optional<int> budget;
  std::optional<double> prune_threshold;
  std::int64_t step = 0;
};

/// Diffusion-to-noise ratio eta' = sigma_d2 / sigma_n2.
double eta_prime(const FilterState& state);

/// Effective learning rate eta = eta' / (1 + eta'), in (0,1).
double effective_eta(const FilterState& state);

/// Weight vector in the raw input space, for the linear baselines.
struct LinearFilterState {
  Eigen::VectorXd weights;
  double step_size = 0.5;
};

/// Score of the expansion at x: sum_i coeff_i * k(point_i, x). Empty
/// expansion scores 0.
double predict_score(const FilterState& state, const InputPoint& x);

/// Scores for a batch of query points (one per row). Matches per-point
/// predict_score up to floating-point summation order.
Eigen::VectorXd predict_scores(const FilterState& state, const Eigen::MatrixXd& xs);

/// Predicted observation mean: the score itself (Gaussian), exp(score)
/// (Poisson rate) or logistic(score) (Bernoulli probability).
double predict_mean(const FilterState& state, const ObservationModel& model, const InputPoint& x);

/// The score-to-mean link used by predict_mean.
double mean_from_score(Likelihood tag, double score);

double logistic(double z);

// --- per-sample update rules -----------------------------------------------
//
// Each step appends (or for QKLMS possibly merges) one expansion term and
// advances state.step. Errors are reported as std::invalid_argument.

/// Stochastic-gradient KLMS: appends (x, eta * (y - score)). No decay.
void klms_step_sgd(FilterState& state, const InputPoint& x, double y, double eta);

/// MAP update under pure diffusion dynamics: appends
/// (x, eta' * (y - score) / (1 + eta' * k(x,x))).
void klms_step_bayes(FilterState& state, const InputPoint& x, double y);

/// Forgetful KLMS: decays every coefficient by lambda, computes the error
/// against the decayed expansion, then appends as klms_step_bayes.
void fklms_step(FilterState& state, const InputPoint& x, double y);

/// NORMA-style update: the error is computed before the decay, then all
/// coefficients decay by lambda and (x, eta * error) is appended.
void norma_step(FilterState& state, const InputPoint& x, double y, double eta);

/// Quantized KLMS: if the nearest center (Euclidean distance in input
/// space, earliest center wins ties) is within eps_q, the update eta*error
/// merges into its coefficient; otherwise a new center is appended.
void qklms_step(FilterState& state, const InputPoint& x, double y, double eta, double eps_q);

/// Normalized LMS baseline: w += step_size * (y - w.x) * x / (1e-8 + |x|^2).
/// step_size must be in (0,2). Empty weights initialize to zeros.
void nlms_step(LinearFilterState& state, const InputPoint& x, double y);

/// Plain LMS: w += step_size * (y - w.x) * x. This is klms_step_sgd under
/// the linear feature map, kept in weight space so long runs stay O(d).
void lms_step(LinearFilterState& state, const InputPoint& x, double y);

/// One MAP step for a Poisson or Bernoulli observation: decays coefficients
/// by lambda, reduces the posterior maximization to the scalar concave
/// problem in the new coefficient and solves it with maximize_concave.
/// Requires a normalized kernel (k(x,x) = 1).
void glm_map_step(FilterState& state, const InputPoint& x, double y, const ObservationModel& model);

// Scalar MAP objectives solved by glm_map_step, exposed for direct testing.
// `score` is the decayed expansion score at the new input.
ScalarObjective poisson_map_objective(double score, double y, double sigma_d2);
ScalarObjective bernoulli_map_objective(double score, double y, double sigma_d2);

// --- pruning ----------------------------------------------------------------

/// Removes every center with |coeff| < threshold, preserving order.
void prune_threshold(FilterState& state, double threshold);

/// Removes oldest centers until |centers| <= budget. No-op without a budget.
void prune_budget(FilterState& state);

/// Applies the state's configured pruning policy (threshold, then budget).
void apply_pruning(FilterState& state);

}  // namespace kaf
