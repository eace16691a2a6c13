#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "balwt/balancing.hpp"
#include "balwt/dataset.hpp"
#include "balwt/outcome.hpp"
#include "balwt/types.hpp"

// Augmented (doubly robust) estimators: a base outcome fit corrected by a
// weighted residual term. For weights linear in the source features the
// two-term estimator collapses to a plug-in with coordinatewise-mixed
// coefficients, which this module computes and cross-checks.

namespace balwt {

struct AugmentedComponents {
  double plug_in = 0;            // phi_q_mean . beta_reg
  double weighted_residual = 0;  // (1/n) w'(y - Phi beta_reg)
};

struct AugmentedFit {
  double psi_hat = 0;
  Vector beta_aug;          // (1 - a) o beta_reg + a o beta_ols, coordinatewise
  Vector a_path;            // a_j = phi_q_hat_j / phi_q_mean_j, 0/0 -> 0
  Vector beta_aug_rotated;  // same combination formed in the Gram eigenbasis
  AugmentedComponents components;
};

// Two-term estimate plus collapsed coefficients. The outcome fit must carry
// feature-space coefficients (kernel fits go through the kernel checks below).
AugmentedFit augment(const OutcomeFit& outcome, const WeightFit& weights,
                     const ProblemData& data);

// gamma_j = delta * lambda_j / (sigma_sq_j + lambda_j + delta), the effective
// penalty of the collapsed double-ridge estimator; gamma_j <= lambda_j.
Vector double_ridge_gamma(const Vector& sigma_sq, const Vector& lambda, double delta);

// Relative gap between the two-term ridge-plus-l2-weights estimate and the
// single generalized-ridge plug-in with penalties double_ridge_gamma, formed
// in the eigenbasis of Phi'Phi so correlated designs collapse too. Lambda
// entries align with descending eigenvalues; a scalar penalty may be passed
// as a constant vector.
double verify_double_ridge(const ProblemData& data, const Vector& lambda, double delta);

// Same collapse through Gram-matrix algebra: dual ridge prediction plus
// kernel l2-weight correction against the spectrally reweighted resolvent.
double verify_double_ridge_kernel(const ProblemData& data, double lambda, double delta,
                                  const KernelSpec& kernel = {});

// Piecewise collapsed coefficients for sup-norm weights on diagonal designs:
// beta_j untouched where |phi_q_mean_j| < delta, otherwise pulled toward the
// OLS coefficient with weight 1 - delta/|phi_q_mean_j|.
Vector linf_beta_aug(const OutcomeFit& outcome, const ProblemData& data, double delta);

// Support of the collapsed coefficients on diagonal designs: union of the
// lasso support and the surviving (soft-thresholded) profile coordinates.
std::vector<Index> double_selection_support(const OutcomeFit& lasso, const WeightFit& weights);

struct BoostingView {
  Vector beta_boost;  // ridge fit of the base-learner residuals
  double train_error_before = 0;
  double train_error_after = 0;
};

// The l2-weight augmented coefficients equal the base learner plus one ridge
// boosting step on its residuals; the boosted fit never increases train error.
BoostingView boosting_view(const OutcomeFit& outcome, const ProblemData& data, double delta);

struct NormalEqReport {
  Vector violation;  // Phi'(y - Phi beta)
  double norm = 0;
};

NormalEqReport normal_eq_violation(const Vector& beta, const ProblemData& data);

struct TmleResult {
  double psi_tmle = 0;
  double epsilon_hat = 0;  // w'(y - Phi beta) / w'w
};

// One-step fluctuation of the outcome model along the weight direction:
// psi = phi_q_mean . (beta + epsilon_hat * theta).
TmleResult tmle_estimate(const OutcomeFit& outcome, const WeightFit& weights,
                         const ProblemData& data);

struct CrossFitSpec {
  OutcomeFamily outcome_family = OutcomeFamily::ols;
  double lambda = 0;
  NormFamily weight_family = NormFamily::l2;  // l2, linf, or exact
  double delta = 0;
};

struct CrossFitResult {
  double psi_cf = 0;
  std::vector<AugmentedFit> per_fold;
  std::vector<std::vector<Index>> fold_rows;
};

// Fold-wise augmented estimation: coefficients and weight duals are fit on
// the complement of each fold and applied to it, so weights never see the
// outcomes they multiply. An optional retune callback picks per-complement
// hyperparameters. folds=1 skips splitting and reproduces augment.
CrossFitResult cross_fit_augment(
    const ProblemData& data, int folds, const CrossFitSpec& spec, std::uint64_t seed,
    const std::function<CrossFitSpec(const ProblemData&)>& retune = {});

}  // namespace balwt
