#pragma once

#include <utility>
#include <vector>

#include "balwt/types.hpp"

// Design-conditional mean-squared error of ridge prediction and of the
// collapsed augmented functional estimator, treating the realized design as
// fixed and averaging over outcome noise. Hyperparameters here are on the
// normalized scale: penalties added to sample_cov = Phi'Phi / n. pop_cov is
// the per-sample population covariance E[phi phi'].

namespace balwt {

struct DgpTruth {
  Vector beta0;
  Matrix pop_cov;
  Matrix sample_cov;
  double noise_var = 0;
  Vector target_mean;  // E[Phi_q], centered coordinates
  Index n = 0;
};

struct MseDecomposition {
  double bias_sq = 0;
  double variance = 0;
  double total = 0;  // bias_sq + variance
  double lambda = 0;
  double delta = 0;
};

// B_p^2 = lambda^2 b'(S+lambda)^-1 P (S+lambda)^-1 b,
// V_p = (sigma^2/n) tr[S (S+lambda)^-1 P (S+lambda)^-1], S = sample_cov,
// P = pop_cov: the out-of-sample prediction error of the ridge coefficients.
MseDecomposition ridge_prediction_mse(const DgpTruth& truth, double lambda);

// Bias and variance of q' beta_Gamma with the double-ridge spectral penalty
// gamma_j = delta*lambda / (s_j + lambda + delta) in the sample_cov eigenbasis:
// bias = -q'(S+Gamma)^-1 Gamma beta0, variance = (sigma^2/n) q'(S+Gamma)^-1 S (S+Gamma)^-1 q.
MseDecomposition augmented_mse(const DgpTruth& truth, double lambda, double delta);

struct OracleResult {
  double lambda_star = 0;
  double delta_star = 0;
  Vector lambda_grid;
  Vector lambda_total;  // prediction MSE along lambda_grid
  Vector delta_grid;
  Vector delta_total;  // functional MSE along delta_grid at lambda_star
};

// Sequential minimization: lambda* over prediction MSE, then delta* over the
// functional MSE at lambda*. Log grid on [1e-8, 1e8] (49 points) plus an
// exact-zero candidate, refined by golden section to 1e-6 relative.
OracleResult oracle_hyperparams(const DgpTruth& truth);

// Effective penalties gamma_n = lambda_n^2 / (sigma^2 + 2 lambda_n) along a
// decreasing schedule with delta_n = lambda_n; returns the least-squares
// slope of log gamma against log lambda over the tail lambda < sigma^2/10
// (all points when the tail has fewer than two).
double rate_diagnostic(double sigma_sq, const std::vector<std::pair<double, double>>& schedule);

}  // namespace balwt
