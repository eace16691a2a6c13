#pragma once

#include "balwt/dataset.hpp"
#include "balwt/types.hpp"

// Balancing-weight solvers. Linear families parameterize weights as
// w = Phi_p * theta; the reweighted feature profile is always
// phi_q_hat = (1/n) Phi_p' w. Penalized objectives use the scaling
// ||(1/n) w'Phi_p - phi_q_mean||^2 + (delta/n^2) ||w||^2, under which the
// closed forms below hold with the unnormalized Gram Phi_p'Phi_p.

namespace balwt {

enum class NormFamily { l2, linf, exact, simplex_l2, external_nonlinear };

struct WeightFit {
  Vector weights;    // n
  Vector theta;      // d dual coefficients; empty for nonlinear families
  double delta = 0;
  NormFamily norm_family = NormFamily::l2;
  Vector phi_q_hat;  // (1/n) Phi_p' w
  double imbalance = 0;  // ||phi_q_hat - phi_q_mean|| in the family's dual norm
};

// (1/n) w = phi_q_mean' (Phi'Phi + delta I)^{-1} Phi'; delta=0 uses the
// pseudoinverse and is the exact-balance solution.
WeightFit solve_l2(const ProblemData& data, double delta);

// Diagonal-Gram closed form: phi_q_hat = soft_threshold(phi_q_mean, delta).
WeightFit solve_linf_diagonal(const ProblemData& data, double delta);

// Minimal achievable sup-norm imbalance, from the least-squares residual.
double linf_delta_min(const ProblemData& data);

struct LinfOptions {
  double gap_tol = 1e-9;
  long max_iter = 200000;
};

// min ||w||_2^2 subject to |(1/n) w'Phi_p - phi_q_mean|_j <= delta for all j,
// solved by accelerated proximal gradient on the l1-penalized dual.
WeightFit solve_linf_general(const ProblemData& data, double delta, LinfOptions opts = {});

// Max KKT violation of the constrained sup-norm program at a linear-family
// fit: primal feasibility plus complementary slackness of the dual kappa =
// n * theta (active multipliers force the matching constraint to bind).
double linf_kkt_residual(const WeightFit& fit, const ProblemData& data);

enum class PenaltyNorm { l1, l2 };

// theta' (Gram/n) theta - 2 theta' phi_q_mean + delta ||theta||.
double riesz_loss(const Vector& theta, const ProblemData& data, double delta,
                  PenaltyNorm norm = PenaltyNorm::l2);

struct SimplexOptions {
  double step_tol = 1e-13;
  long max_iter = 500000;
};

// Penalized l2 objective over the scaled simplex {w >= 0, sum w = n}
// (nonnegative weights with mean 1, the uncentered convention).
WeightFit solve_simplex_l2(const ProblemData& data, double delta, SimplexOptions opts = {});

struct NonlinearDecomposition {
  double estimate = 0;        // (1/n) w'y
  double collapsed_term = 0;  // mean(w) * intercept + phi_q_hat' beta_ols
  double approx_error = 0;    // (1/n)(w - Phi eta - c)'(ols residual)
  double error_bound = 0;     // Cauchy-Schwarz bound at the minimizing (eta, c)
  Vector eta;                 // best linear projection of w on (Phi_p, 1)
  double c = 0;
};

struct ExternalWeightReport {
  WeightFit fit;
  NonlinearDecomposition decomposition;
};

// Exact decomposition of a generic weighting estimator into the OLS collapse
// plus an approximation error that vanishes for linear weights or when the
// OLS fit interpolates: estimate = collapsed_term + approx_error.
ExternalWeightReport evaluate_external_weights(const Vector& w, const ProblemData& data);

struct EntropyOptions {
  PenaltyNorm slack_norm = PenaltyNorm::l1;  // l1 penalty dualizes an linf slack
  double grad_tol = 1e-9;
  long max_iter = 50000;
};

// Exponential-link weights exp(theta'phi_i), normalized to mean 1, fit by
// minimizing log((1/n) sum exp(theta'phi_i)) - theta'phi_q_mean + delta*pen.
Vector entropy_weights(const ProblemData& data, double delta, EntropyOptions opts = {});

}  // namespace balwt
