#include "balwt/mse.hpp"

#include <cmath>
#include <functional>

#include "balwt/numerics.hpp"

namespace balwt {

namespace {

void check_truth(const DgpTruth& truth) {
  const Index d = truth.beta0.size();
  if (truth.sample_cov.rows() != d || truth.sample_cov.cols() != d ||
      truth.pop_cov.rows() != d || truth.pop_cov.cols() != d ||
      truth.target_mean.size() != d)
    throw InvalidInput("truth dimensions disagree");
  if (truth.n <= 0) throw InvalidInput("truth needs a positive sample size");
  if (truth.noise_var < 0) throw InvalidInput("noise variance must be nonnegative");
}

// Shared eigenbasis quantities: everything below is diagonal or rotated once.
struct TruthBasis {
  Vector s;      // sample_cov eigenvalues, descending
  Matrix p_rot;  // V' pop_cov V
  Vector b_rot;  // V' beta0
  Vector q_rot;  // V' target_mean
  double n;
  double sigma_sq;
};

TruthBasis rotate(const DgpTruth& truth) {
  const Eigensystem es = eigh_symmetric(truth.sample_cov);
  TruthBasis basis;
  basis.s = es.eigenvalues;
  basis.p_rot = es.eigenvectors.transpose() * truth.pop_cov * es.eigenvectors;
  basis.b_rot = es.eigenvectors.transpose() * truth.beta0;
  basis.q_rot = es.eigenvectors.transpose() * truth.target_mean;
  basis.n = static_cast<double>(truth.n);
  basis.sigma_sq = truth.noise_var;
  return basis;
}

MseDecomposition prediction_mse(const TruthBasis& basis, double lambda) {
  const Index d = basis.s.size();
  Vector bias_dir(d), var_diag(d);
  for (Index j = 0; j < d; ++j) {
    const double denom = basis.s(j) + lambda;
    bias_dir(j) = denom > 0 ? lambda * basis.b_rot(j) / denom : basis.b_rot(j);
    var_diag(j) = denom > 0 ? basis.s(j) / (denom * denom) : 0.0;
  }
  MseDecomposition out;
  out.lambda = lambda;
  out.bias_sq = bias_dir.dot(basis.p_rot * bias_dir);
  out.variance = basis.sigma_sq / basis.n * var_diag.dot(basis.p_rot.diagonal());
  out.total = out.bias_sq + out.variance;
  return out;
}

MseDecomposition functional_mse(const TruthBasis& basis, double lambda, double delta) {
  double bias = 0, var = 0;
  for (Index j = 0; j < basis.s.size(); ++j) {
    const double g_denom = basis.s(j) + lambda + delta;
    const double gamma = g_denom > 0 ? delta * lambda / g_denom : 0.0;
    const double denom = basis.s(j) + gamma;
    if (denom > 0) {
      bias += basis.q_rot(j) * gamma * basis.b_rot(j) / denom;
      var += basis.q_rot(j) * basis.q_rot(j) * basis.s(j) / (denom * denom);
    }
    // s_j = 0 coordinates carry no signal either way: gamma/(s+gamma) -> the
    // min-norm fit leaves them at zero and the target picks up no noise.
  }
  MseDecomposition out;
  out.lambda = lambda;
  out.delta = delta;
  out.bias_sq = bias * bias;
  out.variance = basis.sigma_sq / basis.n * var;
  out.total = out.bias_sq + out.variance;
  return out;
}

// Grid scan plus golden refinement around the best bracket; an exact-zero
// candidate keeps boundary selections representable.
double minimize_on_log_grid(const std::function<double(double)>& f, Vector& grid_out,
                            Vector& values_out) {
  const Vector grid = log_grid(1e-8, 1e8, 49);
  grid_out = Vector(grid.size() + 1);
  values_out = Vector(grid.size() + 1);
  grid_out(0) = 0;
  values_out(0) = f(0);
  double best_x = 0, best_f = values_out(0);
  Index best_i = 0;
  for (Index i = 0; i < grid.size(); ++i) {
    grid_out(i + 1) = grid(i);
    values_out(i + 1) = f(grid(i));
    if (values_out(i + 1) < best_f) {
      best_f = values_out(i + 1);
      best_x = grid(i);
      best_i = i + 1;
    }
  }
  // Refine in log space over the bracket around the best positive grid point.
  const Index lo_i = best_i <= 1 ? 1 : best_i - 1;
  const Index hi_i = best_i >= grid_out.size() - 1 ? grid_out.size() - 1 : best_i + 1;
  if (grid_out(lo_i) < grid_out(hi_i)) {
    const double log_lo = std::log(grid_out(lo_i)), log_hi = std::log(grid_out(hi_i));
    const double refined = std::exp(
        golden_section_min([&](double t) { return f(std::exp(t)); }, log_lo, log_hi, 1e-6));
    if (f(refined) < best_f) {
      best_f = f(refined);
      best_x = refined;
    }
  }
  return best_x;
}

}  // namespace

MseDecomposition ridge_prediction_mse(const DgpTruth& truth, double lambda) {
  check_truth(truth);
  if (lambda < 0) throw InvalidHyperparameter("lambda must be nonnegative");
  return prediction_mse(rotate(truth), lambda);
}

MseDecomposition augmented_mse(const DgpTruth& truth, double lambda, double delta) {
  check_truth(truth);
  if (lambda < 0 || delta < 0) throw InvalidHyperparameter("penalties must be nonnegative");
  return functional_mse(rotate(truth), lambda, delta);
}

OracleResult oracle_hyperparams(const DgpTruth& truth) {
  check_truth(truth);
  const TruthBasis basis = rotate(truth);

  OracleResult result;
  result.lambda_star = minimize_on_log_grid(
      [&](double lam) { return prediction_mse(basis, lam).total; }, result.lambda_grid,
      result.lambda_total);
  result.delta_star = minimize_on_log_grid(
      [&](double del) { return functional_mse(basis, result.lambda_star, del).total; },
      result.delta_grid, result.delta_total);
  return result;
}

double rate_diagnostic(double sigma_sq,
                       const std::vector<std::pair<double, double>>& schedule) {
  if (sigma_sq < 0) throw InvalidInput("noise variance must be nonnegative");
  if (schedule.size() < 2) throw InvalidInput("schedule needs at least two points");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i].second < schedule[i - 1].second))
      throw InvalidInput("lambda schedule must be strictly decreasing");

  std::vector<double> log_lam, log_gam, tail_lam, tail_gam;
  for (const auto& [n, lam] : schedule) {
    (void)n;
    if (lam <= 0) throw InvalidInput("lambda schedule must stay positive");
    const double gamma = lam * lam / (sigma_sq + 2 * lam);
    log_lam.push_back(std::log(lam));
    log_gam.push_back(std::log(gamma));
    if (lam < sigma_sq / 10) {
      tail_lam.push_back(std::log(lam));
      tail_gam.push_back(std::log(gamma));
    }
  }
  if (tail_lam.size() >= 2) return ls_slope(tail_lam, tail_gam);
  return ls_slope(log_lam, log_gam);
}

}  // namespace balwt
