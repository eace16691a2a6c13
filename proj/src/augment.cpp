#include "balwt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "balwt/numerics.hpp"

namespace balwt {

namespace {

constexpr double kZeroRatio = 1e-12;  // |phi_q_mean_j| below this -> a_j = 0

Vector mix_path(const Vector& target, const Vector& achieved) {
  Vector a = Vector::Zero(target.size());
  for (Index j = 0; j < target.size(); ++j)
    if (std::abs(target(j)) >= kZeroRatio) a(j) = achieved(j) / target(j);
  return a;
}

Vector combine(const Vector& a, const Vector& beta_reg, const Vector& beta_ols) {
  return (Vector::Ones(a.size()) - a).cwiseProduct(beta_reg) + a.cwiseProduct(beta_ols);
}

void require_parametric(const OutcomeFit& outcome, const ProblemData& data) {
  if (outcome.beta.size() != data.d)
    throw InvalidInput("outcome fit lacks feature-space coefficients of dimension d");
}

}  // namespace

AugmentedFit augment(const OutcomeFit& outcome, const WeightFit& weights,
                     const ProblemData& data) {
  require_parametric(outcome, data);
  if (weights.weights.size() != data.n) throw InvalidInput("weight vector length mismatch");

  AugmentedFit fit;
  const Vector resid = data.y_p - data.phi_p * outcome.beta;
  fit.components.plug_in = data.phi_q_mean.dot(outcome.beta);
  fit.components.weighted_residual = weights.weights.dot(resid) / static_cast<double>(data.n);
  fit.psi_hat = fit.components.plug_in + fit.components.weighted_residual;

  const Vector beta_ols = min_norm_solve(data.phi_p, data.y_p);
  fit.a_path = mix_path(data.phi_q_mean, weights.phi_q_hat);
  fit.beta_aug = combine(fit.a_path, outcome.beta, beta_ols);

  const Eigensystem es = eigh_symmetric(data.phi_p.transpose() * data.phi_p);
  const Matrix& v = es.eigenvectors;
  const Vector a_rot = mix_path(v.transpose() * data.phi_q_mean,
                                v.transpose() * weights.phi_q_hat);
  fit.beta_aug_rotated =
      v * combine(a_rot, v.transpose() * outcome.beta, v.transpose() * beta_ols);
  return fit;
}

Vector double_ridge_gamma(const Vector& sigma_sq, const Vector& lambda, double delta) {
  if (sigma_sq.size() != lambda.size()) throw InvalidInput("dimension mismatch");
  if (sigma_sq.minCoeff() < 0 || lambda.minCoeff() < 0 || delta < 0)
    throw InvalidHyperparameter("double_ridge_gamma needs nonnegative inputs");
  Vector gamma(sigma_sq.size());
  for (Index j = 0; j < gamma.size(); ++j) {
    const double denom = sigma_sq(j) + lambda(j) + delta;
    gamma(j) = denom > 0 ? delta * lambda(j) / denom : 0.0;
  }
  return gamma;
}

namespace {

// Generalized ridge in the Gram eigenbasis: V (D + diag(pen))^+ V' Phi'y.
Vector eigenbasis_ridge(const Eigensystem& es, const Matrix& phi, const Vector& y,
                        const Vector& pen) {
  const Vector rhs = es.eigenvectors.transpose() * (phi.transpose() * y);
  Vector scaled(rhs.size());
  const double top = es.eigenvalues.size() ? es.eigenvalues(0) + pen.maxCoeff() : 0.0;
  for (Index j = 0; j < rhs.size(); ++j) {
    const double denom = es.eigenvalues(j) + pen(j);
    scaled(j) = denom > 1e-14 * std::max(top, 1.0) ? rhs(j) / denom : 0.0;
  }
  return es.eigenvectors * scaled;
}

}  // namespace

double verify_double_ridge(const ProblemData& data, const Vector& lambda, double delta) {
  if (lambda.size() != data.d) throw InvalidInput("lambda must have one entry per feature");
  if (lambda.minCoeff() < 0 || delta < 0)
    throw InvalidHyperparameter("penalties must be nonnegative");
  const double n = static_cast<double>(data.n);
  const Eigensystem es = eigh_symmetric(data.phi_p.transpose() * data.phi_p);

  const Vector beta_reg = eigenbasis_ridge(es, data.phi_p, data.y_p, lambda);
  const WeightFit w = solve_l2(data, delta);
  const double lhs = data.phi_q_mean.dot(beta_reg) +
                     w.weights.dot(data.y_p - data.phi_p * beta_reg) / n;

  const Vector gamma = double_ridge_gamma(es.eigenvalues, lambda, delta);
  const double rhs = data.phi_q_mean.dot(eigenbasis_ridge(es, data.phi_p, data.y_p, gamma));
  return std::abs(lhs - rhs) / (1 + std::abs(lhs));
}

double verify_double_ridge_kernel(const ProblemData& data, double lambda, double delta,
                                  const KernelSpec& kernel) {
  if (lambda < 0 || delta < 0) throw InvalidHyperparameter("penalties must be nonnegative");
  const double n = static_cast<double>(data.n);
  const Matrix k = gram_matrix(data.phi_p, data.phi_p, kernel);

  Vector k_qp_mean;  // mean over target rows of k(target, source_i)
  if (data.phi_q_rows && data.phi_q_rows->rows() > 0) {
    const Matrix q_centered = data.phi_q_rows->rowwise() - data.center.transpose();
    k_qp_mean = gram_matrix(q_centered, data.phi_p, kernel).colwise().mean().transpose();
  } else if (kernel.kind == KernelKind::linear) {
    k_qp_mean = data.phi_p * data.phi_q_mean;
  } else {
    throw InvalidInput("nonlinear kernel needs explicit target rows");
  }

  // Two-term side: dual ridge fit plus l2 kernel weights on its residuals.
  const Matrix eye = Matrix::Identity(data.n, data.n);
  const Vector alpha = min_norm_solve(k + lambda * eye, data.y_p);
  const Vector w = n * min_norm_solve(k + delta * eye, k_qp_mean);
  const double lhs = k_qp_mean.dot(alpha) + w.dot(data.y_p - k * alpha) / n;

  // Collapsed side: spectral penalty s -> delta*lambda/(s + lambda + delta).
  const Eigensystem es = eigh_symmetric(k);
  const Vector proj = es.eigenvectors.transpose() * data.y_p;
  const Vector load = es.eigenvectors.transpose() * k_qp_mean;
  double rhs = 0;
  for (Index i = 0; i < es.eigenvalues.size(); ++i) {
    const double s = es.eigenvalues(i);
    const double denom = s + delta * lambda / (s + lambda + delta);
    if (denom > 1e-14 * std::max(es.eigenvalues(0), 1.0)) rhs += load(i) * proj(i) / denom;
  }
  return std::abs(lhs - rhs) / (1 + std::abs(lhs));
}

Vector linf_beta_aug(const OutcomeFit& outcome, const ProblemData& data, double delta) {
  require_parametric(outcome, data);
  if (delta < 0) throw InvalidHyperparameter("delta must be nonnegative");
  const Matrix gram = data.phi_p.transpose() * data.phi_p;
  const double scale = gram.diagonal().cwiseAbs().sum() / static_cast<double>(data.d);
  for (Index i = 0; i < gram.rows(); ++i)
    for (Index j = 0; j < gram.cols(); ++j)
      if (i != j && std::abs(gram(i, j)) > 1e-10 * scale)
        throw NotDiagonalError("piecewise combination requires a diagonal Gram");

  const Vector beta_ols = min_norm_solve(data.phi_p, data.y_p);
  Vector beta(data.d);
  for (Index j = 0; j < data.d; ++j) {
    const double dj = std::abs(data.phi_q_mean(j));
    if (dj < delta || dj == 0) {
      beta(j) = outcome.beta(j);
    } else {
      const double shrink = delta / dj;
      beta(j) = shrink * outcome.beta(j) + (1 - shrink) * beta_ols(j);
    }
  }
  return beta;
}

std::vector<Index> double_selection_support(const OutcomeFit& lasso, const WeightFit& weights) {
  std::set<Index> support;
  for (Index j = 0; j < lasso.beta.size(); ++j)
    if (lasso.beta(j) != 0) support.insert(j);
  for (Index j = 0; j < weights.phi_q_hat.size(); ++j)
    if (weights.phi_q_hat(j) != 0) support.insert(j);
  return {support.begin(), support.end()};
}

BoostingView boosting_view(const OutcomeFit& outcome, const ProblemData& data, double delta) {
  require_parametric(outcome, data);
  if (delta < 0) throw InvalidHyperparameter("delta must be nonnegative");
  const Vector resid = data.y_p - data.phi_p * outcome.beta;

  BoostingView view;
  Matrix gram = data.phi_p.transpose() * data.phi_p;
  const Vector rhs = data.phi_p.transpose() * resid;
  if (delta > 0) {
    gram.diagonal().array() += delta;
    view.beta_boost = gram.ldlt().solve(rhs);
  } else {
    view.beta_boost = pseudoinverse(gram) * rhs;
  }
  view.train_error_before = resid.squaredNorm();
  view.train_error_after =
      (data.y_p - data.phi_p * (outcome.beta + view.beta_boost)).squaredNorm();
  return view;
}

NormalEqReport normal_eq_violation(const Vector& beta, const ProblemData& data) {
  if (beta.size() != data.d) throw InvalidInput("beta dimension mismatch");
  NormalEqReport report;
  report.violation = data.phi_p.transpose() * (data.y_p - data.phi_p * beta);
  report.norm = report.violation.norm();
  return report;
}

TmleResult tmle_estimate(const OutcomeFit& outcome, const WeightFit& weights,
                         const ProblemData& data) {
  require_parametric(outcome, data);
  if (weights.theta.size() != data.d)
    throw InvalidInput("fluctuation needs a linear weight family with dual coefficients");
  const double wtw = weights.weights.squaredNorm();
  if (wtw <= 0) throw DegenerateWeights("weights are identically zero");

  TmleResult result;
  result.epsilon_hat =
      weights.weights.dot(data.y_p - data.phi_p * outcome.beta) / wtw;
  result.psi_tmle =
      data.phi_q_mean.dot(outcome.beta + result.epsilon_hat * weights.theta);
  return result;
}

namespace {

OutcomeFit fold_outcome(const CrossFitSpec& spec, const Matrix& phi, const Vector& y) {
  switch (spec.outcome_family) {
    case OutcomeFamily::ols:
      return OutcomeFit{min_norm_solve(phi, y), OutcomeFamily::ols, Vector::Zero(1), {}};
    case OutcomeFamily::ridge:
    case OutcomeFamily::generalized_ridge: {
      Matrix gram = phi.transpose() * phi;
      const Vector rhs = phi.transpose() * y;
      OutcomeFit fit;
      fit.family = OutcomeFamily::ridge;
      fit.lambda = Vector::Constant(1, spec.lambda);
      if (spec.lambda > 0) {
        gram.diagonal().array() += spec.lambda;
        fit.beta = gram.ldlt().solve(rhs);
      } else {
        fit.beta = pseudoinverse(gram) * rhs;
      }
      return fit;
    }
    case OutcomeFamily::lasso: {
      ProblemData sub;
      sub.phi_p = phi;
      sub.y_p = y;
      sub.phi_q_mean = Vector::Zero(phi.cols());
      sub.n = phi.rows();
      sub.d = phi.cols();
      return fit_lasso(sub, spec.lambda);
    }
    default:
      throw InvalidInput("unsupported outcome family for cross-fitting");
  }
}

Vector fold_theta(const CrossFitSpec& spec, const Matrix& phi, const Vector& phi_q_mean) {
  ProblemData sub;
  sub.phi_p = phi;
  sub.y_p = Vector::Zero(phi.rows());
  sub.phi_q_mean = phi_q_mean;
  sub.n = phi.rows();
  sub.d = phi.cols();
  switch (spec.weight_family) {
    case NormFamily::exact:
      return solve_l2(sub, 0).theta;
    case NormFamily::l2:
      return solve_l2(sub, spec.delta).theta;
    case NormFamily::linf:
      return solve_linf_general(sub, spec.delta).theta;
    default:
      throw InvalidInput("cross-fitting needs a linear weight family");
  }
}

Matrix take_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector take(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

}  // namespace

CrossFitResult cross_fit_augment(
    const ProblemData& data, int folds, const CrossFitSpec& spec, std::uint64_t seed,
    const std::function<CrossFitSpec(const ProblemData&)>& retune) {
  if (folds < 1 || static_cast<Index>(folds) > data.n)
    throw InvalidSplit("fold count must lie in [1, n]");

  CrossFitResult result;
  if (folds == 1) {
    const OutcomeFit outcome = fold_outcome(spec, data.phi_p, data.y_p);
    WeightFit w;
    w.theta = fold_theta(spec, data.phi_p, data.phi_q_mean);
    w.weights = data.phi_p * w.theta;
    w.phi_q_hat = data.phi_p.transpose() * w.weights / static_cast<double>(data.n);
    result.per_fold.push_back(augment(outcome, w, data));
    result.psi_cf = result.per_fold.front().psi_hat;
    result.fold_rows.push_back({});
    auto& all = result.fold_rows.front();
    for (Index i = 0; i < data.n; ++i) all.push_back(i);
    return result;
  }

  result.fold_rows = make_folds(data.n, folds, seed);

  double total = 0;
  for (int s = 0; s < folds; ++s) {
    const auto& in_rows = result.fold_rows[static_cast<std::size_t>(s)];
    std::vector<Index> out_rows;
    for (int t = 0; t < folds; ++t)
      if (t != s)
        out_rows.insert(out_rows.end(), result.fold_rows[static_cast<std::size_t>(t)].begin(),
                        result.fold_rows[static_cast<std::size_t>(t)].end());

    const Matrix phi_out = take_rows(data.phi_p, out_rows);
    const Vector y_out = take(data.y_p, out_rows);
    const Matrix phi_in = take_rows(data.phi_p, in_rows);
    const Vector y_in = take(data.y_p, in_rows);
    const double n_in = static_cast<double>(in_rows.size());

    CrossFitSpec fold_spec = spec;
    if (retune) {
      ProblemData train;
      train.phi_p = phi_out;
      train.y_p = y_out;
      train.phi_q_mean = data.phi_q_mean;
      train.n = phi_out.rows();
      train.d = phi_out.cols();
      fold_spec = retune(train);
    }

    const OutcomeFit outcome = fold_outcome(fold_spec, phi_out, y_out);
    const Vector theta = fold_theta(fold_spec, phi_out, data.phi_q_mean);
    const Vector w_in = phi_in * theta;

    AugmentedFit fold;
    fold.components.plug_in = data.phi_q_mean.dot(outcome.beta);
    fold.components.weighted_residual = w_in.dot(y_in - phi_in * outcome.beta) / n_in;
    fold.psi_hat = fold.components.plug_in + fold.components.weighted_residual;

    // Within-fold collapse against the in-fold least-squares coefficients.
    const Vector beta_in = min_norm_solve(phi_in, y_in);
    const Vector profile_in = phi_in.transpose() * w_in / n_in;
    fold.a_path = mix_path(data.phi_q_mean, profile_in);
    fold.beta_aug = combine(fold.a_path, outcome.beta, beta_in);
    const Eigensystem es = eigh_symmetric(phi_in.transpose() * phi_in);
    const Matrix& v = es.eigenvectors;
    const Vector a_rot =
        mix_path(v.transpose() * data.phi_q_mean, v.transpose() * profile_in);
    fold.beta_aug_rotated =
        v * combine(a_rot, v.transpose() * outcome.beta, v.transpose() * beta_in);

    result.per_fold.push_back(std::move(fold));
    total += result.per_fold.back().psi_hat;
  }
  result.psi_cf = total / folds;
  return result;
}

}  // namespace balwt
