#include "balwt/outcome.hpp"

#include <cmath>

#include "balwt/numerics.hpp"

namespace balwt {

OutcomeFit fit_ols(const ProblemData& data) {
  if (data.n < 1) throw InvalidInput("fit_ols: empty data");
  OutcomeFit fit;
  fit.family = OutcomeFamily::ols;
  fit.beta = min_norm_solve(data.phi_p, data.y_p);
  fit.lambda = Vector::Zero(1);
  return fit;
}

OutcomeFit fit_generalized_ridge(const ProblemData& data, const Vector& lambda) {
  if (lambda.size() != data.d)
    throw InvalidInput("fit_generalized_ridge: Lambda size mismatch");
  if ((lambda.array() < 0).any())
    throw InvalidHyperparameter("fit_generalized_ridge: negative penalty");
  Matrix gram = data.phi_p.transpose() * data.phi_p;
  gram.diagonal() += lambda;
  const Vector rhs = data.phi_p.transpose() * data.y_p;
  OutcomeFit fit;
  fit.family = OutcomeFamily::generalized_ridge;
  fit.lambda = lambda;
  if ((lambda.array() > 0).all()) {
    fit.beta = Eigen::LDLT<Matrix>(gram).solve(rhs);
  } else {
    // Zero penalties can leave the system singular; fall back to min-norm.
    fit.beta = pseudoinverse(gram) * rhs;
  }
  return fit;
}

OutcomeFit fit_ridge(const ProblemData& data, double lambda) {
  if (lambda < 0) throw InvalidHyperparameter("fit_ridge: negative penalty");
  OutcomeFit fit = fit_generalized_ridge(data, Vector::Constant(data.d, lambda));
  fit.family = lambda == 0.0 ? OutcomeFamily::ols : OutcomeFamily::ridge;
  fit.lambda = Vector::Constant(1, lambda);
  return fit;
}

OutcomeFit fit_lasso(const ProblemData& data, double lambda, LassoOptions opts) {
  if (lambda <= 0) throw InvalidHyperparameter("fit_lasso: lambda must be > 0");
  const Index d = data.d;
  const Matrix gram = data.phi_p.transpose() * data.phi_p;
  const Vector phity = data.phi_p.transpose() * data.y_p;

  Vector beta = Vector::Zero(d);
  Vector gram_beta = Vector::Zero(d);  // running Phi'Phi * beta
  for (long sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double gjj = gram(j, j);
      if (gjj <= 0.0) continue;  // zero column stays at 0, KKT holds trivially
      // Partial residual correlation with coordinate j held out.
      const double rho = phity[j] - gram_beta[j] + gjj * beta[j];
      const double updated = soft_threshold(rho, lambda) / gjj;
      const double change = updated - beta[j];
      if (change != 0.0) {
        gram_beta += gram.col(j) * change;
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(change));
      }
    }
    if (max_change < opts.coef_change_tol) {
      OutcomeFit fit;
      fit.family = OutcomeFamily::lasso;
      fit.lambda = Vector::Constant(1, lambda);
      fit.beta = beta;
      return fit;
    }
  }
  throw ConvergenceError("fit_lasso: no convergence after max sweeps", beta);
}

double lasso_kkt_residual(const ProblemData& data, const Vector& beta, double lambda) {
  const Vector g = data.phi_p.transpose() * (data.y_p - data.phi_p * beta);
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] > 0)
      worst = std::max(worst, std::abs(g[j] - lambda));
    else if (beta[j] < 0)
      worst = std::max(worst, std::abs(g[j] + lambda));
    else
      worst = std::max(worst, std::max(0.0, std::abs(g[j]) - lambda));
  }
  return worst;
}

Matrix gram_matrix(const Matrix& a, const Matrix& b, const KernelSpec& kernel) {
  switch (kernel.kind) {
    case KernelKind::linear:
      return a * b.transpose();
    case KernelKind::gaussian: {
      const double h2 = 2.0 * kernel.bandwidth * kernel.bandwidth;
      const Vector a2 = a.rowwise().squaredNorm();
      const Vector b2 = b.rowwise().squaredNorm();
      Matrix d2 = (-2.0 * a * b.transpose());
      d2.colwise() += a2;
      d2.rowwise() += b2.transpose();
      return (-d2.array() / h2).exp();
    }
  }
  throw InvalidInput("unknown kernel");
}

OutcomeFit fit_kernel_ridge(const ProblemData& data, const KernelSpec& kernel, double lambda) {
  if (lambda < 0) throw InvalidHyperparameter("fit_kernel_ridge: negative penalty");
  Matrix k = gram_matrix(data.phi_p, data.phi_p, kernel);
  k.diagonal().array() += lambda;
  OutcomeFit fit;
  fit.family = OutcomeFamily::kernel_ridge;
  fit.lambda = Vector::Constant(1, lambda);
  if (lambda > 0) {
    fit.dual_alpha = Eigen::LDLT<Matrix>(k).solve(data.y_p);
  } else {
    fit.dual_alpha = Vector(pseudoinverse(k) * data.y_p);
  }
  return fit;
}

Vector predict(const OutcomeFit& fit, const ProblemData& data, const Matrix& phi_rows,
               const KernelSpec& kernel) {
  if (fit.family == OutcomeFamily::kernel_ridge) {
    if (!fit.dual_alpha) throw InvalidInput("predict: kernel fit lacks dual coefficients");
    return gram_matrix(phi_rows, data.phi_p, kernel) * (*fit.dual_alpha);
  }
  return phi_rows * fit.beta;
}

}  // namespace balwt
