#include "balwt/verify.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <functional>

#include "balwt/augment.hpp"
#include "balwt/balancing.hpp"
#include "balwt/numerics.hpp"
#include "balwt/outcome.hpp"

namespace balwt {

ProblemData random_instance(Rng& rng, Index n, Index d, bool diagonal) {
  Matrix phi = rng.normal_matrix(n, d);
  if (diagonal) {
    // Centering costs one rank, so strictly fewer features than rows.
    if (d >= n) throw InvalidInput("diagonal instance needs d < n");
    // Center before orthonormalizing: the Q columns inherit zero means (each
    // is a combination of centered columns), so the centered Gram stays
    // diagonal after the rescale.
    phi = phi.rowwise() - phi.colwise().mean();
    Eigen::HouseholderQR<Matrix> qr(phi);
    phi = qr.householderQ() * Matrix::Identity(n, d);
    for (Index j = 0; j < d; ++j) phi.col(j) *= rng.uniform(0.5, 2.0);
  } else {
    // Mild random column scaling and mixing for correlated designs.
    const Matrix mix =
        Matrix::Identity(d, d) + 0.3 * rng.normal_matrix(d, d) / std::sqrt(double(d));
    phi = phi * mix;
  }
  const Vector beta = rng.normal_vector(d);
  const Vector y = phi * beta + 0.5 * rng.normal_vector(n);

  ProblemData data;
  data.phi_p = phi.rowwise() - phi.colwise().mean();
  data.y_p = y;
  data.phi_q_mean = rng.normal_vector(d);
  data.center = phi.colwise().mean().transpose();
  data.n = n;
  data.m = 0;
  data.d = d;
  return data;
}

namespace {

double rel_gap(double lhs, double rhs) { return std::abs(lhs - rhs) / (1 + std::abs(lhs)); }

struct Check {
  std::string name;
  double tolerance;
  // Returns the worst violation across instances; inject shifts one side.
  std::function<double(int, Rng&, double)> run;
};

OutcomeFit random_base(Rng& rng, const ProblemData& data) {
  OutcomeFit fit;
  fit.beta = rng.normal_vector(data.d);
  fit.family = OutcomeFamily::ridge;
  fit.lambda = Vector::Zero(1);
  return fit;
}

WeightFit linear_weights(Rng& rng, const ProblemData& data) {
  WeightFit w;
  w.theta = rng.normal_vector(data.d);
  w.weights = data.phi_p * w.theta;
  w.phi_q_hat = data.phi_p.transpose() * w.weights / static_cast<double>(data.n);
  w.norm_family = NormFamily::external_nonlinear;
  return w;
}

std::vector<Check> make_checks() {
  std::vector<Check> checks;

  checks.push_back({"reweighted_ols", 1e-8, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const bool wide = i % 5 == 0;
      const Index n = wide ? 5 + static_cast<Index>(rng.below(11))
                           : 20 + static_cast<Index>(rng.below(81));
      const Index d = wide ? 20 + static_cast<Index>(rng.below(21))
                           : 2 + static_cast<Index>(rng.below(14));
      ProblemData data = random_instance(rng, n, d);
      const WeightFit w = linear_weights(rng, data);
      const Vector beta_ols = min_norm_solve(data.phi_p, data.y_p);
      const double lhs =
          w.weights.dot(data.y_p) / static_cast<double>(data.n) + inject;
      worst = std::max(worst, rel_gap(lhs, w.phi_q_hat.dot(beta_ols)));
    }
    return worst;
  }});

  checks.push_back({"exact_balance_collapse", 1e-9, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(8)));
      const AugmentedFit fit = augment(random_base(rng, data), solve_l2(data, 0), data);
      const double ols_plugin = data.phi_q_mean.dot(min_norm_solve(data.phi_p, data.y_p));
      worst = std::max(worst, rel_gap(fit.psi_hat + inject, ols_plugin));
    }
    return worst;
  }});

  checks.push_back({"ols_double_robust", 1e-9, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(8)));
      OutcomeFit ols;
      ols.beta = min_norm_solve(data.phi_p, data.y_p);
      ols.family = OutcomeFamily::ols;
      const AugmentedFit fit = augment(ols, linear_weights(rng, data), data);
      worst = std::max(worst, rel_gap(fit.psi_hat + inject, data.phi_q_mean.dot(ols.beta)));
    }
    return worst;
  }});

  checks.push_back({"affine_combination", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(8)));
      const AugmentedFit fit = augment(random_base(rng, data), linear_weights(rng, data), data);
      worst = std::max(worst, rel_gap(fit.psi_hat + inject, data.phi_q_mean.dot(fit.beta_aug)));
    }
    return worst;
  }});

  checks.push_back({"rotated_combination", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(8)));
      const AugmentedFit fit = augment(random_base(rng, data), linear_weights(rng, data), data);
      worst = std::max(worst,
                       rel_gap(fit.psi_hat + inject, data.phi_q_mean.dot(fit.beta_aug_rotated)));
    }
    return worst;
  }});

  checks.push_back({"double_ridge", 1e-9, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(8));
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)), d,
                                         i % 2 == 0);
      Vector lambda(d);
      for (Index j = 0; j < d; ++j) lambda(j) = std::exp(rng.uniform(-2, 3));
      worst = std::max(worst,
                       verify_double_ridge(data, lambda, std::exp(rng.uniform(-2, 3))) + inject);
    }
    return worst;
  }});

  checks.push_back({"double_ridge_kernel", 1e-8, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 20 + static_cast<Index>(rng.below(30)),
                                         2 + static_cast<Index>(rng.below(6)));
      worst = std::max(worst, verify_double_ridge_kernel(data, std::exp(rng.uniform(-2, 3)),
                                                         std::exp(rng.uniform(-2, 3))) +
                                  inject);
    }
    return worst;
  }});

  checks.push_back({"linf_closed_form", 1e-6, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < std::max(1, instances / 5); ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(5));
      ProblemData data =
          random_instance(rng, 20 + static_cast<Index>(rng.below(20)), d, true);
      const double delta = 0.3 * data.phi_q_mean.cwiseAbs().maxCoeff();
      const WeightFit closed = solve_linf_diagonal(data, delta);
      // A 1e-6 profile match needs a far tighter duality gap than the default.
      const WeightFit general = solve_linf_general(data, delta, {1e-13, 2000000});
      worst = std::max(
          worst, (closed.phi_q_hat - general.phi_q_hat).cwiseAbs().maxCoeff() + inject);
    }
    return worst;
  }});

  checks.push_back({"linf_kkt", 1e-6, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < std::max(1, instances / 5); ++i) {
      ProblemData data = random_instance(rng, 20 + static_cast<Index>(rng.below(20)),
                                         2 + static_cast<Index>(rng.below(5)));
      const double delta = 0.3 * data.phi_q_mean.cwiseAbs().maxCoeff();
      try {
        const WeightFit fit = solve_linf_general(data, delta);
        worst = std::max(worst, linf_kkt_residual(fit, data) + inject);
      } catch (const InfeasibleError&) {
        continue;
      }
    }
    return worst;
  }});

  checks.push_back({"linf_piecewise", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(8));
      ProblemData data =
          random_instance(rng, 20 + static_cast<Index>(rng.below(40)), d, true);
      const OutcomeFit base = random_base(rng, data);
      const double delta = 0.5 * data.phi_q_mean.cwiseAbs().maxCoeff();
      const Vector direct = linf_beta_aug(base, data, delta);
      const AugmentedFit via = augment(base, solve_linf_diagonal(data, delta), data);
      worst = std::max(worst, (direct - via.beta_aug).cwiseAbs().maxCoeff() + inject);
    }
    return worst;
  }});

  checks.push_back({"double_selection", 1e-12, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const Index d = 4 + static_cast<Index>(rng.below(9));
      ProblemData data =
          random_instance(rng, static_cast<Index>(d + 10 + rng.below(60)), d, true);
      const double lam = std::exp(rng.uniform(-2, 2));
      const double delta = 0.5 * data.phi_q_mean.cwiseAbs().maxCoeff();
      const OutcomeFit lasso = fit_lasso(data, lam);
      const WeightFit w = solve_linf_diagonal(data, delta);
      const auto support = double_selection_support(lasso, w);
      // Brute recomputation: support of the combined coefficients.
      const AugmentedFit fit = augment(lasso, w, data);
      std::vector<Index> brute;
      for (Index j = 0; j < d; ++j)
        if (std::abs(fit.beta_aug(j)) > 1e-14) brute.push_back(j);
      worst = std::max(worst, support == brute ? inject : 1.0);
    }
    return worst;
  }});

  checks.push_back({"boosting_sum", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(8)));
      const OutcomeFit base = random_base(rng, data);
      const double delta = std::exp(rng.uniform(-2, 3));
      const BoostingView view = boosting_view(base, data, delta);
      const AugmentedFit two_term = augment(base, solve_l2(data, delta), data);
      const double plugin = data.phi_q_mean.dot(base.beta + view.beta_boost);
      worst = std::max(worst, rel_gap(two_term.psi_hat + inject, plugin));
      if (view.train_error_after > view.train_error_before * (1 + 1e-12))
        worst = std::max(worst, 1.0);
    }
    return worst;
  }});

  checks.push_back({"norm_ordering", 1e-9, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(8));
      const Index n = static_cast<Index>(d + 5 + rng.below(60));
      ProblemData data = random_instance(rng, n, d);
      const double lam = std::exp(rng.uniform(-2, 3));
      const double delta = std::exp(rng.uniform(-2, 3));
      const OutcomeFit ridge = fit_ridge(data, lam);
      const Vector beta_l2 = ridge.beta + boosting_view(ridge, data, delta).beta_boost;
      const Vector beta_ols = min_norm_solve(data.phi_p, data.y_p);
      const double slack_a = ridge.beta.norm() - beta_l2.norm() + inject;
      const double slack_b = beta_l2.norm() - beta_ols.norm() + inject;
      worst = std::max({worst, slack_a, slack_b});
    }
    return worst;
  }});

  checks.push_back({"normal_eq_factored", 1e-8, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(8));
      ProblemData data =
          random_instance(rng, static_cast<Index>(d + 10 + rng.below(50)), d, true);
      const OutcomeFit base = fit_ridge(data, std::exp(rng.uniform(-2, 3)));
      const AugmentedFit fit = augment(base, solve_l2(data, std::exp(rng.uniform(-2, 3))), data);
      const Vector direct = normal_eq_violation(fit.beta_aug, data).violation;
      const Vector beta_ols = min_norm_solve(data.phi_p, data.y_p);
      const Matrix gram = data.phi_p.transpose() * data.phi_p;
      const Vector factored =
          gram * (Vector::Ones(d) - fit.a_path).cwiseProduct(beta_ols - base.beta);
      worst = std::max(worst,
                       (direct - factored).cwiseAbs().maxCoeff() / (1 + factored.norm()) + inject);
    }
    return worst;
  }});

  checks.push_back({"tmle_aipw_bridge", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      ProblemData data = random_instance(rng, 30 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(8)));
      const OutcomeFit base = fit_ridge(data, std::exp(rng.uniform(-2, 3)));
      const WeightFit w = solve_l2(data, std::exp(rng.uniform(-2, 3)));
      const TmleResult tmle = tmle_estimate(base, w, data);
      const AugmentedFit aipw = augment(base, w, data);
      const double bridged =
          data.phi_q_mean.dot(base.beta) + tmle.epsilon_hat * w.phi_q_hat.dot(w.theta);
      worst = std::max(worst, rel_gap(aipw.psi_hat + inject, bridged));
    }
    return worst;
  }});

  checks.push_back({"nonlinear_decomposition", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const bool wide = i % 3 == 0;
      const Index n = wide ? 10 + static_cast<Index>(rng.below(10))
                           : 30 + static_cast<Index>(rng.below(40));
      const Index d = wide ? n + 3 + static_cast<Index>(rng.below(10))
                           : 2 + static_cast<Index>(rng.below(8));
      ProblemData data = random_instance(rng, n, d);
      Vector w = rng.normal_vector(n).cwiseAbs();
      w *= static_cast<double>(n) / w.sum();
      const ExternalWeightReport rep = evaluate_external_weights(w, data);
      worst = std::max(worst, rel_gap(rep.decomposition.estimate + inject,
                                      rep.decomposition.collapsed_term +
                                          rep.decomposition.approx_error));
      if (std::abs(rep.decomposition.approx_error) >
          rep.decomposition.error_bound * (1 + 1e-9) + 1e-12)
        worst = std::max(worst, 1.0);
      if (wide)  // interpolating fit: the residual vanishes, so must the error
        worst = std::max(worst, std::abs(rep.decomposition.approx_error));
      const WeightFit lin = linear_weights(rng, data);
      const auto rep_lin = evaluate_external_weights(lin.weights, data);
      worst = std::max(worst, std::abs(rep_lin.decomposition.approx_error));
    }
    return worst;
  }});

  checks.push_back({"simplex_trimming", 1e-7, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < std::max(1, instances / 5); ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(4));
      const Index n = 20 + static_cast<Index>(rng.below(30));
      ProblemData data = random_instance(rng, n, d);
      data.phi_q_mean *= 0.2;  // keep the constrained problem well-scaled
      const WeightFit fit = solve_simplex_l2(data, 1.0);
      std::vector<Index> active;
      for (Index r = 0; r < n; ++r)
        if (fit.weights(r) > 0) active.push_back(r);
      if (active.size() < static_cast<std::size_t>(d) + 2) continue;
      // Intercept-included least squares on the active rows.
      Matrix x(static_cast<Index>(active.size()), d + 1);
      Vector ya(static_cast<Index>(active.size()));
      for (std::size_t r = 0; r < active.size(); ++r) {
        x(static_cast<Index>(r), 0) = 1;
        x.row(static_cast<Index>(r)).tail(d) = data.phi_p.row(active[r]);
        ya(static_cast<Index>(r)) = data.y_p(active[r]);
      }
      const Vector coef = min_norm_solve(x, ya);
      const double collapsed = coef(0) * fit.weights.mean() +
                               fit.phi_q_hat.dot(coef.tail(d));
      const double estimate = fit.weights.dot(data.y_p) / static_cast<double>(n);
      worst = std::max(worst, rel_gap(estimate + inject, collapsed));
    }
    return worst;
  }});

  checks.push_back({"entropy_moment", 1e-9, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < std::max(1, instances / 5); ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(4));
      const Index n = 30 + static_cast<Index>(rng.below(30));
      ProblemData data = random_instance(rng, n, d);
      data.phi_q_mean *= 0.1;  // keep the dual solution in a moderate range
      const Vector w = entropy_weights(data, 0);
      const Vector moment = data.phi_p.transpose() * w / static_cast<double>(n);
      worst = std::max(worst, (moment - data.phi_q_mean).cwiseAbs().maxCoeff() + inject);
      worst = std::max(worst, std::abs(w.mean() - 1));
      if (w.minCoeff() <= 0) worst = std::max(worst, 1.0);
    }
    return worst;
  }});

  checks.push_back({"cross_fit_identity", 1e-10, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < std::max(1, instances / 5); ++i) {
      ProblemData data = random_instance(rng, 60 + static_cast<Index>(rng.below(40)),
                                         2 + static_cast<Index>(rng.below(6)));
      CrossFitSpec spec;
      spec.outcome_family = OutcomeFamily::ridge;
      spec.lambda = std::exp(rng.uniform(-2, 3));
      spec.weight_family = NormFamily::l2;
      spec.delta = std::exp(rng.uniform(-2, 3));
      const CrossFitResult cf = cross_fit_augment(data, 4, spec, rng.next_u64());
      for (const auto& fold : cf.per_fold)
        worst = std::max(worst,
                         rel_gap(fold.psi_hat + inject, data.phi_q_mean.dot(fold.beta_aug)));
    }
    return worst;
  }});

  checks.push_back({"riesz_optimality", 1e-9, [](int instances, Rng& rng, double inject) {
    double worst = 0;
    for (int i = 0; i < instances; ++i) {
      const Index d = 2 + static_cast<Index>(rng.below(6));
      ProblemData data =
          random_instance(rng, static_cast<Index>(d + 10 + rng.below(40)), d);
      const Vector theta_star = solve_l2(data, 0).theta;
      const double base = riesz_loss(theta_star, data, 0) + inject;
      for (int p = 0; p < 20; ++p) {
        const Vector cand = theta_star + 0.1 * rng.normal_vector(d);
        worst = std::max(worst, base - riesz_loss(cand, data, 0));
      }
    }
    return worst;
  }});

  return checks;
}

}  // namespace

std::vector<std::string> identity_names() {
  std::vector<std::string> names;
  for (const auto& c : make_checks()) names.push_back(c.name);
  return names;
}

std::vector<IdentityReport> run_identity_suite(const VerifyOptions& opts) {
  if (opts.instances < 1) throw InvalidInput("need at least one instance");
  if (!opts.perturb.empty()) {
    const auto names = identity_names();
    if (std::find(names.begin(), names.end(), opts.perturb) == names.end())
      throw InvalidInput("unknown identity: " + opts.perturb);
  }
  std::vector<IdentityReport> reports;
  std::uint64_t stream = 100;
  for (const auto& check : make_checks()) {
    Rng rng(opts.seed, stream++);
    const double inject = check.name == opts.perturb ? 1e-4 : 0.0;
    IdentityReport report;
    report.name = check.name;
    report.tolerance = check.tolerance;
    report.max_violation = check.run(opts.instances, rng, inject);
    report.pass = report.max_violation <= check.tolerance;
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace balwt
