#include "balwt/balancing.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "balwt/numerics.hpp"

namespace balwt {

namespace {

void check_delta(double delta) {
  if (!(delta >= 0) || !std::isfinite(delta))
    throw InvalidHyperparameter("delta must be finite and nonnegative");
}

Vector profile(const ProblemData& data, const Vector& w) {
  return data.phi_p.transpose() * w / static_cast<double>(data.n);
}

}  // namespace

WeightFit solve_l2(const ProblemData& data, double delta) {
  check_delta(delta);
  const double n = static_cast<double>(data.n);
  Matrix gram = data.phi_p.transpose() * data.phi_p;
  Vector theta;
  if (delta > 0) {
    gram.diagonal().array() += delta;
    theta = n * gram.ldlt().solve(data.phi_q_mean).eval();
  } else {
    theta = n * (pseudoinverse(gram) * data.phi_q_mean).eval();
  }
  WeightFit fit;
  fit.theta = theta;
  fit.weights = data.phi_p * theta;
  fit.delta = delta;
  fit.norm_family = delta == 0 ? NormFamily::exact : NormFamily::l2;
  fit.phi_q_hat = profile(data, fit.weights);
  fit.imbalance = (fit.phi_q_hat - data.phi_q_mean).norm();
  return fit;
}

WeightFit solve_linf_diagonal(const ProblemData& data, double delta) {
  check_delta(delta);
  const double n = static_cast<double>(data.n);
  const Matrix gram = data.phi_p.transpose() * data.phi_p;
  const double scale = gram.diagonal().cwiseAbs().sum() / static_cast<double>(data.d);
  for (Index i = 0; i < gram.rows(); ++i)
    for (Index j = 0; j < gram.cols(); ++j)
      if (i != j && std::abs(gram(i, j)) > 1e-10 * scale)
        throw NotDiagonalError("Gram matrix has off-diagonal mass; use the general solver");
  for (Index j = 0; j < gram.cols(); ++j)
    if (gram(j, j) <= 0)
      throw NotDiagonalError("Gram matrix has a zero diagonal entry");

  WeightFit fit;
  fit.phi_q_hat = soft_threshold(data.phi_q_mean, delta);
  fit.theta = n * fit.phi_q_hat.cwiseQuotient(gram.diagonal());
  fit.weights = data.phi_p * fit.theta;
  fit.delta = delta;
  fit.norm_family = NormFamily::linf;
  fit.imbalance = (fit.phi_q_hat - data.phi_q_mean).cwiseAbs().maxCoeff();
  return fit;
}

double linf_delta_min(const ProblemData& data) {
  // Minimize ||(1/n) Phi'Phi theta - phi_q_mean|| over theta; the minimizing
  // residual over all w = Phi theta equals the one over unrestricted w since
  // least-squares solutions lie in the column space of Phi.
  const double n = static_cast<double>(data.n);
  const Matrix a = data.phi_p.transpose() * data.phi_p / n;
  const Vector theta = min_norm_solve(a, data.phi_q_mean);
  return (a * theta - data.phi_q_mean).cwiseAbs().maxCoeff();
}

WeightFit solve_linf_general(const ProblemData& data, double delta, LinfOptions opts) {
  check_delta(delta);
  const double n = static_cast<double>(data.n);
  const Matrix q = data.phi_p.transpose() * data.phi_p / (n * n);
  const Vector& b = data.phi_q_mean;

  // Feasibility: the min-norm least-squares point realizes the smallest
  // detectable sup-norm imbalance.
  const Vector theta_ls = min_norm_solve(q, b);
  const Vector anchor_resid = q * theta_ls - b;
  const double delta_min = anchor_resid.cwiseAbs().maxCoeff();
  if (delta < delta_min * (1 - 1e-12) - 1e-15)
    throw InfeasibleError("sup-norm radius below the least feasible imbalance", delta_min);

  // At or below the least feasible radius the constraint pins the solution to
  // the least-squares balancing point. Return it directly: when delta_min is
  // rounding noise (full-rank designs, delta = 0) no float iterate is strictly
  // feasible, so the gap certificate below can never fire.
  if (delta <= delta_min) {
    WeightFit fit;
    fit.theta = theta_ls / n;
    fit.weights = data.phi_p * fit.theta;
    fit.delta = delta;
    fit.norm_family = NormFamily::linf;
    fit.phi_q_hat = profile(data, fit.weights);
    fit.imbalance = (fit.phi_q_hat - data.phi_q_mean).cwiseAbs().maxCoeff();
    return fit;
  }

  // Dual of min ||w||^2 / 2 s.t. ||A w - b||_inf <= delta, with A = (1/n) Phi':
  // min_kappa (1/2) kappa' Q kappa - b' kappa + delta ||kappa||_1, w = A' kappa.
  const double lip = std::max(eigh_symmetric(q).eigenvalues(0), 1e-300);
  Vector kappa = Vector::Zero(data.d);
  Vector z = kappa;
  double t_mom = 1;
  auto smooth_grad = [&](const Vector& k) -> Vector { return q * k - b; };
  // The objective cancels two large terms, so genuine changes smaller than
  // rounding in either term are invisible; report the term magnitude so
  // callers can tell progress from that noise.
  auto objective = [&](const Vector& k, double& mag) {
    const double quad = 0.5 * k.dot(q * k);
    const double lin = b.dot(k);
    const double l1 = delta * k.lpNorm<1>();
    mag = quad + std::abs(lin) + l1;
    return quad - lin + l1;
  };
  double f_mag = 0;
  double f_prev = objective(kappa, f_mag);
  // The anchor's cost bounds the primal optimum; use it to scale the gap.
  const double scale = std::max(1.0, 0.5 * (data.phi_p * (theta_ls / n)).squaredNorm());

  double gap = std::numeric_limits<double>::infinity();
  Vector theta_feas;
  for (long it = 0; it < opts.max_iter; ++it) {
    const Vector kappa_next = soft_threshold(z - smooth_grad(z) / lip, delta / lip);
    double f_mag_next = 0;
    const double f_next = objective(kappa_next, f_mag_next);
    if (f_next > f_prev + 1e-13 * (1 + f_mag_next)) {
      // Function-value restart: keep the step but drop the extrapolation.
      // Rejecting the iterate instead would freeze the solver once per-step
      // descent falls below the resolution of the objective value, and
      // restarting on rounding-level increases would strip the acceleration
      // exactly where ill-conditioned instances need it.
      z = kappa_next;
      t_mom = 1;
    } else {
      const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t_mom * t_mom));
      z = kappa_next + ((t_mom - 1) / t_next) * (kappa_next - kappa);
      t_mom = t_next;
    }
    kappa = kappa_next;
    f_prev = f_next;
    f_mag = f_mag_next;

    if (it % 10 != 0) continue;
    // The prox iteration identifies the support long before it polishes the
    // solution on ill-conditioned designs; solving the reduced stationarity
    // system Q_AA x = b_A - delta sign(kappa_A) exactly closes the remaining
    // distance in one step. Adopt the candidate only when it helps.
    std::vector<Index> active;
    for (Index j = 0; j < kappa.size(); ++j)
      if (kappa(j) != 0) active.push_back(j);
    if (!active.empty()) {
      const auto m = static_cast<Index>(active.size());
      Matrix q_aa(m, m);
      Vector rhs_a(m);
      for (Index r = 0; r < m; ++r) {
        rhs_a(r) = b(active[r]) - delta * (kappa(active[r]) > 0 ? 1.0 : -1.0);
        for (Index c = 0; c < m; ++c) q_aa(r, c) = q(active[r], active[c]);
      }
      const Vector x = min_norm_solve(q_aa, rhs_a);
      Vector cand = Vector::Zero(kappa.size());
      for (Index r = 0; r < m; ++r) cand(active[r]) = x(r);
      double cand_mag = 0;
      const double f_cand = objective(cand, cand_mag);
      if (f_cand <= f_prev) {
        kappa = cand;
        z = cand;
        t_mom = 1;
        f_prev = f_cand;
        f_mag = cand_mag;
      }
    }

    // Duality gap at a feasible point reached by moving toward the anchor.
    const Vector theta_k = kappa / n;
    const Vector r_k = q * kappa - b;
    double t_line = 0;
    for (Index j = 0; j < r_k.size(); ++j) {
      const double rj = r_k(j), aj = anchor_resid(j);
      double tj = 0;
      if (rj > delta)
        tj = (rj - delta) / (rj - aj);
      else if (rj < -delta)
        tj = (-delta - rj) / (aj - rj);
      t_line = std::max(t_line, tj);
    }
    theta_feas = (1 - t_line) * theta_k + t_line * (theta_ls / n);
    gap = 0.5 * (data.phi_p * theta_feas).squaredNorm() + f_prev;
    if (gap <= opts.gap_tol * scale) break;
  }
  if (!(gap <= opts.gap_tol * scale)) throw ConvergenceError("sup-norm solver stalled", kappa);

  WeightFit fit;
  fit.theta = theta_feas;
  fit.weights = data.phi_p * fit.theta;
  fit.delta = delta;
  fit.norm_family = NormFamily::linf;
  fit.phi_q_hat = profile(data, fit.weights);
  fit.imbalance = (fit.phi_q_hat - data.phi_q_mean).cwiseAbs().maxCoeff();
  return fit;
}

double linf_kkt_residual(const WeightFit& fit, const ProblemData& data) {
  const Vector r = fit.phi_q_hat - data.phi_q_mean;
  const Vector kappa = static_cast<double>(data.n) * fit.theta;
  const double kappa_tol = 1e-8 * std::max(1.0, kappa.cwiseAbs().maxCoeff());
  double worst = 0;
  for (Index j = 0; j < r.size(); ++j) {
    worst = std::max(worst, std::abs(r(j)) - fit.delta);  // feasibility
    if (std::abs(kappa(j)) > kappa_tol) {
      const double sign = kappa(j) > 0 ? 1.0 : -1.0;
      worst = std::max(worst, std::abs(r(j) + fit.delta * sign));  // binding + sign
    }
  }
  return std::max(worst, 0.0);
}

double riesz_loss(const Vector& theta, const ProblemData& data, double delta, PenaltyNorm norm) {
  check_delta(delta);
  if (theta.size() != data.d) throw InvalidInput("theta dimension mismatch");
  const Matrix sigma = data.phi_p.transpose() * data.phi_p / static_cast<double>(data.n);
  const double pen = norm == PenaltyNorm::l1 ? theta.lpNorm<1>() : theta.norm();
  return theta.dot(sigma * theta) - 2 * theta.dot(data.phi_q_mean) + delta * pen;
}

namespace {

// Euclidean projection onto {w >= 0, sum w = total}.
Vector project_scaled_simplex(const Vector& v, double total) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0, tau = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cum += u[k];
    const double t = (cum - total) / static_cast<double>(k + 1);
    if (u[k] - t > 0) tau = t;
  }
  return (v.array() - tau).cwiseMax(0.0).matrix();
}

}  // namespace

WeightFit solve_simplex_l2(const ProblemData& data, double delta, SimplexOptions opts) {
  check_delta(delta);
  const double n = static_cast<double>(data.n);
  const Matrix gram = data.phi_p.transpose() * data.phi_p;
  const Vector& b = data.phi_q_mean;
  // f(w) = ||(1/n) Phi'w - b||^2 + (delta/n^2) ||w||^2, Lipschitz gradient
  // constant 2 (lambda_max(Phi'Phi) + delta) / n^2.
  const double lip = 2 * (eigh_symmetric(gram).eigenvalues(0) + delta) / (n * n);
  auto grad = [&](const Vector& w) -> Vector {
    return (2.0 / n) * (data.phi_p * ((data.phi_p.transpose() * w) / n - b)) +
           (2 * delta / (n * n)) * w;
  };

  Vector w = Vector::Ones(data.n);
  Vector z = w;
  double t_mom = 1;
  auto value = [&](const Vector& x) {
    return ((data.phi_p.transpose() * x) / n - b).squaredNorm() +
           delta / (n * n) * x.squaredNorm();
  };
  double f_prev = value(w);
  for (long it = 0; it < opts.max_iter; ++it) {
    const Vector w_next = project_scaled_simplex(z - grad(z) / lip, n);
    const double f_next = value(w_next);
    if (f_next > f_prev) {
      z = w;
      t_mom = 1;
      continue;
    }
    const double step = (w_next - w).cwiseAbs().maxCoeff();
    const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t_mom * t_mom));
    z = w_next + ((t_mom - 1) / t_next) * (w_next - w);
    w = w_next;
    t_mom = t_next;
    f_prev = f_next;
    if (step <= opts.step_tol * (1 + w.cwiseAbs().maxCoeff())) break;
  }

  WeightFit fit;
  fit.weights = w;
  fit.theta = Vector();
  fit.delta = delta;
  fit.norm_family = NormFamily::simplex_l2;
  fit.phi_q_hat = profile(data, w);
  fit.imbalance = (fit.phi_q_hat - data.phi_q_mean).norm();
  return fit;
}

ExternalWeightReport evaluate_external_weights(const Vector& w, const ProblemData& data) {
  if (w.size() != data.n) throw InvalidInput("weight vector length mismatch");
  const double n = static_cast<double>(data.n);
  const Vector beta_ols = min_norm_solve(data.phi_p, data.y_p);
  const double intercept = data.y_p.mean();  // phi_p is source-centered
  const Vector resid = data.y_p - Vector::Constant(data.n, intercept) - data.phi_p * beta_ols;

  NonlinearDecomposition dec;
  dec.estimate = w.dot(data.y_p) / n;
  dec.c = w.mean();
  dec.eta = min_norm_solve(data.phi_p, (w.array() - dec.c).matrix().eval());
  const Vector unexplained = w - data.phi_p * dec.eta - Vector::Constant(data.n, dec.c);
  dec.approx_error = unexplained.dot(resid) / n;
  dec.error_bound = unexplained.norm() * resid.norm() / n;

  WeightFit fit;
  fit.weights = w;
  fit.delta = 0;
  fit.norm_family = NormFamily::external_nonlinear;
  fit.phi_q_hat = profile(data, w);
  fit.imbalance = (fit.phi_q_hat - data.phi_q_mean).norm();
  dec.collapsed_term = dec.c * intercept + fit.phi_q_hat.dot(beta_ols);
  return ExternalWeightReport{std::move(fit), std::move(dec)};
}

namespace {

struct EntropyState {
  double log_partition;  // log((1/n) sum exp(theta'phi_i))
  Vector weights;        // mean-1 weights
  Vector moment;         // (1/n) sum w_i phi_i
};

EntropyState entropy_state(const ProblemData& data, const Vector& theta) {
  const Vector s = data.phi_p * theta;
  const double m = s.maxCoeff();
  const Vector e = (s.array() - m).exp();
  const double mean_e = e.mean();
  EntropyState st;
  st.log_partition = m + std::log(mean_e);
  st.weights = e / mean_e;
  st.moment = data.phi_p.transpose() * st.weights / static_cast<double>(data.n);
  return st;
}

}  // namespace

Vector entropy_weights(const ProblemData& data, double delta, EntropyOptions opts) {
  check_delta(delta);
  const Vector& b = data.phi_q_mean;
  Vector theta = Vector::Zero(data.d);

  auto objective = [&](const Vector& th, const EntropyState& st) {
    const double pen = opts.slack_norm == PenaltyNorm::l1 ? th.lpNorm<1>() : th.norm();
    return st.log_partition - th.dot(b) + delta * pen;
  };

  if (delta == 0 || opts.slack_norm == PenaltyNorm::l2) {
    // Smooth dual (the l2 penalty uses ||theta||^2-free subgradient only at 0;
    // treat it via its smooth gradient away from the origin, which the damped
    // Newton path never leaves once moments are nonzero).
    for (long it = 0; it < opts.max_iter; ++it) {
      EntropyState st = entropy_state(data, theta);
      Vector grad = st.moment - b;
      if (delta > 0) {
        const double nrm = std::max(theta.norm(), 1e-12);
        grad += delta * theta / nrm;
      }
      if (grad.cwiseAbs().maxCoeff() <= opts.grad_tol) return st.weights;
      // Hessian of the log partition: weighted covariance of the features.
      const Vector wn = st.weights / static_cast<double>(data.n);
      const Matrix centered =
          data.phi_p - Vector::Ones(data.n) * st.moment.transpose();
      Matrix hess = centered.transpose() * wn.asDiagonal() * centered;
      hess.diagonal().array() += 1e-12 * (1 + hess.diagonal().maxCoeff());
      const Vector dir = -hess.ldlt().solve(grad);
      double step = 1;
      const double f0 = objective(theta, st);
      for (int ls = 0; ls < 60; ++ls) {
        const Vector cand = theta + step * dir;
        if (objective(cand, entropy_state(data, cand)) <= f0 + 1e-4 * step * grad.dot(dir))
          break;
        step /= 2;
      }
      theta += step * dir;
    }
    throw ConvergenceError("entropy dual did not reach gradient tolerance", theta);
  }

  // l1-penalized dual: proximal gradient with backtracking.
  double lip = 1;
  EntropyState st = entropy_state(data, theta);
  for (long it = 0; it < opts.max_iter; ++it) {
    const Vector grad = st.moment - b;
    const double f0 = st.log_partition - theta.dot(b);
    Vector cand;
    EntropyState st_cand;
    for (int ls = 0; ls < 200; ++ls) {
      cand = soft_threshold(theta - grad / lip, delta / lip);
      st_cand = entropy_state(data, cand);
      const Vector diff = cand - theta;
      const double quad = f0 + grad.dot(diff) + 0.5 * lip * diff.squaredNorm();
      if (st_cand.log_partition - cand.dot(b) <= quad + 1e-15 * std::abs(quad)) break;
      lip *= 2;
    }
    const double move = (cand - theta).cwiseAbs().maxCoeff() * lip;
    theta = cand;
    st = st_cand;
    if (move <= opts.grad_tol) return st.weights;
    lip = std::max(lip / 1.5, 1e-8);
  }
  throw ConvergenceError("entropy dual did not reach gradient tolerance", theta);
}

}  // namespace balwt
