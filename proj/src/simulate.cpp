#include "balwt/simulate.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "balwt/numerics.hpp"
#include "balwt/parallel.hpp"
#include "balwt/random.hpp"
#include "balwt/tuning.hpp"

namespace balwt {

namespace {

// Haar-ish draw on SO(d): QR of a standard normal matrix with the column
// signs pinned by R's diagonal, then a determinant fix.
Matrix random_rotation(Rng& rng, Index d) {
  const Matrix z = rng.normal_matrix(d, d);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

Vector eigenvalue_grid(double eta_min, double eta_max, double c, Index d) {
  const double lo = std::pow(eta_min, 1.0 / c), hi = std::pow(eta_max, 1.0 / c);
  Vector g(d);
  for (Index i = 0; i < d; ++i) {
    const double t = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    g(i) = std::pow(lo + t * (hi - lo), c);
  }
  return g.cwiseMax(eta_min).cwiseMin(eta_max);
}

DgpTruth truth_from_draw(const ProblemData& data, Vector beta0, Matrix pop_cov,
                         double noise_var) {
  DgpTruth truth;
  truth.beta0 = std::move(beta0);
  truth.pop_cov = std::move(pop_cov);
  truth.sample_cov = data.phi_p.transpose() * data.phi_p / static_cast<double>(data.n);
  truth.noise_var = noise_var;
  truth.target_mean = data.phi_q_mean;
  truth.n = data.n;
  return truth;
}

}  // namespace

DgpDraw generate_synthetic(const SyntheticDgpSpec& spec) {
  if (!(spec.eta_min < spec.eta_max) || spec.eta_min <= 0)
    throw InvalidInput("eigenvalue range needs 0 < eta_min < eta_max");
  if (spec.curvature_c <= 0 || spec.noise_var < 0 || spec.n < 2 || spec.d < 1)
    throw InvalidInput("bad synthetic spec");

  Rng design_rng(spec.seed, 1);
  const Vector grid = eigenvalue_grid(spec.eta_min, spec.eta_max, spec.curvature_c, spec.d);
  const Matrix u = random_rotation(design_rng, spec.d);
  Matrix pop_cov = u * grid.asDiagonal() * u.transpose();
  pop_cov = ((pop_cov + pop_cov.transpose()) / 2).eval();

  const Matrix z = design_rng.normal_matrix(spec.n, spec.d);
  const Matrix phi_raw = z * grid.cwiseSqrt().asDiagonal() * u.transpose();

  Rng coef_rng(spec.seed, 2);
  Vector beta0 = coef_rng.normal_vector(spec.d).cwiseAbs();
  beta0 /= beta0.norm();

  Vector target(spec.d);
  if (spec.target_kind == SyntheticDgpSpec::Target::constant) {
    target.setConstant(spec.target_value);
  } else {
    Rng target_rng(spec.seed, 3);
    target = target_rng.normal_vector(spec.d);
    target /= target.norm();
  }

  DgpDraw draw;
  draw.name = "synthetic";
  draw.data = make_problem_with_target_mean(phi_raw, Vector::Zero(spec.n), target);
  draw.truth = truth_from_draw(draw.data, std::move(beta0), std::move(pop_cov), spec.noise_var);
  return draw;
}

DgpDraw generate_semisynthetic(const ProblemData& original, Perturbation kind, double frac,
                               std::uint64_t seed) {
  if (frac < 0) throw InvalidInput("perturbation fraction must be nonnegative");
  const double n = static_cast<double>(original.n);

  // Calibrate coefficients and noise on the original sample.
  const TuningResult tuned =
      cv_outcome(original, OutcomeFamily::ridge, GridSpec{}, 5, seed);
  const Vector beta0 = fit_ridge(original, n * tuned.chosen).beta;
  const double noise_var = (original.y_p - original.phi_p * beta0).squaredNorm() / n;
  const Matrix pop_cov = original.phi_p.transpose() * original.phi_p / n;

  Vector target = original.phi_q_mean;
  if (kind != Perturbation::none) {
    const double shift = frac * target.norm() * (kind == Perturbation::even_up ? 1 : -1);
    for (Index j = 1; j < target.size(); j += 2) target(j) += shift;
  }

  // Fresh mean-zero design with the calibrated covariance.
  const Eigensystem es = eigh_symmetric(pop_cov);
  Rng rng(seed, 4);
  const Matrix z = rng.normal_matrix(original.n, original.d);
  const Matrix phi_raw =
      z * es.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors.transpose();

  DgpDraw draw;
  draw.name = "semisynthetic";
  draw.data = make_problem_with_target_mean(phi_raw, Vector::Zero(original.n), target);
  draw.truth = truth_from_draw(draw.data, beta0, pop_cov, noise_var);
  return draw;
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::cv_outcome:
      return "cv_outcome";
    case Scheme::cv_imbalance:
      return "cv_imbalance";
    case Scheme::cv_riesz:
      return "cv_riesz";
  }
  return "unknown";
}

namespace {

// Double-ridge estimate in the precomputed Gram eigenbasis: for raw penalties
// L = n*lambda, D = n*delta, psi = sum_j q_j u_j / (s_j + gamma_j) with u the
// rotated Phi'y and gamma_j = D*L/(s_j + L + D).
struct DgpWorkspace {
  Eigensystem es;     // of the raw Gram Phi'Phi
  Matrix rot_phi_t;   // V' Phi' (d x n)
  Vector q_rot;       // V' phi_q_mean
  double n;

  double estimate(const Vector& y, double lambda, double delta) const {
    const Vector u = rot_phi_t * y;
    const double lam = n * lambda, del = n * delta;
    const double tol = 1e-12 * std::max(es.eigenvalues(0), 1.0);
    double psi = 0;
    for (Index j = 0; j < u.size(); ++j) {
      const double s = es.eigenvalues(j);
      const double gd = s + lam + del;
      const double gamma = gd > 0 ? del * lam / gd : 0.0;
      const double denom = s + gamma;
      if (denom > tol) psi += q_rot(j) * u(j) / denom;
    }
    return psi;
  }
};

}  // namespace

SimulationSummary run_study(const std::vector<DgpDraw>& dgps, const std::vector<Scheme>& schemes,
                            const StudyOptions& opts) {
  if (opts.replicates < 1) throw InvalidInput("need at least one replicate");
  if (dgps.empty() || schemes.empty()) throw InvalidInput("empty study");

  const auto n_dgp = static_cast<Index>(dgps.size());
  const auto n_scheme = static_cast<Index>(schemes.size());
  SimulationSummary summary;
  for (const auto& d : dgps) summary.dgp_names.push_back(d.name);
  for (const auto s : schemes) summary.scheme_names.push_back(scheme_name(s));
  summary.scheme_mse = Matrix::Zero(n_dgp, n_scheme);
  summary.rel_mse = Matrix::Zero(n_dgp, n_scheme);
  summary.prop_zero = Matrix::Zero(n_dgp, n_scheme);
  summary.oracle_mse = Vector::Zero(n_dgp);
  summary.oracle_lambda = Vector::Zero(n_dgp);
  summary.oracle_delta = Vector::Zero(n_dgp);

  for (Index g = 0; g < n_dgp; ++g) {
    const DgpDraw& dgp = dgps[static_cast<std::size_t>(g)];
    const OracleResult oracle = oracle_hyperparams(dgp.truth);
    summary.oracle_lambda(g) = oracle.lambda_star;
    summary.oracle_delta(g) = oracle.delta_star;

    DgpWorkspace ws;
    ws.es = eigh_symmetric(dgp.data.phi_p.transpose() * dgp.data.phi_p);
    ws.rot_phi_t = ws.es.eigenvectors.transpose() * dgp.data.phi_p.transpose();
    ws.q_rot = ws.es.eigenvectors.transpose() * dgp.data.phi_q_mean;
    ws.n = static_cast<double>(dgp.data.n);

    const double psi_true = dgp.truth.target_mean.dot(dgp.truth.beta0);
    const double sd = std::sqrt(dgp.truth.noise_var);
    const Vector signal = dgp.data.phi_p * dgp.truth.beta0;

    const auto reps = static_cast<std::size_t>(opts.replicates);
    Matrix sq_err(opts.replicates, n_scheme + 1);  // last column: oracle
    Matrix zero_flag = Matrix::Zero(opts.replicates, n_scheme);

    parallel_for(reps, [&](std::size_t r) {
      Rng rng(opts.seed, (static_cast<std::uint64_t>(g) << 32) | r);
      const std::uint64_t fold_seed = rng.next_u64();
      ProblemData data = dgp.data;
      data.y_p = signal + sd * rng.normal_vector(data.n);

      const TuningResult lam =
          cv_outcome(data, OutcomeFamily::ridge, GridSpec{}, opts.folds, fold_seed);
      for (Index k = 0; k < n_scheme; ++k) {
        TuningResult del;
        switch (schemes[static_cast<std::size_t>(k)]) {
          case Scheme::cv_outcome:
            del = delta_equals_lambda(lam);
            break;
          case Scheme::cv_imbalance:
            del = cv_imbalance(data, NormFamily::l2, GridSpec{}, opts.folds, fold_seed);
            break;
          case Scheme::cv_riesz:
            del = cv_riesz(data, NormFamily::l2, GridSpec{}, opts.folds, fold_seed);
            break;
        }
        const double psi = ws.estimate(data.y_p, lam.chosen, del.chosen);
        sq_err(static_cast<Index>(r), k) = (psi - psi_true) * (psi - psi_true);
        zero_flag(static_cast<Index>(r), k) = del.selected_zero ? 1.0 : 0.0;
      }
      const double psi_o = ws.estimate(data.y_p, oracle.lambda_star, oracle.delta_star);
      sq_err(static_cast<Index>(r), n_scheme) = (psi_o - psi_true) * (psi_o - psi_true);
    });

    summary.oracle_mse(g) = sq_err.col(n_scheme).mean();
    for (Index k = 0; k < n_scheme; ++k) {
      summary.scheme_mse(g, k) = sq_err.col(k).mean();
      summary.rel_mse(g, k) = summary.scheme_mse(g, k) / summary.oracle_mse(g);
      summary.prop_zero(g, k) = zero_flag.col(k).mean();
    }
  }

  summary.agg_median_rel = Vector::Zero(n_scheme);
  summary.agg_best = Vector::Zero(n_scheme);
  summary.agg_worst = Vector::Zero(n_scheme);
  summary.agg_best_count = Vector::Zero(n_scheme);
  summary.agg_worst_count = Vector::Zero(n_scheme);
  summary.agg_prop_zero = Vector::Zero(n_scheme);
  for (Index k = 0; k < n_scheme; ++k) {
    std::vector<double> rel(static_cast<std::size_t>(n_dgp));
    for (Index gi = 0; gi < n_dgp; ++gi) rel[static_cast<std::size_t>(gi)] = summary.rel_mse(gi, k);
    std::sort(rel.begin(), rel.end());
    const std::size_t h = rel.size() / 2;
    summary.agg_median_rel(k) =
        rel.size() % 2 ? rel[h] : (rel[h - 1] + rel[h]) / 2;
    summary.agg_best(k) = summary.rel_mse.col(k).minCoeff();
    summary.agg_worst(k) = summary.rel_mse.col(k).maxCoeff();
    summary.agg_prop_zero(k) = summary.prop_zero.col(k).mean();
  }
  for (Index gi = 0; gi < n_dgp; ++gi) {
    Index best_k = 0, worst_k = 0;
    summary.rel_mse.row(gi).minCoeff(&best_k);
    summary.rel_mse.row(gi).maxCoeff(&worst_k);
    summary.agg_best_count(best_k) += 1;
    summary.agg_worst_count(worst_k) += 1;
  }
  return summary;
}

std::vector<DgpDraw> desk_scale_suite(std::uint64_t seed) {
  struct Setting {
    const char* name;
    double eta_min, eta_max, c;
  };
  const Setting settings[] = {
      {"setting1", 1e-4, 3, 5000},
      {"setting2", 1e-8, 3, 5000},
      {"setting3", 1e-10, 5, 10},
  };
  const double noises[] = {0.1, 2.0};

  std::vector<DgpDraw> suite;
  std::uint64_t k = 0;
  for (const auto& s : settings) {
    for (const double nv : noises) {
      SyntheticDgpSpec spec;
      spec.eta_min = s.eta_min;
      spec.eta_max = s.eta_max;
      spec.curvature_c = s.c;
      spec.noise_var = nv;
      spec.seed = mix64(seed + 0x9e3779b97f4a7c15ull * (k + 1));
      DgpDraw draw = generate_synthetic(spec);
      draw.name = std::string(s.name) + (nv < 1 ? "_lownoise" : "_highnoise");
      suite.push_back(std::move(draw));
      ++k;
    }
  }
  return suite;
}

}  // namespace balwt
