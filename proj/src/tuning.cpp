#include "balwt/tuning.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "balwt/numerics.hpp"
#include "balwt/parallel.hpp"

namespace balwt {

namespace {

// Per-fold criterion: maps a per-sample-scale candidate to a held-out score.
using FoldEval = std::function<double(double)>;

struct FoldSplit {
  std::vector<Index> train, hold;
};

std::vector<FoldSplit> split_folds(Index n, int folds, std::uint64_t seed) {
  const auto fold_rows = make_folds(n, folds, seed);
  std::vector<FoldSplit> out(fold_rows.size());
  for (std::size_t s = 0; s < fold_rows.size(); ++s) {
    out[s].hold = fold_rows[s];
    for (std::size_t t = 0; t < fold_rows.size(); ++t)
      if (t != s)
        out[s].train.insert(out[s].train.end(), fold_rows[t].begin(), fold_rows[t].end());
  }
  return out;
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

// Spectral ridge solve with pseudoinverse behavior at zero denominators.
Vector spectral_solve(const Eigensystem& es, const Vector& rhs_rot, double penalty) {
  Vector scaled(rhs_rot.size());
  const double tol = 1e-12 * std::max(es.eigenvalues.size() ? es.eigenvalues(0) : 0.0, 1.0);
  for (Index j = 0; j < rhs_rot.size(); ++j) {
    const double denom = es.eigenvalues(j) + penalty;
    scaled(j) = denom > tol ? rhs_rot(j) / denom : 0.0;
  }
  return es.eigenvectors * scaled;
}

TuningResult tune_generic(
    const ProblemData& data, const GridSpec& grid, int folds, std::uint64_t seed,
    TuningScheme scheme,
    const std::function<FoldEval(const FoldSplit&)>& make_eval) {
  if (folds < 2) throw InvalidSplit("cross-validation needs at least 2 folds");
  if (grid.points < 2) throw InvalidInput("grid needs at least 2 points");
  const double scale =
      data.phi_p.colwise().squaredNorm().sum() /
      (static_cast<double>(data.d) * static_cast<double>(data.n));

  TuningResult result;
  result.scheme = scheme;
  const Vector log_pts = log_grid(grid.lo_factor * scale, grid.hi_factor * scale, grid.points);
  result.grid = Vector(log_pts.size() + 1);
  result.grid(0) = 0;
  result.grid.tail(log_pts.size()) = log_pts;

  const auto splits = split_folds(data.n, folds, seed);
  std::vector<FoldEval> evals(splits.size());
  for (std::size_t s = 0; s < splits.size(); ++s) evals[s] = make_eval(splits[s]);

  const Index n_cand = result.grid.size();
  result.per_fold = Matrix(folds, n_cand);
  parallel_for(static_cast<std::size_t>(folds) * static_cast<std::size_t>(n_cand),
               [&](std::size_t idx) {
                 const auto s = static_cast<Index>(idx / static_cast<std::size_t>(n_cand));
                 const auto c = static_cast<Index>(idx % static_cast<std::size_t>(n_cand));
                 result.per_fold(s, c) = evals[static_cast<std::size_t>(s)](result.grid(c));
               });
  result.mean_criterion = result.per_fold.colwise().mean().transpose();

  auto cv_mean = [&](double x) {
    double sum = 0;
    for (auto& e : evals) sum += e(x);
    return sum / static_cast<double>(evals.size());
  };

  Index best_i = 0;
  for (Index c = 1; c < n_cand; ++c)
    if (result.mean_criterion(c) < result.mean_criterion(best_i)) best_i = c;
  double best_x = result.grid(best_i);
  double best_f = result.mean_criterion(best_i);
  if (!std::isfinite(best_f)) throw InvalidInput("no candidate produced a finite criterion");

  // Golden refinement in log space around the best positive bracket.
  const Index pos_lo = best_i <= 1 ? 1 : best_i - 1;
  const Index pos_hi = best_i >= n_cand - 1 ? n_cand - 1 : best_i + 1;
  if (result.grid(pos_lo) > 0 && result.grid(pos_lo) < result.grid(pos_hi)) {
    const double refined = std::exp(golden_section_min(
        [&](double t) { return cv_mean(std::exp(t)); }, std::log(result.grid(pos_lo)),
        std::log(result.grid(pos_hi)), 1e-6));
    const double f_refined = cv_mean(refined);
    if (f_refined < best_f) {
      best_f = f_refined;
      best_x = refined;
    }
  }

  // Boundary selections collapse to an exact zero.
  if (best_x < 1e-10 * scale) best_x = 0;
  result.chosen = best_x;
  result.selected_zero = best_x == 0;
  return result;
}

}  // namespace

TuningResult cv_outcome(const ProblemData& data, OutcomeFamily family, const GridSpec& grid,
                        int folds, std::uint64_t seed) {
  if (family != OutcomeFamily::ridge && family != OutcomeFamily::generalized_ridge &&
      family != OutcomeFamily::lasso)
    throw InvalidInput("cv_outcome tunes ridge or lasso families");

  auto make_eval = [&data, family](const FoldSplit& split) -> FoldEval {
    const Matrix phi_tr = take_rows(data.phi_p, split.train);
    const Vector y_tr = take(data.y_p, split.train);
    const Matrix phi_ho = take_rows(data.phi_p, split.hold);
    const Vector y_ho = take(data.y_p, split.hold);
    const double n_tr = static_cast<double>(phi_tr.rows());
    const double n_ho = static_cast<double>(phi_ho.rows());

    if (family == OutcomeFamily::lasso) {
      return [=](double x) {
        if (x == 0) {  // unpenalized limit, matching the ridge path at zero
          const Vector beta = min_norm_solve(phi_tr, y_tr);
          return (y_ho - phi_ho * beta).squaredNorm() / n_ho;
        }
        ProblemData sub;
        sub.phi_p = phi_tr;
        sub.y_p = y_tr;
        sub.phi_q_mean = Vector::Zero(phi_tr.cols());
        sub.n = phi_tr.rows();
        sub.d = phi_tr.cols();
        try {
          const Vector beta = fit_lasso(sub, n_tr * x).beta;
          return (y_ho - phi_ho * beta).squaredNorm() / n_ho;
        } catch (const ConvergenceError&) {
          return std::numeric_limits<double>::infinity();
        }
      };
    }
    const auto es = std::make_shared<Eigensystem>(eigh_symmetric(phi_tr.transpose() * phi_tr));
    const auto rhs = std::make_shared<Vector>(es->eigenvectors.transpose() *
                                              (phi_tr.transpose() * y_tr));
    return [=](double x) {
      const Vector beta = spectral_solve(*es, *rhs, n_tr * x);
      return (y_ho - phi_ho * beta).squaredNorm() / n_ho;
    };
  };
  return tune_generic(data, grid, folds, seed, TuningScheme::cv_outcome_mse, make_eval);
}

namespace {

FoldEval weight_eval(const ProblemData& data, NormFamily family, const FoldSplit& split,
                     bool riesz) {
  const Matrix phi_tr = take_rows(data.phi_p, split.train);
  const Matrix phi_ho = take_rows(data.phi_p, split.hold);
  const double n_tr = static_cast<double>(phi_tr.rows());
  const double n_ho = static_cast<double>(phi_ho.rows());
  const auto sigma_ho = std::make_shared<Matrix>(phi_ho.transpose() * phi_ho / n_ho);
  const Vector q = data.phi_q_mean;

  auto score = [sigma_ho, q, riesz](const Vector& theta) {
    if (riesz) return theta.dot(*sigma_ho * theta) - 2 * theta.dot(q);
    return (*sigma_ho * theta - q).squaredNorm();
  };

  if (family == NormFamily::l2) {
    const auto es = std::make_shared<Eigensystem>(eigh_symmetric(phi_tr.transpose() * phi_tr));
    const auto rhs = std::make_shared<Vector>(es->eigenvectors.transpose() * q);
    return [=](double x) {
      // theta = n_tr (Gram + n_tr x I)^+ phi_q_mean in the train eigenbasis.
      const Vector theta = n_tr * spectral_solve(*es, *rhs, n_tr * x);
      return score(theta);
    };
  }
  if (family == NormFamily::linf) {
    const auto train = std::make_shared<ProblemData>();
    train->phi_p = phi_tr;
    train->y_p = Vector::Zero(phi_tr.rows());
    train->phi_q_mean = q;
    train->n = phi_tr.rows();
    train->d = phi_tr.cols();
    return [=](double x) {
      // The sup-norm radius is already in feature-mean units; no raw rescale.
      try {
        return score(solve_linf_general(*train, x).theta);
      } catch (const InfeasibleError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
  }
  throw InvalidInput("tunable weight families are l2 and linf");
}

}  // namespace

TuningResult cv_imbalance(const ProblemData& data, NormFamily family, const GridSpec& grid,
                          int folds, std::uint64_t seed) {
  return tune_generic(data, grid, folds, seed, TuningScheme::cv_imbalance,
                      [&](const FoldSplit& split) { return weight_eval(data, family, split, false); });
}

TuningResult cv_riesz(const ProblemData& data, NormFamily family, const GridSpec& grid,
                      int folds, std::uint64_t seed) {
  return tune_generic(data, grid, folds, seed, TuningScheme::cv_riesz,
                      [&](const FoldSplit& split) { return weight_eval(data, family, split, true); });
}

TuningResult delta_equals_lambda(const TuningResult& outcome_result) {
  if (outcome_result.scheme != TuningScheme::cv_outcome_mse)
    throw InvalidInput("delta_equals_lambda consumes a cv_outcome result");
  TuningResult result = outcome_result;
  result.scheme = TuningScheme::outcome_equals_delta;
  return result;
}

}  // namespace balwt
