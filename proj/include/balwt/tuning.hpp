#pragma once

#include <cstdint>

#include "balwt/balancing.hpp"
#include "balwt/dataset.hpp"
#include "balwt/outcome.hpp"
#include "balwt/types.hpp"

// K-fold hyperparameter selection. Candidate penalties live on the
// per-sample scale (added to Phi'Phi / n); each fold fit converts to the raw
// scale by multiplying with its training size, so criteria are comparable
// across fold sizes. Apply a chosen value to a full sample the same way:
// raw = n * chosen.

namespace balwt {

enum class TuningScheme { cv_outcome_mse, cv_imbalance, cv_riesz, outcome_equals_delta };

struct GridSpec {
  double lo_factor = 1e-8;  // lower edge = lo_factor * mean diag of Phi'Phi/n
  double hi_factor = 1e4;
  int points = 49;
};

struct TuningResult {
  double chosen = 0;  // per-sample scale; exact 0 when the boundary wins
  TuningScheme scheme = TuningScheme::cv_outcome_mse;
  bool selected_zero = false;
  Vector grid;            // candidates scanned (leading exact-0 entry)
  Vector mean_criterion;  // fold average per candidate
  Matrix per_fold;        // folds x candidates
};

// Held-out prediction MSE of a ridge (or lasso) outcome model.
TuningResult cv_outcome(const ProblemData& data, OutcomeFamily family, const GridSpec& grid,
                        int folds, std::uint64_t seed);

// Held-out imbalance || Sigma_holdout theta - phi_q_mean ||^2 of weight duals
// fit on the complement; the target profile is the fixed full-sample mean.
TuningResult cv_imbalance(const ProblemData& data, NormFamily family, const GridSpec& grid,
                          int folds, std::uint64_t seed);

// Held-out loss theta' Sigma_holdout theta - 2 theta' phi_q_mean.
TuningResult cv_riesz(const ProblemData& data, NormFamily family, const GridSpec& grid,
                      int folds, std::uint64_t seed);

// Reuse the cross-validated outcome penalty as the weight penalty.
TuningResult delta_equals_lambda(const TuningResult& outcome_result);

}  // namespace balwt
