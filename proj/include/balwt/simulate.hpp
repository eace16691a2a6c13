#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "balwt/dataset.hpp"
#include "balwt/mse.hpp"
#include "balwt/types.hpp"

// Synthetic and semi-synthetic data-generating processes plus the Monte Carlo
// study comparing practical tuning schemes to the oracle hyperparameters. The
// design is drawn once per DGP and held fixed; replicates redraw the noise.

namespace balwt {

struct SyntheticDgpSpec {
  Index n = 2000;
  Index d = 50;
  double eta_min = 1e-4;  // population eigenvalue range
  double eta_max = 3;
  double curvature_c = 5000;  // eigenvalues = linspace(min^(1/c), max^(1/c), d)^c
  double noise_var = 1;
  enum class Target { constant, random_unit } target_kind = Target::random_unit;
  double target_value = 1;  // constant target profile entry
  std::uint64_t seed = 0;
};

struct DgpDraw {
  std::string name;
  DgpTruth truth;    // sample_cov/target_mean in the centered draw coordinates
  ProblemData data;  // fixed design; y_p is a placeholder until noise is drawn
};

// Population covariance U diag(grid) U' with U drawn from the special
// orthogonal group; coefficients are |N(0, I)| normalized to unit length.
DgpDraw generate_synthetic(const SyntheticDgpSpec& spec);

enum class Perturbation { none, even_up, even_down };

// DGP calibrated to a real dataset: coefficients from a cross-validated
// ridge fit, noise from its residual variance, population covariance set to
// the sample covariance, and a fresh design redrawn from it. The target
// profile optionally shifts every second coordinate by frac * ||profile||.
DgpDraw generate_semisynthetic(const ProblemData& original, Perturbation kind, double frac,
                               std::uint64_t seed);

enum class Scheme { cv_outcome, cv_imbalance, cv_riesz };

std::string scheme_name(Scheme s);

struct SimulationSummary {
  std::vector<std::string> dgp_names;
  std::vector<std::string> scheme_names;
  Matrix scheme_mse;  // dgps x schemes, absolute MSE of psi_hat
  Matrix rel_mse;     // scheme MSE / oracle MSE
  Matrix prop_zero;   // fraction of replicates selecting delta = 0
  Vector oracle_mse;
  Vector oracle_lambda;
  Vector oracle_delta;
  // Per-scheme aggregates across DGPs.
  Vector agg_median_rel;
  Vector agg_best;        // min relative MSE
  Vector agg_worst;       // max relative MSE
  Vector agg_best_count;  // DGPs where the scheme has the lowest relative MSE
  Vector agg_worst_count;
  Vector agg_prop_zero;
};

struct StudyOptions {
  int replicates = 200;  // paper-scale runs use 1000
  int folds = 5;
  std::uint64_t seed = 0;
};

// For each DGP: oracle hyperparameters once, then per replicate draw noise,
// tune lambda by CV outcome and delta per scheme, and record squared errors
// of the double-ridge estimate against the design-conditional truth.
// Noise and fold seeds derive from (seed, dgp, replicate) counters, so
// results are independent of thread count and execution order.
SimulationSummary run_study(const std::vector<DgpDraw>& dgps, const std::vector<Scheme>& schemes,
                            const StudyOptions& opts);

// The six desk-scale synthetic DGPs: three eigenvalue profiles crossed with
// low and high noise.
std::vector<DgpDraw> desk_scale_suite(std::uint64_t seed);

}  // namespace balwt
