#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "balwt/dataset.hpp"
#include "balwt/types.hpp"

// Command implementations behind the balwt tool. Each command resolves its
// inputs (a CSV or a seeded synthetic instance), writes artifacts plus a
// manifest into the output directory, and returns a process exit code:
// 0 success, 1 computational or data failure, 2 usage error.

namespace balwt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

struct RunConfig {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int precision = 12;  // significant digits in CSV artifacts
};

// Input resolution shared by the data-driven commands. An empty data_path
// falls back to a seeded synthetic instance so every command can run
// self-contained.
struct DataArgs {
  std::string data_path;
  std::string treatment = "treatment";
  std::string outcome = "outcome";
  std::vector<std::string> covariates;  // empty: all remaining columns
  std::string expand = "none";          // none | squares | interactions
  std::vector<Index> continuous;
  std::vector<Index> discrete;
  Index synth_n = 200;
  Index synth_d = 10;
};

ProblemData load_problem(const DataArgs& args, std::uint64_t seed);

// Ingest and summarize: dimensions, rejected rows, column names, centering.
int cmd_ingest(const RunConfig& cfg, const DataArgs& data);

struct FitArgs {
  std::string family = "ols";  // ols | ridge | lasso
  double lambda = 0;           // raw penalty, added to Phi'Phi
  bool tune_lambda = false;    // cross-validated prediction MSE
  std::string weights = "l2";  // l2 | exact | linf | simplex | entropy | none
  double delta = 0;            // raw for l2/simplex; profile units for linf
  std::string tune_delta = "none";  // none | cv_imbalance | cv_riesz | lambda
  int folds = 5;
};

// Outcome fit, balancing weights, and the augmented estimate with its
// collapsed coefficients; artifact fit.json.
int cmd_fit(const RunConfig& cfg, const DataArgs& data, const FitArgs& args);

struct RegpathArgs {
  std::string weights = "l2";  // l2 (log grid) | linf (linear grid, diagonal Gram)
  double lambda = -1;          // base ridge penalty; <0 auto, 0 plain OLS
  int points = 41;
  double delta_max = -1;  // <0: auto (l2: collapse scale, linf: max |profile|)
};

// Coefficient paths along the weight penalty; artifact regpath.csv with rows
// (hyperparameter, coordinate, value, series) where series is one of
// outcome_coef, reweighted_feature, augmented_coef.
int cmd_regpath(const RunConfig& cfg, const DataArgs& data, const RegpathArgs& args);

struct VerifyArgs {
  int instances = 50;
  std::string perturb;  // fault-inject one named identity
};

// Run the identity suite, print one line per identity, write verify.json;
// exits 0 iff every identity holds.
int cmd_verify(const RunConfig& cfg, const VerifyArgs& args);

struct OracleArgs {
  // Synthetic truth (default) ...
  Index n = 2000;
  Index d = 50;
  double eta_min = 1e-4;
  double eta_max = 3;
  double curvature = 5000;
  double noise = 1;
  std::string target = "random_unit";  // random_unit | constant
  // ... or semisynthetic truth calibrated to --data when a CSV is given.
  std::string perturb_target = "none";  // none | even_up | even_down
  double perturb_frac = 0.1;
};

// Design-conditional oracle hyperparameters and their criterion curves;
// artifacts oracle.json and oracle_curves.csv.
int cmd_oracle(const RunConfig& cfg, const DataArgs& data, const OracleArgs& args);

struct TuneArgs {
  std::string scheme = "cv_outcome";  // cv_outcome | cv_imbalance | cv_riesz | lambda
  std::string family = "ridge";       // outcome family under cv_outcome (ridge | lasso)
  std::string weights = "l2";         // weight family under imbalance/riesz (l2 | linf)
  int folds = 5;
};

// Cross-validated hyperparameter selection; artifacts tune.json and
// tune_curve.csv (candidate, mean criterion, per-fold criteria).
int cmd_tune(const RunConfig& cfg, const DataArgs& data, const TuneArgs& args);

struct SimulateArgs {
  int replicates = 20;  // desk-scale default; studies use hundreds
  int folds = 5;
  int dgps = 6;  // leading subset of the desk suite
};

// Monte Carlo comparison of tuning schemes against the oracle; artifacts
// simulate_summary.csv and simulate_aggregates.csv.
int cmd_simulate(const RunConfig& cfg, const SimulateArgs& args);

}  // namespace balwt
