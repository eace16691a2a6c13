#pragma once

#include <optional>
#include <string>
#include <vector>

#include "balwt/types.hpp"

// CSV ingestion, source/target splitting, centering, feature expansion.

namespace balwt {

struct RawDataset {
  Matrix covariates;  // n_total x k
  Vector treatment;   // entries in {0,1}
  Vector outcome;
  std::vector<std::string> column_names;  // k covariate labels
  long rows_rejected = 0;                 // rows dropped for missing cells
};

struct CsvSchema {
  std::string treatment_column;
  std::string outcome_column;
  // Empty means: every remaining column is a covariate.
  std::vector<std::string> covariate_columns;
};

enum class ExpansionKind {
  identity,
  squares_of_listed_columns,
  pairwise_interactions_plus_quadratics,
};

struct FeatureExpansion {
  ExpansionKind kind = ExpansionKind::identity;
  std::vector<Index> continuous_columns;
  std::vector<Index> discrete_columns;
};

enum class TargetKind { att_control_to_treated, custom_rows };

// The (Phi_p, Y_p, target profile) triple every estimator consumes. Features
// are centered by the source mean; the intercept is carried by the centering,
// never as an explicit ones column.
struct ProblemData {
  Matrix phi_p;       // n x d, column means 0
  Vector y_p;         // n source outcomes (uncentered)
  Vector phi_q_mean;  // d, target mean minus center
  std::optional<Matrix> phi_q_rows;  // m x d, uncentered target rows
  Vector center;      // d source means removed from phi_p
  Index n = 0, m = 0, d = 0;
};

RawDataset ingest_csv(const std::string& path, const CsvSchema& schema);

// Expand covariates per recipe. Column order: originals, squares of
// continuous columns (listed order), continuous pairwise products (lex),
// discrete pairwise products (lex).
Matrix expand_features(const Matrix& covariates, const FeatureExpansion& expansion);

std::vector<std::string> expanded_column_names(
    const std::vector<std::string>& names, const FeatureExpansion& expansion);

ProblemData build_problem(const RawDataset& raw, const FeatureExpansion& expansion,
                          TargetKind target = TargetKind::att_control_to_treated);

// Assemble directly from matrices (source rows uncentered; target rows
// optional). Used by simulation and tests.
ProblemData make_problem(Matrix phi_source, Vector y, std::optional<Matrix> phi_target_rows);

// Same, but with the target given as an (uncentered) mean profile.
ProblemData make_problem_with_target_mean(Matrix phi_source, Vector y, Vector target_mean);

// Fold assignment shared by cross-fitting and tuning: contiguous blocks of a
// seeded shuffle, sizes differing by at most one. Same seed, same folds.
std::vector<std::vector<Index>> make_folds(Index n, int folds, std::uint64_t seed);

}  // namespace balwt
