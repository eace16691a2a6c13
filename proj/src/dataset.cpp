#include "balwt/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "balwt/random.hpp"

namespace balwt {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) || s[b] == '"')) ++b;
  while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) || s[e - 1] == '"')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool is_missing(const std::string& cell) {
  if (cell.empty()) return true;
  std::string low;
  for (char c : cell) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return low == "na" || low == "nan" || low == ".";
}

// Returns false for missing cells; throws ParseError for garbage.
bool parse_cell(const std::string& cell, long row, const std::string& col, double* out) {
  if (is_missing(cell)) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("row " + std::to_string(row) + ", column '" + col +
                     "': cannot parse '" + cell + "' as a number");
  return true;
}

}  // namespace

RawDataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "': empty file, header expected");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  auto col_index = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw SchemaError("'" + path + "': missing column '" + name + "'");
    return static_cast<Index>(it - header.begin());
  };

  const Index treat_col = col_index(schema.treatment_column);
  const Index out_col = col_index(schema.outcome_column);

  std::vector<Index> cov_cols;
  std::vector<std::string> cov_names;
  if (schema.covariate_columns.empty()) {
    for (Index j = 0; j < static_cast<Index>(header.size()); ++j)
      if (j != treat_col && j != out_col) {
        cov_cols.push_back(j);
        cov_names.push_back(header[j]);
      }
  } else {
    for (const auto& name : schema.covariate_columns) {
      cov_cols.push_back(col_index(name));
      cov_names.push_back(name);
    }
  }

  std::vector<double> treat, outc;
  std::vector<std::vector<double>> covs;
  long rejected = 0;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    bool missing = false;
    double t = 0, y = 0;
    std::vector<double> x(cov_cols.size());
    missing |= !parse_cell(cells[treat_col], row, schema.treatment_column, &t);
    missing |= !parse_cell(cells[out_col], row, schema.outcome_column, &y);
    for (size_t j = 0; j < cov_cols.size() && !missing; ++j)
      missing |= !parse_cell(cells[cov_cols[j]], row, cov_names[j], &x[j]);
    if (missing) {
      ++rejected;
      continue;
    }
    if (t != 0.0 && t != 1.0)
      throw SchemaError("row " + std::to_string(row) + ": treatment value " +
                        cells[treat_col] + " is not 0/1");
    treat.push_back(t);
    outc.push_back(y);
    covs.push_back(std::move(x));
  }

  RawDataset ds;
  ds.rows_rejected = rejected;
  ds.column_names = cov_names;
  const Index n = static_cast<Index>(covs.size());
  const Index k = static_cast<Index>(cov_cols.size());
  ds.covariates.resize(n, k);
  ds.treatment.resize(n);
  ds.outcome.resize(n);
  for (Index i = 0; i < n; ++i) {
    ds.treatment[i] = treat[i];
    ds.outcome[i] = outc[i];
    for (Index j = 0; j < k; ++j) ds.covariates(i, j) = covs[i][j];
  }
  return ds;
}

namespace {

void check_indices(const std::vector<Index>& idx, Index k, const char* what) {
  for (Index j : idx)
    if (j < 0 || j >= k)
      throw InvalidInput(std::string(what) + " index " + std::to_string(j) +
                         " out of range for k=" + std::to_string(k));
}

}  // namespace

Matrix expand_features(const Matrix& covariates, const FeatureExpansion& expansion) {
  const Index n = covariates.rows();
  const Index k = covariates.cols();
  check_indices(expansion.continuous_columns, k, "continuous");
  check_indices(expansion.discrete_columns, k, "discrete");

  if (expansion.kind == ExpansionKind::identity) return covariates;

  std::vector<Vector> extra;
  const auto& cont = expansion.continuous_columns;
  if (expansion.kind == ExpansionKind::squares_of_listed_columns ||
      expansion.kind == ExpansionKind::pairwise_interactions_plus_quadratics) {
    for (Index j : cont) extra.push_back(covariates.col(j).array().square());
  }
  if (expansion.kind == ExpansionKind::pairwise_interactions_plus_quadratics) {
    for (size_t a = 0; a < cont.size(); ++a)
      for (size_t b = a + 1; b < cont.size(); ++b)
        extra.push_back(covariates.col(cont[a]).cwiseProduct(covariates.col(cont[b])));
    const auto& disc = expansion.discrete_columns;
    for (size_t a = 0; a < disc.size(); ++a)
      for (size_t b = a + 1; b < disc.size(); ++b)
        extra.push_back(covariates.col(disc[a]).cwiseProduct(covariates.col(disc[b])));
  }

  Matrix out(n, k + static_cast<Index>(extra.size()));
  out.leftCols(k) = covariates;
  for (size_t j = 0; j < extra.size(); ++j) out.col(k + static_cast<Index>(j)) = extra[j];
  return out;
}

std::vector<std::string> expanded_column_names(const std::vector<std::string>& names,
                                               const FeatureExpansion& expansion) {
  std::vector<std::string> out = names;
  if (expansion.kind == ExpansionKind::identity) return out;
  const auto& cont = expansion.continuous_columns;
  for (Index j : cont) out.push_back(names[j] + "_sq");
  if (expansion.kind == ExpansionKind::pairwise_interactions_plus_quadratics) {
    for (size_t a = 0; a < cont.size(); ++a)
      for (size_t b = a + 1; b < cont.size(); ++b)
        out.push_back(names[cont[a]] + "_x_" + names[cont[b]]);
    const auto& disc = expansion.discrete_columns;
    for (size_t a = 0; a < disc.size(); ++a)
      for (size_t b = a + 1; b < disc.size(); ++b)
        out.push_back(names[disc[a]] + "_x_" + names[disc[b]]);
  }
  return out;
}

namespace {

ProblemData center_and_pack(Matrix phi_source, Vector y, std::optional<Matrix> target_rows,
                            std::optional<Vector> target_mean_uncentered) {
  if (phi_source.rows() < 2) throw InvalidSplit("need at least 2 source rows");
  ProblemData pd;
  pd.n = phi_source.rows();
  pd.d = phi_source.cols();
  pd.center = phi_source.colwise().mean();
  pd.phi_p = phi_source.rowwise() - pd.center.transpose();
  pd.y_p = std::move(y);
  if (target_rows) {
    pd.m = target_rows->rows();
    if (pd.m == 0) throw InvalidSplit("empty target");
    pd.phi_q_mean = target_rows->colwise().mean().transpose() - pd.center;
    pd.phi_q_rows = std::move(target_rows);
  } else {
    pd.m = 0;
    pd.phi_q_mean = *target_mean_uncentered - pd.center;
  }
  return pd;
}

}  // namespace

ProblemData build_problem(const RawDataset& raw, const FeatureExpansion& expansion,
                          TargetKind target) {
  if (target != TargetKind::att_control_to_treated)
    throw InvalidInput("custom_rows targets are assembled via make_problem");
  const Matrix expanded = expand_features(raw.covariates, expansion);
  const Index n_total = expanded.rows();
  Index n_src = 0, n_tgt = 0;
  for (Index i = 0; i < n_total; ++i) (raw.treatment[i] == 0.0 ? n_src : n_tgt)++;
  if (n_src == 0 || n_tgt == 0)
    throw InvalidSplit("source (control) and target (treated) must both be nonempty");
  Matrix src(n_src, expanded.cols()), tgt(n_tgt, expanded.cols());
  Vector y(n_src);
  Index is = 0, it = 0;
  for (Index i = 0; i < n_total; ++i) {
    if (raw.treatment[i] == 0.0) {
      src.row(is) = expanded.row(i);
      y[is++] = raw.outcome[i];
    } else {
      tgt.row(it++) = expanded.row(i);
    }
  }
  return center_and_pack(std::move(src), std::move(y), std::move(tgt), std::nullopt);
}

ProblemData make_problem(Matrix phi_source, Vector y, std::optional<Matrix> phi_target_rows) {
  if (!phi_target_rows) throw InvalidSplit("target rows required");
  return center_and_pack(std::move(phi_source), std::move(y), std::move(phi_target_rows),
                         std::nullopt);
}

ProblemData make_problem_with_target_mean(Matrix phi_source, Vector y, Vector target_mean) {
  return center_and_pack(std::move(phi_source), std::move(y), std::nullopt,
                         std::move(target_mean));
}

std::vector<std::vector<Index>> make_folds(Index n, int folds, std::uint64_t seed) {
  if (folds < 1 || static_cast<Index>(folds) > n)
    throw InvalidSplit("fold count must lie in [1, n]");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed, 0);
  for (Index i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)],
              order[rng.below(static_cast<std::uint64_t>(i + 1))]);
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(folds));
  for (int s = 0; s < folds; ++s) {
    const Index lo = n * s / folds, hi = n * (s + 1) / folds;
    out[static_cast<std::size_t>(s)].assign(order.begin() + lo, order.begin() + hi);
  }
  return out;
}

}  // namespace balwt
