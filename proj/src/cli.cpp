#include "balwt/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "balwt/augment.hpp"
#include "balwt/balancing.hpp"
#include "balwt/io.hpp"
#include "balwt/mse.hpp"
#include "balwt/numerics.hpp"
#include "balwt/outcome.hpp"
#include "balwt/random.hpp"
#include "balwt/simulate.hpp"
#include "balwt/tuning.hpp"
#include "balwt/verify.hpp"

namespace balwt {
namespace {

using nlohmann::json;

// Bad flag values and inconsistent flag combinations; exits 2, not 1.
struct UsageError : Error {
  using Error::Error;
};

template <class F>
int run_command(F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitComputation;
  }
}

std::string artifact_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

// Full precision so the manifest alone can reproduce the run.
std::string manifest_num(double x) { return format_sig(x, 17); }

void emit_manifest(const RunConfig& cfg, const std::string& command,
                   std::map<std::string, std::string> kv) {
  kv["command"] = command;
  kv["version"] = kVersion;
  kv["seed"] = std::to_string(cfg.seed);
  kv["precision"] = std::to_string(cfg.precision);
  write_manifest_atomic(artifact_path(cfg, command + "_manifest.txt"), kv);
}

void describe_data(const DataArgs& args, std::map<std::string, std::string>& kv) {
  if (args.data_path.empty()) {
    kv["input"] = "synthetic";
    kv["synth_n"] = std::to_string(args.synth_n);
    kv["synth_d"] = std::to_string(args.synth_d);
    return;
  }
  kv["input"] = args.data_path;
  kv["treatment"] = args.treatment;
  kv["outcome"] = args.outcome;
  kv["expand"] = args.expand;
}

json vec(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void write_json_atomic(const std::string& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

FeatureExpansion expansion_spec(const DataArgs& args) {
  FeatureExpansion exp;
  if (args.expand == "none") {
    exp.kind = ExpansionKind::identity;
  } else if (args.expand == "squares") {
    exp.kind = ExpansionKind::squares_of_listed_columns;
  } else if (args.expand == "interactions") {
    exp.kind = ExpansionKind::pairwise_interactions_plus_quadratics;
  } else {
    throw UsageError("unknown expansion: " + args.expand);
  }
  exp.continuous_columns = args.continuous;
  exp.discrete_columns = args.discrete;
  return exp;
}

OutcomeFamily parse_outcome_family(const std::string& s) {
  if (s == "ols") return OutcomeFamily::ols;
  if (s == "ridge") return OutcomeFamily::ridge;
  if (s == "lasso") return OutcomeFamily::lasso;
  throw UsageError("unknown outcome family: " + s);
}

NormFamily parse_weight_family(const std::string& s) {
  if (s == "l2") return NormFamily::l2;
  if (s == "linf") return NormFamily::linf;
  throw UsageError("unknown weight family for tuning: " + s);
}

OutcomeFit fit_outcome(const ProblemData& data, OutcomeFamily family, double lambda) {
  switch (family) {
    case OutcomeFamily::ols:
      return fit_ols(data);
    case OutcomeFamily::ridge:
      return fit_ridge(data, lambda);
    case OutcomeFamily::lasso:
      return fit_lasso(data, lambda);
    default:
      throw UsageError("unsupported outcome family for this command");
  }
}

const char* scheme_label(TuningScheme s) {
  switch (s) {
    case TuningScheme::cv_outcome_mse:
      return "cv_outcome";
    case TuningScheme::cv_imbalance:
      return "cv_imbalance";
    case TuningScheme::cv_riesz:
      return "cv_riesz";
    case TuningScheme::outcome_equals_delta:
      return "lambda";
  }
  return "?";
}

json tuning_json(const TuningResult& res, double applied) {
  return json{{"scheme", scheme_label(res.scheme)},
              {"chosen", res.chosen},
              {"applied", applied},
              {"selected_zero", res.selected_zero}};
}

}  // namespace

ProblemData load_problem(const DataArgs& args, std::uint64_t seed) {
  if (args.data_path.empty()) {
    if (args.synth_n < 2 || args.synth_d < 1)
      throw UsageError("synthetic instance needs n >= 2, d >= 1");
    Rng rng(seed, 0);
    return random_instance(rng, args.synth_n, args.synth_d);
  }
  CsvSchema schema{args.treatment, args.outcome, args.covariates};
  const RawDataset raw = ingest_csv(args.data_path, schema);
  return build_problem(raw, expansion_spec(args));
}

int cmd_ingest(const RunConfig& cfg, const DataArgs& args) {
  return run_command([&]() -> int {
    json j;
    j["version"] = kVersion;
    ProblemData problem;
    if (args.data_path.empty()) {
      problem = load_problem(args, cfg.seed);
      j["rows_rejected"] = 0;
      std::vector<std::string> names;
      for (Index k = 0; k < problem.d; ++k) names.push_back("x" + std::to_string(k));
      j["columns"] = names;
    } else {
      CsvSchema schema{args.treatment, args.outcome, args.covariates};
      const RawDataset raw = ingest_csv(args.data_path, schema);
      const FeatureExpansion exp = expansion_spec(args);
      problem = build_problem(raw, exp);
      j["rows_rejected"] = raw.rows_rejected;
      j["columns"] = expanded_column_names(raw.column_names, exp);
    }
    j["source_rows"] = problem.n;
    j["target_rows"] = problem.m;
    j["d"] = problem.d;
    j["center"] = vec(problem.center);
    j["phi_q_mean"] = vec(problem.phi_q_mean);
    write_json_atomic(artifact_path(cfg, "ingest.json"), j);

    std::map<std::string, std::string> kv;
    describe_data(args, kv);
    emit_manifest(cfg, "ingest", std::move(kv));
    std::cout << "source rows " << problem.n << ", target rows " << problem.m
              << ", features " << problem.d << '\n';
    return kExitOk;
  });
}

int cmd_fit(const RunConfig& cfg, const DataArgs& data_args, const FitArgs& args) {
  return run_command([&]() -> int {
    const ProblemData data = load_problem(data_args, cfg.seed);
    const OutcomeFamily family = parse_outcome_family(args.family);
    if (args.folds < 2) throw UsageError("--folds must be at least 2");

    json j;
    j["version"] = kVersion;
    j["n"] = data.n;
    j["d"] = data.d;

    double lambda = args.lambda;
    TuningResult lambda_res;
    bool tuned_lambda = false;
    json tuning = json::object();
    if (args.tune_lambda) {
      if (family == OutcomeFamily::ols)
        throw UsageError("--tune-lambda needs --family ridge or lasso");
      lambda_res = cv_outcome(data, family, {}, args.folds, cfg.seed);
      lambda = static_cast<double>(data.n) * lambda_res.chosen;
      tuned_lambda = true;
      tuning["lambda"] = tuning_json(lambda_res, lambda);
    }
    const OutcomeFit outcome = fit_outcome(data, family, lambda);
    j["outcome"] = json{{"family", args.family},
                        {"lambda", lambda},
                        {"beta", vec(outcome.beta)}};

    double delta = args.delta;
    if (args.tune_delta != "none") {
      const bool linf = args.weights == "linf";
      if (args.weights != "l2" && !linf)
        throw UsageError("--tune-delta applies to --weights l2 or linf");
      TuningResult delta_res;
      if (args.tune_delta == "cv_imbalance") {
        delta_res = cv_imbalance(data, parse_weight_family(args.weights), {}, args.folds,
                                 cfg.seed);
      } else if (args.tune_delta == "cv_riesz") {
        delta_res = cv_riesz(data, parse_weight_family(args.weights), {}, args.folds,
                             cfg.seed);
      } else if (args.tune_delta == "lambda") {
        if (!tuned_lambda) throw UsageError("--tune-delta lambda needs --tune-lambda");
        delta_res = delta_equals_lambda(lambda_res);
      } else {
        throw UsageError("unknown delta tuning scheme: " + args.tune_delta);
      }
      // Sup-norm radii are already in profile units; quadratic penalties are
      // applied to the raw Gram.
      delta = linf ? delta_res.chosen : static_cast<double>(data.n) * delta_res.chosen;
      tuning["delta"] = tuning_json(delta_res, delta);
    }
    j["tuning"] = tuning;

    double psi_hat = 0;
    if (args.weights == "none") {
      psi_hat = data.phi_q_mean.dot(outcome.beta);
      j["estimate"] = json{{"psi_hat", psi_hat}, {"plug_in", psi_hat},
                           {"weighted_residual", 0.0}};
      j["collapse_to_ols"] = false;
    } else {
      WeightFit wfit;
      bool linear = true;
      if (args.weights == "l2") {
        wfit = solve_l2(data, delta);
      } else if (args.weights == "exact") {
        wfit = solve_l2(data, 0);
        wfit.norm_family = NormFamily::exact;
      } else if (args.weights == "linf") {
        wfit = solve_linf_general(data, delta);
      } else if (args.weights == "simplex") {
        wfit = solve_simplex_l2(data, delta);
        linear = false;
      } else if (args.weights == "entropy") {
        const Vector w = entropy_weights(data, delta);
        wfit = evaluate_external_weights(w, data).fit;
        wfit.delta = delta;
        linear = false;
      } else {
        throw UsageError("unknown weight family: " + args.weights);
      }
      j["weights"] = json{{"family", args.weights},
                          {"delta", wfit.delta},
                          {"imbalance", wfit.imbalance},
                          {"phi_q_hat", vec(wfit.phi_q_hat)}};
      if (wfit.theta.size() > 0) j["weights"]["theta"] = vec(wfit.theta);

      if (linear) {
        const AugmentedFit aug = augment(outcome, wfit, data);
        psi_hat = aug.psi_hat;
        j["estimate"] = json{{"psi_hat", aug.psi_hat},
                             {"plug_in", aug.components.plug_in},
                             {"weighted_residual", aug.components.weighted_residual}};
        j["augmented"] = json{{"beta_aug", vec(aug.beta_aug)},
                              {"a_path", vec(aug.a_path)},
                              {"beta_aug_rotated", vec(aug.beta_aug_rotated)}};
        j["collapse_to_ols"] = args.weights == "exact" || wfit.delta == 0;
      } else {
        const double plug = data.phi_q_mean.dot(outcome.beta);
        const Vector resid = data.y_p - data.phi_p * outcome.beta;
        const double corr = wfit.weights.dot(resid) / static_cast<double>(data.n);
        psi_hat = plug + corr;
        j["estimate"] = json{{"psi_hat", psi_hat}, {"plug_in", plug},
                             {"weighted_residual", corr}};
        const auto rep = evaluate_external_weights(wfit.weights, data);
        j["decomposition"] = json{{"estimate", rep.decomposition.estimate},
                                  {"collapsed_term", rep.decomposition.collapsed_term},
                                  {"approx_error", rep.decomposition.approx_error},
                                  {"error_bound", rep.decomposition.error_bound}};
        j["collapse_to_ols"] = false;
      }
    }
    write_json_atomic(artifact_path(cfg, "fit.json"), j);

    std::map<std::string, std::string> kv;
    describe_data(data_args, kv);
    kv["family"] = args.family;
    kv["lambda"] = manifest_num(args.lambda);
    kv["tune_lambda"] = args.tune_lambda ? "true" : "false";
    kv["weights"] = args.weights;
    kv["delta"] = manifest_num(args.delta);
    kv["tune_delta"] = args.tune_delta;
    kv["folds"] = std::to_string(args.folds);
    emit_manifest(cfg, "fit", std::move(kv));
    std::cout << "psi_hat = " << format_sig(psi_hat, cfg.precision) << '\n';
    return kExitOk;
  });
}

int cmd_regpath(const RunConfig& cfg, const DataArgs& data_args, const RegpathArgs& args) {
  return run_command([&]() -> int {
    if (args.points < 2) throw UsageError("--points must be at least 2");
    const ProblemData data = load_problem(data_args, cfg.seed);
    const double gram_trace = data.phi_p.squaredNorm();

    double lambda = args.lambda;
    if (lambda < 0) lambda = gram_trace / static_cast<double>(data.d);
    const OutcomeFit base = lambda > 0 ? fit_ridge(data, lambda) : fit_ols(data);

    Vector grid(args.points);
    if (args.weights == "l2") {
      // Log grid plus an exact-zero head; the top is far beyond the largest
      // Gram eigenvalue so the path visibly flattens onto the base learner.
      const double hi = args.delta_max > 0 ? args.delta_max : 1e9 * gram_trace;
      const double lo = 1e-6 * gram_trace / static_cast<double>(data.d);
      grid(0) = 0;
      grid.tail(args.points - 1) = log_grid(lo, hi, args.points - 1);
    } else if (args.weights == "linf") {
      // Linear grid so the piecewise-linear segments between the kinks at
      // |phi_q_mean_j| are visible; the top endpoint collapses to the base.
      const double hi =
          args.delta_max > 0 ? args.delta_max : data.phi_q_mean.cwiseAbs().maxCoeff();
      grid = Vector::LinSpaced(args.points, 0.0, hi);
    } else {
      throw UsageError("regpath supports --weights l2 or linf");
    }

    CsvTable table;
    table.header = {"hyperparameter", "coordinate", "value", "series"};
    auto add_block = [&](double delta, const Vector& values, const char* series) {
      for (Index k = 0; k < values.size(); ++k)
        table.rows.push_back({format_sig(delta, cfg.precision), std::to_string(k),
                              format_sig(values(k), cfg.precision), series});
    };
    for (Index i = 0; i < grid.size(); ++i) {
      const double delta = grid(i);
      Vector beta_aug, profile;
      if (args.weights == "l2") {
        const WeightFit wfit = solve_l2(data, delta);
        beta_aug = augment(base, wfit, data).beta_aug;
        profile = wfit.phi_q_hat;
      } else {
        profile = solve_linf_diagonal(data, delta).phi_q_hat;
        beta_aug = linf_beta_aug(base, data, delta);
      }
      add_block(delta, base.beta, "outcome_coef");
      add_block(delta, profile, "reweighted_feature");
      add_block(delta, beta_aug, "augmented_coef");
    }
    write_csv_atomic(artifact_path(cfg, "regpath.csv"), table);

    std::map<std::string, std::string> kv;
    describe_data(data_args, kv);
    kv["weights"] = args.weights;
    kv["lambda"] = manifest_num(lambda);
    kv["points"] = std::to_string(args.points);
    kv["delta_max"] = manifest_num(args.delta_max);
    emit_manifest(cfg, "regpath", std::move(kv));
    std::cout << "wrote " << table.rows.size() << " path rows over " << grid.size()
              << " grid points\n";
    return kExitOk;
  });
}

int cmd_verify(const RunConfig& cfg, const VerifyArgs& args) {
  return run_command([&]() -> int {
    if (args.instances < 1) throw UsageError("--instances must be positive");
    VerifyOptions opts;
    opts.instances = args.instances;
    opts.seed = cfg.seed;
    opts.perturb = args.perturb;
    const auto reports = run_identity_suite(opts);

    json items = json::array();
    bool all_pass = true;
    for (const auto& r : reports) {
      std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  max violation "
                << format_sig(r.max_violation, 3) << "  tolerance "
                << format_sig(r.tolerance, 3) << '\n';
      items.push_back(json{{"name", r.name},
                           {"max_violation", r.max_violation},
                           {"tolerance", r.tolerance},
                           {"pass", r.pass}});
      all_pass = all_pass && r.pass;
    }
    write_json_atomic(artifact_path(cfg, "verify.json"),
                      json{{"version", kVersion}, {"identities", items},
                           {"all_pass", all_pass}});

    std::map<std::string, std::string> kv;
    kv["instances"] = std::to_string(args.instances);
    kv["perturb"] = args.perturb.empty() ? "-" : args.perturb;
    emit_manifest(cfg, "verify", std::move(kv));
    return all_pass ? kExitOk : kExitComputation;
  });
}

int cmd_oracle(const RunConfig& cfg, const DataArgs& data_args, const OracleArgs& args) {
  return run_command([&]() -> int {
    DgpTruth truth;
    std::map<std::string, std::string> kv;
    if (data_args.data_path.empty()) {
      SyntheticDgpSpec spec;
      spec.n = args.n;
      spec.d = args.d;
      spec.eta_min = args.eta_min;
      spec.eta_max = args.eta_max;
      spec.curvature_c = args.curvature;
      spec.noise_var = args.noise;
      if (args.target == "constant") {
        spec.target_kind = SyntheticDgpSpec::Target::constant;
      } else if (args.target != "random_unit") {
        throw UsageError("unknown target kind: " + args.target);
      }
      spec.seed = cfg.seed;
      truth = generate_synthetic(spec).truth;
      kv["truth"] = "synthetic";
      kv["n"] = std::to_string(args.n);
      kv["d"] = std::to_string(args.d);
      kv["eta_min"] = manifest_num(args.eta_min);
      kv["eta_max"] = manifest_num(args.eta_max);
      kv["curvature"] = manifest_num(args.curvature);
      kv["noise"] = manifest_num(args.noise);
      kv["target"] = args.target;
    } else {
      Perturbation kind = Perturbation::none;
      if (args.perturb_target == "even_up") {
        kind = Perturbation::even_up;
      } else if (args.perturb_target == "even_down") {
        kind = Perturbation::even_down;
      } else if (args.perturb_target != "none") {
        throw UsageError("unknown target perturbation: " + args.perturb_target);
      }
      const ProblemData problem = load_problem(data_args, cfg.seed);
      truth = generate_semisynthetic(problem, kind, args.perturb_frac, cfg.seed).truth;
      describe_data(data_args, kv);
      kv["truth"] = "semisynthetic";
      kv["perturb_target"] = args.perturb_target;
      kv["perturb_frac"] = manifest_num(args.perturb_frac);
    }

    const OracleResult res = oracle_hyperparams(truth);
    write_json_atomic(artifact_path(cfg, "oracle.json"),
                      json{{"version", kVersion},
                           {"lambda_star", res.lambda_star},
                           {"delta_star", res.delta_star},
                           {"delta_at_zero", res.delta_star == 0},
                           {"noise_var", truth.noise_var},
                           {"n", truth.n},
                           {"d", truth.beta0.size()}});

    CsvTable table;
    table.header = {"hyperparameter", "value", "total_mse"};
    for (Index i = 0; i < res.lambda_grid.size(); ++i)
      table.rows.push_back({"lambda", format_sig(res.lambda_grid(i), cfg.precision),
                            format_sig(res.lambda_total(i), cfg.precision)});
    for (Index i = 0; i < res.delta_grid.size(); ++i)
      table.rows.push_back({"delta", format_sig(res.delta_grid(i), cfg.precision),
                            format_sig(res.delta_total(i), cfg.precision)});
    write_csv_atomic(artifact_path(cfg, "oracle_curves.csv"), table);

    emit_manifest(cfg, "oracle", std::move(kv));
    std::cout << "lambda_star = " << format_sig(res.lambda_star, cfg.precision)
              << ", delta_star = " << format_sig(res.delta_star, cfg.precision) << '\n';
    return kExitOk;
  });
}

int cmd_tune(const RunConfig& cfg, const DataArgs& data_args, const TuneArgs& args) {
  return run_command([&]() -> int {
    if (args.folds < 2) throw UsageError("--folds must be at least 2");
    const ProblemData data = load_problem(data_args, cfg.seed);

    TuningResult res;
    bool profile_units = false;
    if (args.scheme == "cv_outcome") {
      res = cv_outcome(data, parse_outcome_family(args.family), {}, args.folds, cfg.seed);
    } else if (args.scheme == "cv_imbalance") {
      res = cv_imbalance(data, parse_weight_family(args.weights), {}, args.folds, cfg.seed);
      profile_units = args.weights == "linf";
    } else if (args.scheme == "cv_riesz") {
      res = cv_riesz(data, parse_weight_family(args.weights), {}, args.folds, cfg.seed);
      profile_units = args.weights == "linf";
    } else if (args.scheme == "lambda") {
      res = delta_equals_lambda(
          cv_outcome(data, parse_outcome_family(args.family), {}, args.folds, cfg.seed));
    } else {
      throw UsageError("unknown tuning scheme: " + args.scheme);
    }
    const double applied =
        profile_units ? res.chosen : static_cast<double>(data.n) * res.chosen;

    json j = tuning_json(res, applied);
    j["version"] = kVersion;
    j["folds"] = args.folds;
    j["grid"] = vec(res.grid);
    j["mean_criterion"] = vec(res.mean_criterion);
    write_json_atomic(artifact_path(cfg, "tune.json"), j);

    CsvTable table;
    table.header = {"candidate", "mean"};
    for (Index s = 0; s < res.per_fold.rows(); ++s)
      table.header.push_back("fold_" + std::to_string(s));
    for (Index i = 0; i < res.grid.size(); ++i) {
      std::vector<std::string> row{format_sig(res.grid(i), cfg.precision),
                                   format_sig(res.mean_criterion(i), cfg.precision)};
      for (Index s = 0; s < res.per_fold.rows(); ++s)
        row.push_back(format_sig(res.per_fold(s, i), cfg.precision));
      table.rows.push_back(std::move(row));
    }
    write_csv_atomic(artifact_path(cfg, "tune_curve.csv"), table);

    std::map<std::string, std::string> kv;
    describe_data(data_args, kv);
    kv["scheme"] = args.scheme;
    kv["family"] = args.family;
    kv["weights"] = args.weights;
    kv["folds"] = std::to_string(args.folds);
    emit_manifest(cfg, "tune", std::move(kv));
    std::cout << "chosen = " << format_sig(res.chosen, cfg.precision)
              << (res.selected_zero ? " (boundary zero)" : "") << '\n';
    return kExitOk;
  });
}

int cmd_simulate(const RunConfig& cfg, const SimulateArgs& args) {
  return run_command([&]() -> int {
    if (args.replicates < 1) throw UsageError("--replicates must be positive");
    if (args.folds < 2) throw UsageError("--folds must be at least 2");
    auto dgps = desk_scale_suite(cfg.seed);
    if (args.dgps < 1 || args.dgps > static_cast<int>(dgps.size()))
      throw UsageError("--dgps must be between 1 and " + std::to_string(dgps.size()));
    dgps.resize(args.dgps);

    const std::vector<Scheme> schemes{Scheme::cv_outcome, Scheme::cv_imbalance,
                                      Scheme::cv_riesz};
    StudyOptions opts;
    opts.replicates = args.replicates;
    opts.folds = args.folds;
    opts.seed = cfg.seed;
    const SimulationSummary s = run_study(dgps, schemes, opts);

    CsvTable table;
    table.header = {"dgp", "oracle_mse", "oracle_lambda", "oracle_delta"};
    for (const auto& name : s.scheme_names) {
      table.header.push_back(name + "_mse");
      table.header.push_back(name + "_rel");
      table.header.push_back(name + "_prop_zero");
    }
    for (std::size_t g = 0; g < s.dgp_names.size(); ++g) {
      const Index gi = static_cast<Index>(g);
      std::vector<std::string> row{s.dgp_names[g],
                                   format_sig(s.oracle_mse(gi), cfg.precision),
                                   format_sig(s.oracle_lambda(gi), cfg.precision),
                                   format_sig(s.oracle_delta(gi), cfg.precision)};
      for (Index k = 0; k < static_cast<Index>(s.scheme_names.size()); ++k) {
        row.push_back(format_sig(s.scheme_mse(gi, k), cfg.precision));
        row.push_back(format_sig(s.rel_mse(gi, k), cfg.precision));
        row.push_back(format_sig(s.prop_zero(gi, k), cfg.precision));
      }
      table.rows.push_back(std::move(row));
    }
    write_csv_atomic(artifact_path(cfg, "simulate_summary.csv"), table);

    CsvTable agg;
    agg.header = {"scheme", "median_rel", "best_rel", "worst_rel",
                  "best_count", "worst_count", "prop_zero"};
    for (std::size_t k = 0; k < s.scheme_names.size(); ++k) {
      const Index ki = static_cast<Index>(k);
      agg.rows.push_back({s.scheme_names[k],
                          format_sig(s.agg_median_rel(ki), cfg.precision),
                          format_sig(s.agg_best(ki), cfg.precision),
                          format_sig(s.agg_worst(ki), cfg.precision),
                          format_sig(s.agg_best_count(ki), cfg.precision),
                          format_sig(s.agg_worst_count(ki), cfg.precision),
                          format_sig(s.agg_prop_zero(ki), cfg.precision)});
    }
    write_csv_atomic(artifact_path(cfg, "simulate_aggregates.csv"), agg);

    std::map<std::string, std::string> kv;
    kv["replicates"] = std::to_string(args.replicates);
    kv["folds"] = std::to_string(args.folds);
    kv["dgps"] = std::to_string(args.dgps);
    emit_manifest(cfg, "simulate", std::move(kv));
    std::cout << "simulated " << s.dgp_names.size() << " DGPs x " << args.replicates
              << " replicates\n";
    return kExitOk;
  });
}

}  // namespace balwt
