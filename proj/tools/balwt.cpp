// balwt: augmented balancing-weight estimation at the command line.
//
// Subcommands cover the full pipeline: ingest and summarize a CSV, fit an
// augmented estimator, trace coefficient paths, self-check the library's
// identities, compute oracle hyperparameters, cross-validate penalties, and
// run the Monte Carlo study. Every subcommand accepts --config with flat
// "key = value" lines (# comments); command-line flags take precedence.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "balwt/cli.hpp"
#include "balwt/types.hpp"

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return std::isspace(c) == 0; };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// CLI11 only consults config files registered on the root app, so each
// subcommand resolves its own --config here: flat "key = value" lines fill in
// whatever the command line left unset. Runs first in every command callback.
void apply_config(CLI::App& cmd) {
  const CLI::Option* config = cmd.get_option("--config");
  if (config->count() == 0) return;
  const std::string path = config->as<std::string>();
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ConfigError(path + " line " + std::to_string(line_no) +
                             ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw CLI::ConfigError(path + ": unknown config key '" + key + "'");
    if (opt->count() > 0) continue;  // explicit flags win
    std::istringstream parts(value);
    std::string part;
    while (parts >> part) opt->add_result(part);
    opt->run_callback();
  }
}

void add_run_options(CLI::App& cmd, balwt::RunConfig& cfg) {
  cmd.add_option("--out", cfg.out_dir, "Output directory for artifacts");
  cmd.add_option("--seed", cfg.seed, "Seed for folds, synthetic data, and instances");
  cmd.add_option("--precision", cfg.precision, "Significant digits in CSV artifacts")
      ->check(CLI::Range(1, 17));
  cmd.add_option("--config", "Flat key = value config file; flags take precedence")
      ->type_name("TEXT");
}

void add_data_options(CLI::App& cmd, balwt::DataArgs& data) {
  cmd.add_option("--data", data.data_path, "Input CSV (omit for a synthetic instance)");
  cmd.add_option("--treatment", data.treatment, "Treatment indicator column");
  cmd.add_option("--outcome", data.outcome, "Outcome column");
  cmd.add_option("--covariates", data.covariates,
                 "Covariate columns (default: all remaining)");
  cmd.add_option("--expand", data.expand, "Feature expansion: none|squares|interactions");
  cmd.add_option("--continuous", data.continuous, "Continuous column indices to expand");
  cmd.add_option("--discrete", data.discrete, "Discrete column indices to expand");
  cmd.add_option("--synth-n", data.synth_n, "Synthetic instance rows");
  cmd.add_option("--synth-d", data.synth_d, "Synthetic instance features");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Augmented balancing-weight estimators"};
  app.set_version_flag("--version", balwt::kVersion);
  app.require_subcommand(1);
  int rc = balwt::kExitOk;

  auto* ingest = app.add_subcommand("ingest", "Load a CSV and summarize the problem");
  auto ingest_cfg = std::make_shared<balwt::RunConfig>();
  auto ingest_data = std::make_shared<balwt::DataArgs>();
  add_run_options(*ingest, *ingest_cfg);
  add_data_options(*ingest, *ingest_data);
  ingest->callback([&rc, ingest, ingest_cfg, ingest_data] {
    apply_config(*ingest);
    rc = balwt::cmd_ingest(*ingest_cfg, *ingest_data);
  });

  auto* fit = app.add_subcommand("fit", "Fit an augmented estimator");
  auto fit_cfg = std::make_shared<balwt::RunConfig>();
  auto fit_data = std::make_shared<balwt::DataArgs>();
  auto fit_args = std::make_shared<balwt::FitArgs>();
  add_run_options(*fit, *fit_cfg);
  add_data_options(*fit, *fit_data);
  fit->add_option("--family", fit_args->family, "Outcome family: ols|ridge|lasso");
  fit->add_option("--lambda", fit_args->lambda, "Outcome penalty (added to Phi'Phi)");
  fit->add_flag("--tune-lambda", fit_args->tune_lambda,
                "Cross-validate the outcome penalty");
  fit->add_option("--weights", fit_args->weights,
                  "Weight family: l2|exact|linf|simplex|entropy|none");
  fit->add_option("--delta", fit_args->delta,
                  "Weight penalty (sup-norm radius for linf)");
  fit->add_option("--tune-delta", fit_args->tune_delta,
                  "Weight penalty tuning: none|cv_imbalance|cv_riesz|lambda");
  fit->add_option("--folds", fit_args->folds, "Cross-validation folds");
  fit->callback([&rc, fit, fit_cfg, fit_data, fit_args] {
    apply_config(*fit);
    rc = balwt::cmd_fit(*fit_cfg, *fit_data, *fit_args);
  });

  auto* regpath = app.add_subcommand("regpath", "Coefficient paths along the weight penalty");
  auto reg_cfg = std::make_shared<balwt::RunConfig>();
  auto reg_data = std::make_shared<balwt::DataArgs>();
  auto reg_args = std::make_shared<balwt::RegpathArgs>();
  add_run_options(*regpath, *reg_cfg);
  add_data_options(*regpath, *reg_data);
  regpath->add_option("--weights", reg_args->weights, "Weight family: l2|linf");
  regpath->add_option("--lambda", reg_args->lambda,
                      "Base ridge penalty (<0 auto, 0 plain OLS)");
  regpath->add_option("--points", reg_args->points, "Grid points");
  regpath->add_option("--delta-max", reg_args->delta_max, "Top of the penalty grid");
  regpath->callback([&rc, regpath, reg_cfg, reg_data, reg_args] {
    apply_config(*regpath);
    rc = balwt::cmd_regpath(*reg_cfg, *reg_data, *reg_args);
  });

  auto* verify = app.add_subcommand("verify", "Self-check the estimator identities");
  auto ver_cfg = std::make_shared<balwt::RunConfig>();
  auto ver_args = std::make_shared<balwt::VerifyArgs>();
  add_run_options(*verify, *ver_cfg);
  verify->add_option("--instances", ver_args->instances, "Random instances per identity");
  verify->add_option("--perturb", ver_args->perturb,
                     "Fault-inject one identity (negative control)");
  verify->callback([&rc, verify, ver_cfg, ver_args] {
    apply_config(*verify);
    rc = balwt::cmd_verify(*ver_cfg, *ver_args);
  });

  auto* oracle = app.add_subcommand("oracle", "Design-conditional oracle hyperparameters");
  auto ora_cfg = std::make_shared<balwt::RunConfig>();
  auto ora_data = std::make_shared<balwt::DataArgs>();
  auto ora_args = std::make_shared<balwt::OracleArgs>();
  add_run_options(*oracle, *ora_cfg);
  add_data_options(*oracle, *ora_data);
  oracle->add_option("--n", ora_args->n, "Synthetic sample size");
  oracle->add_option("--d", ora_args->d, "Synthetic feature count");
  oracle->add_option("--eta-min", ora_args->eta_min, "Smallest population eigenvalue");
  oracle->add_option("--eta-max", ora_args->eta_max, "Largest population eigenvalue");
  oracle->add_option("--curvature", ora_args->curvature, "Eigenvalue grid curvature");
  oracle->add_option("--noise", ora_args->noise, "Noise variance");
  oracle->add_option("--target", ora_args->target, "Target profile: random_unit|constant");
  oracle->add_option("--perturb-target", ora_args->perturb_target,
                     "Semisynthetic profile shift: none|even_up|even_down");
  oracle->add_option("--perturb-frac", ora_args->perturb_frac,
                     "Semisynthetic profile shift fraction");
  oracle->callback([&rc, oracle, ora_cfg, ora_data, ora_args] {
    apply_config(*oracle);
    rc = balwt::cmd_oracle(*ora_cfg, *ora_data, *ora_args);
  });

  auto* tune = app.add_subcommand("tune", "Cross-validated penalty selection");
  auto tune_cfg = std::make_shared<balwt::RunConfig>();
  auto tune_data = std::make_shared<balwt::DataArgs>();
  auto tune_args = std::make_shared<balwt::TuneArgs>();
  add_run_options(*tune, *tune_cfg);
  add_data_options(*tune, *tune_data);
  tune->add_option("--scheme", tune_args->scheme,
                   "cv_outcome|cv_imbalance|cv_riesz|lambda");
  tune->add_option("--family", tune_args->family, "Outcome family: ridge|lasso");
  tune->add_option("--weights", tune_args->weights, "Weight family: l2|linf");
  tune->add_option("--folds", tune_args->folds, "Cross-validation folds");
  tune->callback([&rc, tune, tune_cfg, tune_data, tune_args] {
    apply_config(*tune);
    rc = balwt::cmd_tune(*tune_cfg, *tune_data, *tune_args);
  });

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo tuning-scheme comparison");
  auto sim_cfg = std::make_shared<balwt::RunConfig>();
  auto sim_args = std::make_shared<balwt::SimulateArgs>();
  add_run_options(*simulate, *sim_cfg);
  simulate->add_option("--replicates", sim_args->replicates, "Noise replicates per DGP");
  simulate->add_option("--folds", sim_args->folds, "Cross-validation folds");
  simulate->add_option("--dgps", sim_args->dgps, "Leading desk-suite DGPs to run");
  simulate->callback([&rc, simulate, sim_cfg, sim_args] {
    apply_config(*simulate);
    rc = balwt::cmd_simulate(*sim_cfg, *sim_args);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return balwt::kExitUsage;
  }
  return rc;
}
