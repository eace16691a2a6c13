#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "balwt/numerics.hpp"
#include "balwt/outcome.hpp"
#include "balwt/random.hpp"
#include "balwt/simulate.hpp"
#include "balwt/tuning.hpp"

using namespace balwt;

namespace {

SyntheticDgpSpec small_spec(std::uint64_t seed, double noise = 0.5) {
  SyntheticDgpSpec spec;
  spec.n = 60;
  spec.d = 6;
  spec.eta_min = 0.01;
  spec.eta_max = 2.0;
  spec.curvature_c = 4.0;
  spec.noise_var = noise;
  spec.seed = seed;
  return spec;
}

// The documented eigenvalue profile: linspace between the c-th roots, then
// raised back to the c-th power.
Vector expected_grid(const SyntheticDgpSpec& spec) {
  const double lo = std::pow(spec.eta_min, 1.0 / spec.curvature_c);
  const double hi = std::pow(spec.eta_max, 1.0 / spec.curvature_c);
  Vector g(spec.d);
  for (Index i = 0; i < spec.d; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(spec.d - 1);
    g(i) = std::pow(lo + t * (hi - lo), spec.curvature_c);
  }
  return g;
}

ProblemData calibration_sample(std::uint64_t seed, Index n, Index d) {
  Rng rng(seed, 0);
  ProblemData data;
  data.phi_p = rng.normal_matrix(n, d);
  data.phi_p.rowwise() -= data.phi_p.colwise().mean();
  data.y_p = data.phi_p * rng.normal_vector(d) + 0.7 * rng.normal_vector(n);
  data.phi_q_mean = rng.normal_vector(d);
  data.center = Vector::Zero(d);
  data.n = n;
  data.d = d;
  return data;
}

}  // namespace

TEST_CASE("synthetic covariance carries the curved eigenvalue profile") {
  const SyntheticDgpSpec spec = small_spec(100);
  const DgpDraw draw = generate_synthetic(spec);

  // The rotation is orthogonal, so the population spectrum equals the grid.
  const Eigensystem es = eigh_symmetric(draw.truth.pop_cov);
  Vector grid = expected_grid(spec);
  std::sort(grid.data(), grid.data() + grid.size(), std::greater<double>());
  for (Index j = 0; j < spec.d; ++j)
    CHECK(es.eigenvalues(j) == doctest::Approx(grid(j)).epsilon(1e-9));
  CHECK(es.eigenvalues.minCoeff() >= spec.eta_min - 1e-12);
  CHECK(es.eigenvalues.maxCoeff() <= spec.eta_max + 1e-12);
  CHECK((draw.truth.pop_cov - draw.truth.pop_cov.transpose()).cwiseAbs().maxCoeff() < 1e-14);

  // strong curvature makes the spacing nearly geometric: the median sits by
  // the geometric mean of the range, far below the arithmetic mean
  SyntheticDgpSpec steep = small_spec(101);
  steep.d = 50;
  steep.curvature_c = 5000;
  const DgpDraw sharp = generate_synthetic(steep);
  const Eigensystem es2 = eigh_symmetric(sharp.truth.pop_cov);
  Vector steep_grid = expected_grid(steep);
  std::sort(steep_grid.data(), steep_grid.data() + steep_grid.size(), std::greater<double>());
  for (Index j = 0; j < steep.d; ++j)
    CHECK(es2.eigenvalues(j) == doctest::Approx(steep_grid(j)).epsilon(1e-8));
  CHECK(es2.eigenvalues(25) < 0.5 * es2.eigenvalues.mean());
  CHECK(es2.eigenvalues(0) == doctest::Approx(steep.eta_max).epsilon(1e-9));
}

TEST_CASE("synthetic coefficients are nonnegative with unit length") {
  const DgpDraw draw = generate_synthetic(small_spec(102));
  CHECK(draw.truth.beta0.minCoeff() >= 0.0);
  CHECK(draw.truth.beta0.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synthetic draw wires the problem and the truth together") {
  const SyntheticDgpSpec spec = small_spec(103);
  const DgpDraw draw = generate_synthetic(spec);

  CHECK(draw.name == "synthetic");
  CHECK(draw.data.n == spec.n);
  CHECK(draw.data.d == spec.d);
  CHECK(draw.data.y_p.cwiseAbs().maxCoeff() == 0.0);  // noise comes later
  CHECK(draw.data.phi_p.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);

  const Matrix want_cov =
      draw.data.phi_p.transpose() * draw.data.phi_p / static_cast<double>(spec.n);
  CHECK((draw.truth.sample_cov - want_cov).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(draw.truth.noise_var == spec.noise_var);
  CHECK(draw.truth.n == spec.n);
  CHECK((draw.truth.target_mean - draw.data.phi_q_mean).cwiseAbs().maxCoeff() == 0.0);

  // target kinds live in the raw (uncentered) coordinates
  CHECK((draw.data.phi_q_mean + draw.data.center).norm() == doctest::Approx(1.0).epsilon(1e-10));
  SyntheticDgpSpec flat = spec;
  flat.target_kind = SyntheticDgpSpec::Target::constant;
  flat.target_value = 2.5;
  const DgpDraw con = generate_synthetic(flat);
  const Vector raw_target = con.data.phi_q_mean + con.data.center;
  for (Index j = 0; j < spec.d; ++j)
    CHECK(raw_target(j) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("synthetic draws are reproducible and seed-sensitive") {
  const DgpDraw a = generate_synthetic(small_spec(104));
  const DgpDraw b = generate_synthetic(small_spec(104));
  CHECK((a.data.phi_p - b.data.phi_p).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.truth.beta0 - b.truth.beta0).cwiseAbs().maxCoeff() == 0.0);

  const DgpDraw c = generate_synthetic(small_spec(105));
  CHECK((a.data.phi_p - c.data.phi_p).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synthetic spec validation") {
  SyntheticDgpSpec spec = small_spec(106);
  spec.eta_min = 2.0;
  spec.eta_max = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
  spec = small_spec(106);
  spec.eta_min = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
  spec = small_spec(106);
  spec.curvature_c = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
  spec = small_spec(106);
  spec.noise_var = -1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
  spec = small_spec(106);
  spec.n = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), InvalidInput);
}

TEST_CASE("semisynthetic calibration matches a recomputable recipe") {
  const ProblemData original = calibration_sample(200, 80, 5);
  const std::uint64_t seed = 31;
  const DgpDraw draw = generate_semisynthetic(original, Perturbation::none, 0.1, seed);

  CHECK(draw.name == "semisynthetic");
  CHECK(draw.data.n == original.n);
  CHECK(draw.data.d == original.d);

  // coefficients: ridge at the cross-validated penalty on the original sample
  const TuningResult tuned = cv_outcome(original, OutcomeFamily::ridge, {}, 5, seed);
  const Vector beta0 = fit_ridge(original, 80.0 * tuned.chosen).beta;
  CHECK((draw.truth.beta0 - beta0).cwiseAbs().maxCoeff() < 1e-14);

  const double noise_var = (original.y_p - original.phi_p * beta0).squaredNorm() / 80.0;
  CHECK(draw.truth.noise_var == doctest::Approx(noise_var).epsilon(1e-12));

  const Matrix pop = original.phi_p.transpose() * original.phi_p / 80.0;
  CHECK((draw.truth.pop_cov - pop).cwiseAbs().maxCoeff() < 1e-14);

  // unperturbed target round-trips through the centering
  CHECK((draw.data.phi_q_mean + draw.data.center - original.phi_q_mean)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // the design is redrawn, not copied
  CHECK((draw.data.phi_p - original.phi_p).cwiseAbs().maxCoeff() > 0.1);

  const DgpDraw again = generate_semisynthetic(original, Perturbation::none, 0.1, seed);
  CHECK((draw.data.phi_p - again.data.phi_p).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(generate_semisynthetic(original, Perturbation::none, -0.5, seed),
                  InvalidInput);
}

TEST_CASE("target perturbations shift every second coordinate") {
  const ProblemData original = calibration_sample(201, 70, 6);
  const double frac = 0.2;
  const std::uint64_t seed = 8;
  const DgpDraw none = generate_semisynthetic(original, Perturbation::none, frac, seed);
  const DgpDraw up = generate_semisynthetic(original, Perturbation::even_up, frac, seed);
  const DgpDraw down = generate_semisynthetic(original, Perturbation::even_down, frac, seed);

  const double shift = frac * original.phi_q_mean.norm();
  for (Index j = 0; j < 6; ++j) {
    const double moved_up = up.data.phi_q_mean(j) - none.data.phi_q_mean(j);
    const double moved_down = down.data.phi_q_mean(j) - none.data.phi_q_mean(j);
    if (j % 2 == 1) {
      CHECK(moved_up == doctest::Approx(shift).epsilon(1e-10));
      CHECK(moved_down == doctest::Approx(-shift).epsilon(1e-10));
    } else {
      CHECK(moved_up == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(moved_down == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("study summary shapes, aggregates, and determinism across threads") {
  std::vector<DgpDraw> dgps = {generate_synthetic(small_spec(300, 0.3)),
                               generate_synthetic(small_spec(301, 1.5))};
  dgps[0].name = "low";
  dgps[1].name = "high";
  const std::vector<Scheme> schemes = {Scheme::cv_outcome, Scheme::cv_imbalance,
                                       Scheme::cv_riesz};
  StudyOptions opts;
  opts.replicates = 6;
  opts.folds = 3;
  opts.seed = 99;

  setenv("BALWT_THREADS", "3", 1);
  const SimulationSummary s = run_study(dgps, schemes, opts);

  CHECK(s.dgp_names == std::vector<std::string>{"low", "high"});
  CHECK(s.scheme_names ==
        std::vector<std::string>{"cv_outcome", "cv_imbalance", "cv_riesz"});
  CHECK(s.scheme_mse.rows() == 2);
  CHECK(s.scheme_mse.cols() == 3);
  CHECK(s.oracle_mse.minCoeff() > 0.0);
  CHECK(s.oracle_lambda.minCoeff() >= 0.0);
  CHECK(s.oracle_delta.minCoeff() >= 0.0);

  for (Index g = 0; g < 2; ++g)
    for (Index k = 0; k < 3; ++k) {
      CHECK(s.scheme_mse(g, k) >= 0.0);
      CHECK(s.rel_mse(g, k) ==
            doctest::Approx(s.scheme_mse(g, k) / s.oracle_mse(g)).epsilon(1e-12));
      CHECK(s.prop_zero(g, k) >= 0.0);
      CHECK(s.prop_zero(g, k) <= 1.0);
    }

  for (Index k = 0; k < 3; ++k) {
    CHECK(s.agg_best(k) == doctest::Approx(s.rel_mse.col(k).minCoeff()).epsilon(1e-12));
    CHECK(s.agg_worst(k) == doctest::Approx(s.rel_mse.col(k).maxCoeff()).epsilon(1e-12));
    const double med = (s.rel_mse(0, k) + s.rel_mse(1, k)) / 2;
    CHECK(s.agg_median_rel(k) == doctest::Approx(med).epsilon(1e-12));
    CHECK(s.agg_prop_zero(k) ==
          doctest::Approx(s.prop_zero.col(k).mean()).epsilon(1e-12));
  }
  CHECK(s.agg_best_count.sum() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.agg_worst_count.sum() == doctest::Approx(2.0).epsilon(1e-12));

  // replicate streams are counter-based: one worker must reproduce three
  setenv("BALWT_THREADS", "1", 1);
  const SimulationSummary serial = run_study(dgps, schemes, opts);
  unsetenv("BALWT_THREADS");
  CHECK((s.scheme_mse - serial.scheme_mse).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.prop_zero - serial.prop_zero).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s.oracle_mse - serial.oracle_mse).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(run_study(dgps, schemes, {0, 3, 1}), InvalidInput);
  CHECK_THROWS_AS(run_study({}, schemes, opts), InvalidInput);
  CHECK_THROWS_AS(run_study(dgps, {}, opts), InvalidInput);
}

TEST_CASE("desk-scale suite pairs three spectra with two noise levels") {
  const std::vector<DgpDraw> suite = desk_scale_suite(5);
  REQUIRE(suite.size() == 6);
  CHECK(suite[0].name == "setting1_lownoise");
  CHECK(suite[1].name == "setting1_highnoise");
  CHECK(suite[2].name == "setting2_lownoise");
  CHECK(suite[5].name == "setting3_highnoise");

  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(suite[i].truth.noise_var == (i % 2 == 0 ? 0.1 : 2.0));
    CHECK(suite[i].data.n == 2000);
    CHECK(suite[i].data.d == 50);
  }
  // spectra top out at the setting's eta_max
  const Eigensystem top1 = eigh_symmetric(suite[0].truth.pop_cov);
  const Eigensystem top3 = eigh_symmetric(suite[4].truth.pop_cov);
  CHECK(top1.eigenvalues(0) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(top3.eigenvalues(0) == doctest::Approx(5.0).epsilon(1e-8));

  // distinct seeds per cell, deterministic overall
  CHECK((suite[0].data.phi_p - suite[1].data.phi_p).cwiseAbs().maxCoeff() > 0.0);
  const std::vector<DgpDraw> again = desk_scale_suite(5);
  CHECK((suite[3].data.phi_p - again[3].data.phi_p).cwiseAbs().maxCoeff() == 0.0);
}
