#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <sstream>

#include "scbf/config.hpp"
#include "scbf/error.hpp"
#include "scbf/harness.hpp"
#include "support/oracles.hpp"

using namespace scbf;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

SimConfig small(int n = 6, double horizon = 0.5) {
  return sim_config_from(parse("galerkin.truncation = " + std::to_string(n) +
                               "\nforcing.norm = 0.1\ndynamics.dt = 1e-2\ndynamics.horizon = " +
                               std::to_string(horizon) + "\n"));
}

std::string csv_of(const EnsembleResult& r) {
  std::ostringstream s;
  write_paths_csv(s, r.paths);
  r.occupation.write_averages_csv(s);
  r.occupation.write_histogram_csv(s);
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse("# comment\noperator.mu = 0.5  # trailing\n\ndynamics.dt=2e-3\nflag = yes\nname = abc\n");
  CHECK(c.get_double("operator.mu", 1.0) == 0.5);
  CHECK(c.get_double("dynamics.dt", 1.0) == 2e-3);
  CHECK(c.get_bool("flag", false));
  CHECK(c.get_int("missing", 7) == 7);
  CHECK(c.unused() == std::vector<std::string>{"name"});
  CHECK_THROWS_AS(c.get_int("operator.mu", 0), ConfigError);
  CHECK_THROWS_AS(c.get_double("name", 0.0), ConfigError);
  CHECK_THROWS_AS(parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("just words\n"), ConfigError);
  Config o = c;
  o.apply_override("operator.mu=2");
  CHECK(o.get_double("operator.mu", 0.0) == 2.0);
  CHECK_THROWS_AS(o.apply_override("nothing"), ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("simulation config from keys") {
  const SimConfig d = sim_config_from(parse(""));
  CHECK(d.truncation == 32);
  CHECK(d.op.r == 3);
  CHECK(d.noise.alpha == 0.4);
  CHECK(inner(d.forcing, d.forcing) == 0.0);
  const SimConfig s = small();
  CHECK(inner(s.forcing, s.forcing) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(std::abs(s.forcing(1, 1)) > 0.0);
  const SimConfig m = sim_config_from(parse("galerkin.truncation = 4\ninitial.type = mode\ninitial.norm = 0.3\n"));
  CHECK(inner(m.initial, m.initial) == doctest::Approx(0.09));
  const SimConfig rnd = sim_config_from(parse("galerkin.truncation = 4\ninitial.type = random\n"), 5);
  CHECK(inner(rnd.initial, rnd.initial) > 0.0);
  CHECK(rnd.initial.hermitian_defect() == 0.0);
  CHECK_THROWS_AS(sim_config_from(parse("noise.alpha = 0.3\n")), ConfigError);  // outside the window for r = 3
  CHECK_THROWS_AS(sim_config_from(parse("galerkin.grid_size = 50\ngalerkin.truncation = 16\n")), ConfigError);
  CHECK_THROWS_AS(sim_config_from(parse("dynamics.horizon = 1\ndynamics.dt = 0.3\n")), ConfigError);
  CHECK_THROWS_AS(sim_config_from(parse("noise.type = colored\n")), ConfigError);
  const SimConfig pw = sim_config_from(parse("galerkin.truncation = 4\nnoise.type = power\nnoise.exponent = 0.7\n"));
  CHECK(pw.noise.sigma(2, 1) == doctest::Approx(std::pow(5.0, -0.7)));
  // Decays too slowly for the window; accepted only when relaxed.
  CHECK_THROWS_AS(sim_config_from(parse("galerkin.truncation = 4\nnoise.type = power\nnoise.exponent = 0.3\n")),
                  ConfigError);
  CHECK_NOTHROW(sim_config_from(
      parse("galerkin.truncation = 4\nnoise.type = power\nnoise.exponent = 0.3\nnoise.relaxed = true\n")));
}

TEST_CASE("M_{lambda0,R} gate") {
  const SimConfig cfg = small();
  EnsembleSpec spec;
  spec.n_traj = 20;
  spec.lambda0 = 0.25;
  spec.R = 2.0;
  spec.law.point = single_mode(6, {1, 0}, std::sqrt(std::log(2.0) / 0.25) * 0.999);
  CHECK(check_initial_law(spec, cfg, 1) <= 2.0);
  spec.law.point = single_mode(6, {1, 0}, std::sqrt(std::log(2.0) / 0.25) * 1.001);
  CHECK_THROWS_AS(check_initial_law(spec, cfg, 1), ConfigError);

  spec.law.kind = InitialLaw::Kind::gaussian;
  spec.law.std_dev = 5.0;  // most draws need clamping
  const double m = check_initial_law(spec, cfg, 1);
  CHECK(m <= 2.0 * (1 + 1e-12));
  for (std::uint64_t i = 0; i < spec.n_traj; ++i) {
    const SpectralField x = sample_initial(spec, 6, 1, i);
    CHECK(std::exp(0.25 * inner(x, x)) <= 2.0 * (1 + 1e-12));
  }
  spec.lambda0 = lambda0_threshold(cfg.noise, cfg.op.mu);
  CHECK_THROWS_AS(check_initial_law(spec, cfg, 1), ConfigError);
}

TEST_CASE("pooled exponential means") {
  const std::vector<double> a = {0.1, -0.3, 0.7, 0.2};
  double direct = 0.0;
  for (double x : a) direct += std::exp(x);
  direct /= 4;
  const ExpEstimate e = pooled_exp_mean(a);
  CHECK(e.estimate == doctest::Approx(direct).epsilon(1e-14));
  std::vector<double> big = {1000.0, 1000.0};
  CHECK(pooled_exp_mean(big).log_estimate == doctest::Approx(1000.0));
  std::vector<double> heavy(200, 0.0);
  heavy[3] = 10.0;
  CHECK(pooled_exp_mean(heavy).heavy_tail);
  CHECK(!pooled_exp_mean(a).heavy_tail);
}

TEST_CASE("exponential estimate: degenerate cases and a small ensemble") {
  SimConfig cfg = small();
  EnsembleSpec spec;
  spec.n_traj = 10;
  spec.horizon = 0.0;
  spec.lambda0 = 0.25;
  ExponentialReport r = verify_exponential_estimate(spec, cfg, 3);
  for (const auto& c : r.checks) {
    CHECK(c.mc.estimate == 1.0);
    CHECK(c.bound == 1.0);
    CHECK(c.pass);
  }

  spec.horizon = 0.5;
  spec.lambda0 = 1e-9;
  r = verify_exponential_estimate(spec, cfg, 3);
  for (const auto& c : r.checks) {
    CHECK(c.mc.estimate == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c.bound == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c.pass);
  }

  cfg = small(8, 1.0);
  spec.n_traj = 100;
  spec.horizon = 1.0;
  spec.lambda0 = 0.5 * lambda0_threshold(cfg.noise, cfg.op.mu);
  r = verify_exponential_estimate(spec, cfg, 3);
  CHECK(r.pass);
  REQUIRE(r.checks.size() == 4);
  CHECK(r.checks[0].name == "joint");
  // The joint functional dominates each marginal pathwise.
  for (int i = 1; i < 4; ++i) CHECK(r.checks[0].mc.estimate >= r.checks[i].mc.estimate);
  std::ostringstream js;
  write_exponential_json(js, r);
  CHECK(js.str().find("\"heavy_tail\"") != std::string::npos);
}

TEST_CASE("ensembles are reproducible and order independent") {
  const SimConfig cfg = small();
  EnsembleSpec spec;
  spec.n_traj = 1;
  spec.horizon = 0.5;
  spec.lambda0 = 0.1;
  const EnsembleResult one = run_ensemble(spec, cfg, 9);
  const SpectralField direct = simulate(cfg, default_increments(cfg, {9, 0}));
  CHECK(one.paths[0].final_energy == inner(direct, direct));

  spec.n_traj = 6;
  spec.law.kind = InitialLaw::Kind::gaussian;
  spec.hitting_radius = 0.5;
  omp_set_num_threads(1);
  const EnsembleResult serial = run_ensemble(spec, cfg, 9);
  omp_set_num_threads(3);
  const EnsembleResult threaded = run_ensemble(spec, cfg, 9);
  omp_set_num_threads(1);
  CHECK(csv_of(serial) == csv_of(threaded));

  // Executing trajectories in reverse and merging in index order changes nothing.
  std::vector<OccupationAccumulator> acc(spec.n_traj, OccupationAccumulator(default_observables(), {}, 0.5));
  std::vector<PathStats> paths(spec.n_traj);
  for (std::size_t i = spec.n_traj; i-- > 0;) paths[i] = run_trajectory(spec, cfg, 9, i, &acc[i]);
  EnsembleResult manual{OccupationAccumulator(default_observables(), {}, -1.0), paths};
  for (const auto& a : acc) manual.occupation.merge(a);
  CHECK(csv_of(manual) == csv_of(serial));
  CHECK(serial.occupation.hitting().size() == spec.n_traj);
}

TEST_CASE("variance of the ensemble mean energy halves with twice the paths") {
  const SimConfig cfg = small(4, 0.5);
  EnsembleSpec spec;
  spec.horizon = 0.5;
  spec.lambda0 = 0.1;
  std::vector<double> var;
  for (std::size_t n : {500, 1000}) {
    spec.n_traj = n;
    std::vector<double> e;
    for (const auto& p : run_ensemble(spec, cfg, 21).paths) e.push_back(p.final_energy);
    const auto m = oracle::moments(e);
    var.push_back(m.se * m.se);
  }
  CHECK(var[0] / var[1] == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("blow-up names the trajectory") {
  SimConfig cfg = small();
  EnsembleSpec spec;
  spec.n_traj = 3;
  spec.lambda0 = 1e-6;
  spec.law.point = single_mode(6, {2, 1}, 100.0);
  try {
    run_ensemble(spec, cfg, 1);
    FAIL("expected a blow-up");
  } catch (const BlowUpError& e) {
    CHECK(std::string(e.what()).find("trajectory 0") != std::string::npos);
  }
}

TEST_CASE("ensemble spec from keys") {
  const SimConfig cfg = small();
  const EnsembleSpec s = ensemble_spec_from(
      parse("ensemble.n_traj = 12\nensemble.law = gaussian\nensemble.hitting_radius = auto\n"), cfg);
  CHECK(s.n_traj == 12);
  CHECK(s.lambda0 == doctest::Approx(0.5 * lambda0_threshold(cfg.noise, cfg.op.mu)));
  CHECK(s.hitting_radius == doctest::Approx(default_hitting_radius(1.0, s.lambda0, 1.0, cfg.noise, cfg.forcing)));
  CHECK_THROWS_AS(ensemble_spec_from(parse("ensemble.observables = energy,vorticity\n"), cfg), ConfigError);
}

TEST_CASE("identity suite") {
  const auto checks = run_identity_suite({8, 10, 4});
  CHECK(checks.size() == 7);
  for (const auto& c : checks) {
    INFO(c.name << " worst " << c.worst);
    CHECK(c.pass);
  }
}
