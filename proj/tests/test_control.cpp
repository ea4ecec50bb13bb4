#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scbf/control.hpp"
#include "scbf/error.hpp"
#include "support/oracles.hpp"

using namespace scbf;

namespace {

double norm(const SpectralField& u) { return std::sqrt(inner(u, u)); }

}  // namespace

TEST_CASE("bridge path") {
  const int n = 6;
  const BridgePath zero = build_bridge_path(SpectralField(n), SpectralField(n), 2.0, 0.5, 1.5, 0.01);
  for (const auto& s : zero.states) CHECK(norm(s) == 0.0);

  std::mt19937_64 g(31);
  const SpectralField x = oracle::random_low_field(n, 2, g, 0.1), y = oracle::random_low_field(n, 2, g, 0.1);
  const BridgePath p = build_bridge_path(x, y, 2.0, 0.5, 1.5, 0.01);
  REQUIRE(p.states.size() == 201);
  CHECK(norm(p.states.front() - x) == 0.0);
  CHECK(norm(p.states.back() - y) == 0.0);
  CHECK(norm(p.states[20] - heat_semigroup(x, 0.2)) <= 1e-15);
  CHECK(norm(p.states[180] - heat_semigroup(y, 0.2)) <= 1e-15);
  // Continuity at t0 and t1: the interpolation starts and ends at the branch values.
  CHECK(norm(p.states[50] - heat_semigroup(x, 0.5)) <= 1e-15);
  CHECK(norm(p.states[150] - heat_semigroup(y, 0.5)) <= 1e-15);
  const SpectralField mid = 0.5 * heat_semigroup(x, 0.5) + 0.5 * heat_semigroup(y, 0.5);
  CHECK(norm(p.states[100] - mid) <= 1e-15);

  CHECK_THROWS_AS(build_bridge_path(x, y, 2.0, 1.5, 0.5, 0.01), ConfigError);
  CHECK_THROWS_AS(build_bridge_path(x, y, 2.0, 0.5, 2.5, 0.01), ConfigError);
}

TEST_CASE("control system oracles") {
  const int n = 6;
  SimConfig cfg = SimConfig::quiet(n);
  const BridgePath zero = build_bridge_path(SpectralField(n), SpectralField(n), 1.0, 0.2, 0.8, 0.01);
  for (const auto& v : solve_control_v(zero, cfg)) CHECK(norm(v) == 0.0);

  // u_bar = 0 except at t = 0, so v_bar is the heat flow with viscosity mu from x.
  std::mt19937_64 g(32);
  const SpectralField x = oracle::random_low_field(n, 2, g, 0.1);
  BridgePath heat = zero;
  heat.states.front() = x;
  cfg.op.mu = 0.7;
  cfg.convection = cfg.damping = false;
  const auto v = solve_control_v(heat, cfg);
  const SpectralField exact = heat_semigroup(x, 1.0, 0.7);
  CHECK(norm(v.back() - exact) <= 2e-2 * norm(exact));

  SimConfig forced = SimConfig::quiet(n);
  forced.forcing.set_mode({1, 2}, Complex(0.3, 0.1));
  forced.convection = forced.damping = false;
  const BridgePath long_zero = build_bridge_path(SpectralField(n), SpectralField(n), 20.0, 1.0, 2.0, 0.05);
  const auto w = solve_control_v(long_zero, forced);
  CHECK(std::abs(w.back()(1, 2) - Complex(0.3, 0.1) / 5.0) <= 1e-10);
}

TEST_CASE("replay reproduces the target with first-order error") {
  const int n = 8;
  SimConfig cfg = SimConfig::quiet(n);
  cfg.noise = build_diagonal_spectrum(n, 0.4, 3);
  cfg.forcing.set_mode({1, 1}, 0.05);
  std::mt19937_64 g(33);
  const SpectralField x = oracle::random_low_field(n, 2, g, 0.02), y = oracle::random_low_field(n, 2, g, 0.02);
  std::vector<double> errs;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    const BridgePath ub = build_bridge_path(x, y, 2.0, 0.5, 1.5, dt);
    const auto vb = solve_control_v(ub, cfg);
    const ReplayReport rep = extract_and_replay(ub, vb, cfg, 0.4);
    CHECK(rep.initial_z_norm == 0.0);
    CHECK(rep.path_sup_error >= rep.endpoint_error);
    CHECK(rep.path_lq_error > 0.0);
    errs.push_back(rep.endpoint_error);
  }
  CHECK(errs[0] / errs[1] >= 1.8);
  CHECK(errs[1] / errs[2] >= 1.8);
  CHECK_THROWS_AS(extract_and_replay(build_bridge_path(x, y, 2.0, 0.5, 1.5, 0.01), {}, cfg, 0.4), ConfigError);
}

TEST_CASE("semigroup budget") {
  std::mt19937_64 g(34);
  const SpectralField x = oracle::random_low_field(12, 3, g, 0.2);
  const double exact = semigroup_budget_exact(x, 0.4, 2.0);
  CHECK(semigroup_budget_quadrature(x, 0.4, 2.0, 1e-3) == doctest::Approx(exact).epsilon(1e-3));
  CHECK(exact <= 0.5 * std::pow(sobolev_norm(x, 0.4), 2));
}

TEST_CASE("replay CSV") {
  std::ostringstream out;
  write_replay_csv_header(out);
  write_replay_csv_row(out, ReplayReport{0.5, 1.0, 2.0, 3.0, 0.0});
  CHECK(out.str() == "dt,endpoint_error,path_sup_error,path_lq_error,initial_z_norm\n0.5,1,2,3,0\n");
}
