#include <doctest.h>

#include <cmath>

#include "scbf/error.hpp"
#include "scbf/operators.hpp"
#include "support/oracles.hpp"

using namespace scbf;

namespace {

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    m = std::max(m, std::abs(a.coefficients()[i] - b.coefficients()[i]));
  return m;
}

double norm(const SpectralField& u) { return std::sqrt(inner(u, u)); }

// (u.grad)v sampled by direct summation and projected by direct quadrature.
SpectralField brute_force_B(const SpectralField& u, const SpectralField& v, int m) {
  const PhysicalField pu = oracle::sample(u, m);
  std::vector<double> g1(pu.size()), g2(pu.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double x1 = pu.coordinate(i), x2 = pu.coordinate(j);
      const std::size_t idx = static_cast<std::size_t>(i) * m + j;
      for (int c = 0; c < 2; ++c) {
        const double val = pu.u1[idx] * oracle::evaluate_derivative(v, c, 0, x1, x2) +
                           pu.u2[idx] * oracle::evaluate_derivative(v, c, 1, x1, x2);
        (c == 0 ? g1 : g2)[idx] = val;
      }
    }
  return oracle::project(g1, g2, m, u.truncation());
}

}  // namespace

TEST_CASE("B agrees with brute-force quadrature") {
  std::mt19937_64 rng(11);
  const SpectralField u = oracle::random_field(3, rng), v = oracle::random_field(3, rng);
  const int m = default_grid_size(3);
  const SpectralField ref = brute_force_B(u, v, m);
  CHECK(max_abs_diff(bilinear_B(u, v), ref) <= 1e-12 * (1.0 + norm(ref)));
  CHECK(norm(bilinear_B(SpectralField(3), v)) == 0.0);
  SpectralGrid& g = SpectralGrid::cached(3);
  CHECK(max_abs_diff(convection_B(g, u), bilinear_B(u, u)) <= 1e-12 * norm(bilinear_B(u, u)));
}

TEST_CASE("Taylor-Green vortex is a steady state of B") {
  SpectralField u(4);
  // stream function cos x1 cos x2, coefficient |k| psi_hat = sqrt(2)/4 on the four diagonal modes
  for (auto k : {WaveVector{1, 1}, WaveVector{1, -1}}) u.set_mode(k, std::sqrt(2.0) / 4.0);
  const PhysicalField p = to_physical(u);
  for (std::size_t i = 0; i < p.size(); i += 7) {
    const double x1 = p.coordinate(static_cast<int>(i) / p.grid_size);
    const double x2 = p.coordinate(static_cast<int>(i) % p.grid_size);
    CHECK(p.u1[i] == doctest::Approx(std::cos(x1) * std::sin(x2)).scale(1.0).epsilon(1e-13));
    CHECK(p.u2[i] == doctest::Approx(-std::sin(x1) * std::cos(x2)).scale(1.0).epsilon(1e-13));
  }
  CHECK(norm(bilinear_B(u, u)) <= 1e-14);
  CHECK(norm(brute_force_B(u, u, default_grid_size(4))) <= 1e-14);
}

TEST_CASE("energy orthogonality and antisymmetry") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const SpectralField u = oracle::random_field(10, rng), v = oracle::random_field(10, rng),
                        w = oracle::random_field(10, rng);
    const double scale = norm(u) * norm(v) * norm(w) * 10.0;
    CHECK(std::abs(inner(bilinear_B(u, v), v)) <= 1e-10 * scale);
    CHECK(inner(bilinear_B(u, v), w) == doctest::Approx(-inner(bilinear_B(u, w), v)).scale(1e-10 * scale).epsilon(1e-10));
  }
}

TEST_CASE("damping operator") {
  std::mt19937_64 rng(13);
  const SpectralField u = oracle::random_field(6, rng);
  CHECK(max_abs_diff(damping_C(u, 1), u) == 0.0);
  for (int r = 1; r <= 3; ++r) {
    const PhysicalField p = to_physical(u);
    const double quad = oracle::grid_mean(p, [r](double a, double b) { return std::pow(a * a + b * b, 0.5 * (r + 1)); });
    CHECK(inner(damping_C(u, r), u) == doctest::Approx(quad).epsilon(1e-9));
  }

  // sin^3 y = (3 sin y - sin 3y) / 4; a sin(k y) along x1 has coefficient a / 2 on (0, k).
  const double a = 0.7;
  SpectralField s(4);
  s.set_mode({0, 1}, a / 2.0);
  const SpectralField c = damping_C(s, 3);
  CHECK(c(0, 1).real() == doctest::Approx(3.0 * a * a * a / 8.0).epsilon(1e-13));
  CHECK(c(0, 3).real() == doctest::Approx(-a * a * a / 8.0).epsilon(1e-13));
  CHECK(c(0, -3).real() == doctest::Approx(-a * a * a / 8.0).epsilon(1e-13));
  const PhysicalField ps = oracle::sample(s, 18);
  std::vector<double> g1(ps.size()), g2(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) g1[i] = std::pow(ps.u1[i], 3);
  CHECK(max_abs_diff(oracle::project(g1, g2, 18, 4), c) <= 1e-14);

  SpectralGrid tight(8, 25);
  CHECK_THROWS_AS(damping_C(tight, SpectralField(8), 3), ConfigError);
  CHECK_NOTHROW(damping_C(tight, SpectralField(8), 2));
  CHECK_THROWS_AS(damping_C(u, 4), ConfigError);
}

TEST_CASE("Gateaux derivative") {
  std::mt19937_64 rng(14);
  const SpectralField u = oracle::random_field(6, rng), v = oracle::random_field(6, rng);
  CHECK(max_abs_diff(gateaux_C_prime(u, v, 1), v) == 0.0);
  for (int r = 1; r <= 3; ++r)
    for (int t = 0; t < 10; ++t) {
      const SpectralField a = oracle::random_field(6, rng), b = oracle::random_field(6, rng);
      CHECK(inner(gateaux_C_prime(a, b, r), b) >= -1e-10);
    }

  std::vector<double> hs{1e-3, 1e-4, 1e-5}, errs;
  for (double h : hs) {
    const SpectralField fd = (damping_C(u + h * v, 3) - damping_C(u, 3)) * (1.0 / h);
    errs.push_back(norm(fd - gateaux_C_prime(u, v, 3)));
  }
  CHECK(oracle::loglog_slope(hs, errs) == doctest::Approx(1.0).epsilon(0.2));

  // r = 2 is differentiable away from the zero set of u, which grid points miss generically.
  const double h = 1e-6;
  const SpectralField fd2 = (damping_C(u + h * v, 2) - damping_C(u, 2)) * (1.0 / h);
  CHECK(norm(fd2 - gateaux_C_prime(u, v, 2)) <= 1e-3 * norm(gateaux_C_prime(u, v, 2)));
}

TEST_CASE("linearized drift is the derivative of the full drift") {
  std::mt19937_64 rng(15);
  const SpectralField u = oracle::random_field(6, rng), w = oracle::random_field(6, rng);
  SpectralGrid& g = SpectralGrid::cached(6);
  const SpectralField lin = linearized_drift(g, u, w, 0.8, 3);
  CHECK(max_abs_diff(lin, bilinear_B(u, w) + bilinear_B(w, u) + 0.8 * gateaux_C_prime(u, w, 3)) <= 1e-12 * norm(lin));
  const double h = 1e-6;
  const SpectralField fd =
      (nonlinear_drift(g, u + h * w, 0.8, 3) - nonlinear_drift(g, u - h * w, 0.8, 3)) * (0.5 / h);
  CHECK(norm(fd - lin) <= 1e-7 * norm(lin));
  CHECK(max_abs_diff(nonlinear_drift(g, u, 0.8, 3), bilinear_B(u, u) + 0.8 * damping_C(u, 3)) <= 1e-12 * norm(lin));
}

TEST_CASE("monotonicity inequalities") {
  std::mt19937_64 rng(16);
  const SpectralField u0 = oracle::random_field(6, rng);
  CHECK(monotonicity_gap(u0, u0, 3) == 0.0);
  for (int t = 0; t < 20; ++t) {
    const SpectralField u = oracle::random_field(6, rng), v = oracle::random_field(6, rng);
    CHECK(std::abs(monotonicity_gap(u, v, 1)) <= 1e-12 * inner(u - v, u - v));
    for (int r = 2; r <= 3; ++r) {
      const double scale = std::pow(norm(u), r + 1) + std::pow(norm(v), r + 1);
      CHECK(monotonicity_gap(u, v, r) >= -1e-9 * scale);
      CHECK(norm_comparison_margin(u, v, r) >= -1e-9 * scale);
      CHECK(local_lipschitz_margin(u, v, r) >= -1e-9 * scale);
    }
  }
}

TEST_CASE("local monotonicity residual") {
  std::mt19937_64 rng(17);
  const OperatorParams p{1.0, 1.0, 3};
  const SpectralField u = oracle::random_field(6, rng);
  CHECK(local_monotonicity_residual(u, u, p, 10.0) == 0.0);

  const double nb = 0.7;
  const double expected = p.mu * std::pow(sobolev_norm(u, 0.5), 2) + p.beta * inner(damping_C(u, 3), u) +
                          27.0 / 32.0 * std::pow(nb, 4) * inner(u, u);
  CHECK(local_monotonicity_residual(u, SpectralField(6), p, nb) == doctest::Approx(expected).epsilon(1e-12));

  SpectralField big = oracle::random_field(6, rng);
  big *= 10.0 / lp_norm(to_physical(big), 4.0);
  CHECK_THROWS_AS(local_monotonicity_residual(u, big, p, 1.0), PreconditionError);

  for (int t = 0; t < 20; ++t) {
    const SpectralField a = oracle::random_field(6, rng);
    SpectralField b = oracle::random_field(6, rng);
    b *= 0.99 / lp_norm(to_physical(b), 4.0);
    CHECK(local_monotonicity_residual(a, b, p, 1.0) >= -1e-8);
  }
}
