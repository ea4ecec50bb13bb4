#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "scbf/error.hpp"
#include "scbf/spectral.hpp"
#include "support/oracles.hpp"

using namespace scbf;

namespace {

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.coefficients().size(); ++i)
    m = std::max(m, std::abs(a.coefficients()[i] - b.coefficients()[i]));
  return m;
}

double max_norm(const SpectralField& a) {
  double m = 0.0;
  for (auto c : a.coefficients()) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

TEST_CASE("fractional powers multiply by lambda^alpha") {
  std::mt19937_64 rng(1);
  const SpectralField u = oracle::random_field(6, rng);
  CHECK(max_abs_diff(apply_fractional_power(u, 0.0), u) == 0.0);

  SpectralField e(4);
  e.set_mode({1, 0}, 1.0);
  CHECK(apply_fractional_power(e, 1.0)(1, 0).real() == doctest::Approx(1.0).epsilon(1e-15));

  SpectralField d(4);
  d.set_mode({1, 1}, 1.0);
  CHECK(apply_fractional_power(d, 0.5)(1, 1).real() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(apply_fractional_power(d, 0.5).hermitian_defect() == 0.0);

  const SpectralField ab = apply_fractional_power(apply_fractional_power(u, 0.3), -0.7);
  CHECK(max_abs_diff(ab, apply_fractional_power(u, -0.4)) <= 1e-12 * max_norm(u));
}

TEST_CASE("sobolev norm") {
  CHECK(sobolev_norm(SpectralField(5), 0.7) == 0.0);
  SpectralField u(5);
  u.set_mode({2, 0}, std::polar(0.3, 0.4));
  // Both k and -k carry |c| = 0.3, so ||A^{1/2} u||^2 = 2 * 4 * 0.09.
  CHECK(sobolev_norm(u, 0.5) == doctest::Approx(std::sqrt(2.0) * 2.0 * 0.3).epsilon(1e-14));

  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    const SpectralField v = oracle::random_field(8, rng, 0.5);
    CHECK(std::pow(sobolev_norm(v, 0.5), 2) >= std::pow(sobolev_norm(v, 0.0), 2));
  }
}

TEST_CASE("interpolation inequality between fractional norms") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const SpectralField v = oracle::random_field(8, rng, unit(rng));
    const double g = -1.0 + 3.0 * unit(rng), b = -1.0 + 3.0 * unit(rng), th = unit(rng);
    const double m = th * g + (1.0 - th) * b;
    const double lhs = sobolev_norm(v, m);
    const double rhs = std::pow(sobolev_norm(v, g), th) * std::pow(sobolev_norm(v, b), 1.0 - th);
    CHECK(lhs <= rhs * (1.0 + 1e-9));
  }
}

TEST_CASE("single mode synthesis matches the closed form") {
  SpectralField u(4);
  u.set_mode({1, 0}, 1.0);
  const PhysicalField p = to_physical(u);
  for (int i = 0; i < p.grid_size; ++i)
    for (int j = 0; j < p.grid_size; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * p.grid_size + j;
      CHECK(std::abs(p.u1[idx]) <= 1e-12);
      CHECK(std::abs(p.u2[idx] + 2.0 * std::sin(p.coordinate(i))) <= 1e-12);
    }
}

TEST_CASE("synthesis and derivatives agree with direct summation") {
  std::mt19937_64 rng(4);
  const SpectralField u = oracle::random_field(3, rng);
  SpectralGrid& g = SpectralGrid::cached(3);
  const PhysicalField fast = g.to_physical(u);
  const PhysicalField slow = oracle::sample(u, g.grid_size());
  for (std::size_t i = 0; i < fast.size(); ++i) {
    CHECK(fast.u1[i] == doctest::Approx(slow.u1[i]).epsilon(1e-12).scale(1.0));
    CHECK(fast.u2[i] == doctest::Approx(slow.u2[i]).epsilon(1e-12).scale(1.0));
  }
  std::vector<double> d(g.points()), w(g.points());
  g.vorticity(u, w);
  const int m = g.grid_size();
  for (int comp = 0; comp < 2; ++comp)
    for (int der = 0; der < 2; ++der) {
      g.synthesize(u, comp, der, d);
      for (int i = 0; i < m; i += 3)
        for (int j = 0; j < m; j += 5) {
          const double x1 = fast.coordinate(i), x2 = fast.coordinate(j);
          CHECK(d[i * m + j] == doctest::Approx(oracle::evaluate_derivative(u, comp, der, x1, x2)).scale(1.0).epsilon(1e-11));
        }
    }
  for (int i = 0; i < m; i += 4) {
    const double x1 = fast.coordinate(i), x2 = fast.coordinate(m - 1 - i);
    const double expected =
        oracle::evaluate_derivative(u, 1, 0, x1, x2) - oracle::evaluate_derivative(u, 0, 1, x1, x2);
    CHECK(w[i * m + (m - 1 - i)] == doctest::Approx(expected).scale(1.0).epsilon(1e-11));
  }
}

TEST_CASE("round trip and Parseval") {
  CHECK(max_norm(to_spectral(to_physical(SpectralField(6)), 6)) == 0.0);
  std::mt19937_64 rng(5);
  for (int n : {4, 9, 32}) {
    const SpectralField u = oracle::random_field(n, rng, 0.7);
    const PhysicalField p = to_physical(u);
    CHECK(max_abs_diff(to_spectral(p, n), u) <= 1e-12 * max_norm(u));
    const double quad = oracle::grid_mean(p, [](double a, double b) { return a * a + b * b; });
    CHECK(quad == doctest::Approx(inner(u, u)).epsilon(1e-10));
  }
}

TEST_CASE("projection") {
  const int n = 4;
  SpectralGrid& g = SpectralGrid::cached(n);
  const int m = g.grid_size();
  PhysicalField shear(m), grad(m), sinx(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * m + j;
      const double x1 = shear.coordinate(i), x2 = shear.coordinate(j);
      shear.u1[idx] = std::sin(x2);
      grad.u1[idx] = -std::sin(x1);  // grad cos x1
      sinx.u1[idx] = std::sin(x1);
    }
  const SpectralField ps = project_divergence_free(shear, n);
  const PhysicalField back = to_physical(ps);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back.u1[i] == doctest::Approx(shear.u1[i]).scale(1.0).epsilon(1e-12));
    CHECK(std::abs(back.u2[i]) <= 1e-12);
  }
  CHECK(max_norm(project_divergence_free(grad, n)) <= 1e-14);
  const SpectralField px = project_divergence_free(sinx, n);
  CHECK(max_norm(px) <= 1e-14);

  // (sin x1, 0) is orthogonal, by quadrature, to every divergence-free test field.
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const PhysicalField phi = oracle::sample(oracle::random_field(n, rng), m);
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) s += sinx.u1[i] * phi.u1[i];
    CHECK(std::abs(s / static_cast<double>(phi.size())) <= 1e-12);
  }

  // Generic grid data: FFT projection equals direct quadrature, and P is idempotent
  // and self-adjoint.
  std::normal_distribution<double> gauss;
  PhysicalField a(m), b(m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a.u1[i] = gauss(rng);
    a.u2[i] = gauss(rng);
    b.u1[i] = gauss(rng);
    b.u2[i] = gauss(rng);
  }
  const SpectralField pa = project_divergence_free(a, n);
  CHECK(max_abs_diff(pa, oracle::project(a.u1, a.u2, m, n)) <= 1e-13);
  CHECK(max_abs_diff(project_divergence_free(to_physical(pa), n), pa) <= 1e-12 * max_norm(pa));
  const SpectralField pb = project_divergence_free(b, n);
  const PhysicalField qa = to_physical(pa), qb = to_physical(pb);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lhs += qa.u1[i] * b.u1[i] + qa.u2[i] * b.u2[i];
    rhs += a.u1[i] * qb.u1[i] + a.u2[i] * qb.u2[i];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  CHECK(pa.hermitian_defect() == 0.0);
}

TEST_CASE("reconstructed fields are discretely divergence free") {
  std::mt19937_64 rng(7);
  const SpectralField u = oracle::random_field(8, rng);
  SpectralGrid& g = SpectralGrid::cached(8);
  std::vector<double> a(g.points()), b(g.points());
  g.synthesize(u, 0, 0, a);
  g.synthesize(u, 1, 1, b);
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] + b[i]));
    scale = std::max(scale, std::abs(a[i]));
  }
  CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("grid sizes") {
  CHECK(default_grid_size(16) == 72);
  CHECK(default_grid_size(32) == 135);
  CHECK(dealiased_grid_size(32, 2) == 100);
  CHECK_THROWS_AS(SpectralGrid(8, 20), ConfigError);
  CHECK_NOTHROW(SpectralGrid(8, 25));
}

TEST_CASE("snapshot format") {
  std::mt19937_64 rng(8);
  const SpectralField u = oracle::random_field(3, rng);
  std::stringstream buf;
  write_snapshot(buf, u);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 16 + 48u * 24u);
  CHECK(bytes.substr(0, 4) == "SCBF");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  CHECK(static_cast<unsigned char>(bytes[8]) == 3);
  CHECK(static_cast<unsigned char>(bytes[12]) == 48);
  // First record is k = (-3, -3); -3 as little-endian int32.
  CHECK(static_cast<unsigned char>(bytes[16]) == 0xfd);
  CHECK(static_cast<unsigned char>(bytes[19]) == 0xff);
  const SpectralField v = read_snapshot(buf);
  CHECK(max_abs_diff(u, v) == 0.0);

  std::stringstream bad("XXXX");
  CHECK_THROWS_AS(read_snapshot(bad), ConfigError);
}

TEST_CASE("mismatched truncations are rejected") {
  CHECK_THROWS_AS(SpectralField(3) + SpectralField(4), ConfigError);
  CHECK_THROWS_AS(inner(SpectralField(3), SpectralField(4)), ConfigError);
}
