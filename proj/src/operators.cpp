#include "scbf/operators.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "scbf/error.hpp"

namespace scbf {

namespace {

using Samples = std::vector<double>;

Samples samples(const SpectralGrid& g) { return Samples(g.points(), 0.0); }

void require_grid(const SpectralGrid& g, const SpectralField& u) {
  if (u.truncation() != g.truncation())
    throw ConfigError("field truncation " + std::to_string(u.truncation()) + " does not match grid truncation " +
                      std::to_string(g.truncation()));
}

// |u|^{r-1}
inline double weight(double a, double b, int r) {
  switch (r) {
    case 1: return 1.0;
    case 2: return std::sqrt(a * a + b * b);
    default: return a * a + b * b;
  }
}

// C'(u) w at one grid point, accumulated into (o1, o2) with factor s.
inline void add_derivative(double u1, double u2, double w1, double w2, int r, double s, double& o1, double& o2) {
  if (r == 1) {
    o1 += s * w1;
    o2 += s * w2;
    return;
  }
  const double uw = u1 * w1 + u2 * w2;
  if (r == 2) {
    const double m = std::sqrt(u1 * u1 + u2 * u2);
    if (m == 0.0) return;
    o1 += s * (m * w1 + u1 * uw / m);
    o2 += s * (m * w2 + u2 * uw / m);
    return;
  }
  const double m2 = u1 * u1 + u2 * u2;
  o1 += s * (m2 * w1 + 2.0 * u1 * uw);
  o2 += s * (m2 * w2 + 2.0 * u2 * uw);
}

double mean(const Samples& s) {
  double acc = 0.0;
  for (double x : s) acc += x;
  return acc / static_cast<double>(s.size());
}

}  // namespace

void validate_exponent(int r) {
  if (r < 1 || r > 3) throw ConfigError("absorption exponent r must be 1, 2 or 3 (got " + std::to_string(r) + ")");
}

void OperatorParams::validate() const {
  if (!(mu > 0.0)) throw ConfigError("viscosity mu must be positive");
  if (!(beta > 0.0)) throw ConfigError("Forchheimer coefficient beta must be positive");
  validate_exponent(r);
}

void require_headroom(const SpectralGrid& grid, int r) {
  validate_exponent(r);
  if (r == 3 && grid.grid_size() < 4 * grid.truncation() + 1)
    throw ConfigError("insufficient dealiasing headroom: r = 3 needs grid size >= " +
                      std::to_string(4 * grid.truncation() + 1) + ", got " + std::to_string(grid.grid_size()));
}

SpectralField bilinear_B(const SpectralField& u, const SpectralField& v) {
  if (u.truncation() != v.truncation()) throw ConfigError("mismatched truncations in B(u, v)");
  return bilinear_B(SpectralGrid::cached(u.truncation()), u, v);
}

SpectralField bilinear_B(SpectralGrid& g, const SpectralField& u, const SpectralField& v) {
  require_grid(g, u);
  require_grid(g, v);
  Samples u1 = samples(g), u2 = samples(g), d = samples(g);
  Samples out1 = samples(g), out2 = samples(g);
  g.synthesize(u, 0, -1, u1);
  g.synthesize(u, 1, -1, u2);
  for (int comp = 0; comp < 2; ++comp) {
    Samples& out = comp == 0 ? out1 : out2;
    g.synthesize(v, comp, 0, d);
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = u1[i] * d[i];
    g.synthesize(v, comp, 1, d);
    for (std::size_t i = 0; i < d.size(); ++i) out[i] += u2[i] * d[i];
  }
  return g.project(out1, out2);
}

SpectralField convection_B(SpectralGrid& g, const SpectralField& u) {
  return nonlinear_drift(g, u, 0.0, 1, true, false);
}

SpectralField damping_C(const SpectralField& u, int r) { return damping_C(SpectralGrid::cached(u.truncation()), u, r); }

SpectralField damping_C(SpectralGrid& g, const SpectralField& u, int r) {
  require_headroom(g, r);
  require_grid(g, u);
  if (r == 1) return u;
  return nonlinear_drift(g, u, 1.0, r, false, true);
}

SpectralField gateaux_C_prime(const SpectralField& u, const SpectralField& v, int r) {
  if (u.truncation() != v.truncation()) throw ConfigError("mismatched truncations in C'(u)v");
  return gateaux_C_prime(SpectralGrid::cached(u.truncation()), u, v, r);
}

SpectralField gateaux_C_prime(SpectralGrid& g, const SpectralField& u, const SpectralField& v, int r) {
  require_headroom(g, r);
  require_grid(g, u);
  require_grid(g, v);
  if (r == 1) return v;
  return linearized_drift(g, u, v, 1.0, r, false, true);
}

SpectralField nonlinear_drift(SpectralGrid& g, const SpectralField& u, double beta, int r, bool convection,
                              bool damping, double* lp_out) {
  require_grid(g, u);
  if (damping || lp_out) require_headroom(g, r);
  if (!convection && !damping && !lp_out) return SpectralField(u.truncation());
  Samples u1 = samples(g), u2 = samples(g);
  g.synthesize(u, 0, -1, u1);
  g.synthesize(u, 1, -1, u2);
  Samples g1 = samples(g), g2 = samples(g);
  if (convection) {
    // (u.grad)u = grad(|u|^2 / 2) + omega (-u2, u1); the gradient is removed by P.
    Samples w = samples(g);
    g.vorticity(u, w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      g1[i] = -w[i] * u2[i];
      g2[i] = w[i] * u1[i];
    }
  }
  if (damping || lp_out) {
    const double b = damping ? beta : 0.0;
    double lp = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i) {
      const double wgt = weight(u1[i], u2[i], r);
      lp += wgt * (u1[i] * u1[i] + u2[i] * u2[i]);
      g1[i] += b * wgt * u1[i];
      g2[i] += b * wgt * u2[i];
    }
    if (lp_out) *lp_out = lp / static_cast<double>(u1.size());
  }
  if (!convection && !damping) return SpectralField(u.truncation());
  return g.project(g1, g2);
}

SpectralField linearized_drift(SpectralGrid& g, const SpectralField& u, const SpectralField& w, double beta, int r,
                               bool convection, bool damping) {
  require_grid(g, u);
  require_grid(g, w);
  if (damping) require_headroom(g, r);
  if (!convection && !damping) return SpectralField(u.truncation());
  Samples u1 = samples(g), u2 = samples(g), w1 = samples(g), w2 = samples(g);
  g.synthesize(u, 0, -1, u1);
  g.synthesize(u, 1, -1, u2);
  g.synthesize(w, 0, -1, w1);
  g.synthesize(w, 1, -1, w2);
  Samples g1 = samples(g), g2 = samples(g);
  if (convection) {
    // (u.grad)w + (w.grad)u = grad(u.w) + omega_w (-u2, u1) + omega_u (-w2, w1)
    Samples ou = samples(g), ow = samples(g);
    g.vorticity(u, ou);
    g.vorticity(w, ow);
    for (std::size_t i = 0; i < ou.size(); ++i) {
      g1[i] = -ow[i] * u2[i] - ou[i] * w2[i];
      g2[i] = ow[i] * u1[i] + ou[i] * w1[i];
    }
  }
  if (damping)
    for (std::size_t i = 0; i < u1.size(); ++i) add_derivative(u1[i], u2[i], w1[i], w2[i], r, beta, g1[i], g2[i]);
  return g.project(g1, g2);
}

double monotonicity_gap(const SpectralField& u, const SpectralField& v, int r) {
  validate_exponent(r);
  SpectralGrid& g = SpectralGrid::cached(u.truncation());
  const SpectralField w = u - v;
  const double lhs = inner(damping_C(g, u, r) - damping_C(g, v, r), w);
  const PhysicalField pu = g.to_physical(u), pv = g.to_physical(v);
  Samples rhs(g.points());
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double d1 = pu.u1[i] - pv.u1[i], d2 = pu.u2[i] - pv.u2[i];
    rhs[i] = 0.5 * (weight(pu.u1[i], pu.u2[i], r) + weight(pv.u1[i], pv.u2[i], r)) * (d1 * d1 + d2 * d2);
  }
  return lhs - mean(rhs);
}

double norm_comparison_margin(const SpectralField& u, const SpectralField& v, int r) {
  validate_exponent(r);
  SpectralGrid& g = SpectralGrid::cached(u.truncation());
  const PhysicalField pu = g.to_physical(u), pv = g.to_physical(v);
  const double c = std::pow(2.0, r - 2);
  Samples diff(g.points());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    const double d1 = pu.u1[i] - pv.u1[i], d2 = pu.u2[i] - pv.u2[i];
    const double w2 = d1 * d1 + d2 * d2;
    const double rhs = c * (weight(pu.u1[i], pu.u2[i], r) + weight(pv.u1[i], pv.u2[i], r)) * w2;
    diff[i] = rhs - std::pow(w2, 0.5 * (r + 1));
  }
  return mean(diff);
}

double local_lipschitz_margin(const SpectralField& u, const SpectralField& v, int r) {
  validate_exponent(r);
  SpectralGrid& g = SpectralGrid::cached(u.truncation());
  const PhysicalField pu = g.to_physical(u), pv = g.to_physical(v);
  const double p = r + 1.0;
  const double q = p / r;
  PhysicalField w(g.grid_size()), cw(g.grid_size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w.u1[i] = pu.u1[i] - pv.u1[i];
    w.u2[i] = pu.u2[i] - pv.u2[i];
    const double a = weight(pu.u1[i], pu.u2[i], r), b = weight(pv.u1[i], pv.u2[i], r);
    cw.u1[i] = a * pu.u1[i] - b * pv.u1[i];
    cw.u2[i] = a * pu.u2[i] - b * pv.u2[i];
  }
  const double bound = r * std::pow(lp_norm(pu, p) + lp_norm(pv, p), r - 1) * lp_norm(w, p);
  return bound - lp_norm(cw, q);
}

double local_monotonicity_residual(const SpectralField& u, const SpectralField& v, const OperatorParams& p,
                                   double nball) {
  p.validate();
  SpectralGrid& g = SpectralGrid::cached(u.truncation());
  const double v4 = lp_norm(g.to_physical(v), 4.0);
  if (v4 > nball * (1.0 + 1e-12))
    throw PreconditionError("||v||_L4 = " + std::to_string(v4) + " exceeds the ball radius " + std::to_string(nball));
  const SpectralField w = u - v;
  const double linear = p.mu * inner_powers(w, 0.5, w, 0.5);
  const double nonlinear = inner(nonlinear_drift(g, u, p.beta, p.r) - nonlinear_drift(g, v, p.beta, p.r), w);
  const double shift = 27.0 / (32.0 * p.mu * p.mu * p.mu) * std::pow(nball, 4) * inner(w, w);
  return linear + nonlinear + shift;
}

}  // namespace scbf
