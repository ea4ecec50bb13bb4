#include "scbf/control.hpp"

#include <cmath>
#include <ostream>

#include "scbf/error.hpp"

namespace scbf {

BridgePath build_bridge_path(const SpectralField& x, const SpectralField& y, double horizon, double t0, double t1,
                             double dt) {
  if (!(0.0 < t0 && t0 < t1 && t1 < horizon))
    throw ConfigError("bridge times must satisfy 0 < t0 < t1 < T");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (x.truncation() != y.truncation()) throw ConfigError("mismatched truncations in bridge endpoints");
  const double steps_real = horizon / dt;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real)
    throw ConfigError("horizon must be an integer multiple of the time step");

  BridgePath path{dt, t0, t1, horizon, {}};
  path.states.reserve(steps + 1);
  const SpectralField a = heat_semigroup(x, t0);
  const SpectralField b = heat_semigroup(y, horizon - t1);
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    if (n == 0) {
      path.states.push_back(x);
    } else if (n == steps) {
      path.states.push_back(y);
    } else if (t <= t0) {
      path.states.push_back(heat_semigroup(x, t));
    } else if (t >= t1) {
      path.states.push_back(heat_semigroup(y, horizon - t));
    } else {
      const double s = (t - t0) / (t1 - t0);
      path.states.push_back((1.0 - s) * a + s * b);
    }
  }
  return path;
}

std::vector<SpectralField> solve_control_v(const BridgePath& ubar, const SimConfig& cfg) {
  cfg.validate();
  SpectralGrid& g = SpectralGrid::cached(cfg.truncation, cfg.grid());
  const auto drive = [&](const SpectralField& u) {
    SpectralField f = cfg.forcing;
    if (cfg.convection || cfg.damping)
      f -= nonlinear_drift(g, u, cfg.op.beta, cfg.op.r, cfg.convection, cfg.damping);
    return f;
  };
  std::vector<SpectralField> v;
  v.reserve(ubar.states.size());
  v.push_back(ubar.states.front());
  SpectralField left = drive(ubar.states.front());
  for (std::size_t n = 0; n + 1 < ubar.states.size(); ++n) {
    SpectralField right = drive(ubar.states[n + 1]);
    SpectralField rhs = v.back() + (0.5 * ubar.dt) * (left + right);
    SpectralField next = implicit_solve(rhs, cfg.op.mu * ubar.dt);
    if (!next.all_finite()) throw BlowUpError(n, "solve_control_v");
    v.push_back(std::move(next));
    left = std::move(right);
  }
  return v;
}

ReplayReport extract_and_replay(const BridgePath& ubar, const std::vector<SpectralField>& vbar, const SimConfig& cfg,
                                double alpha) {
  if (vbar.size() != ubar.states.size()) throw ConfigError("control path and bridge path are misaligned");
  SimConfig c = cfg;
  c.dt = ubar.dt;
  c.cutoff = {};
  ReplayReport rep;
  rep.dt = ubar.dt;
  const double q = 4.0 / (1.0 - 2.0 * alpha);
  const double beta_exp = 0.25 + 0.5 * alpha;
  SpectralField v = vbar.front();
  double lq = 0.0;
  for (std::size_t n = 0; n < vbar.size(); ++n) {
    const SpectralField z = ubar.states[n] - vbar[n];
    if (n == 0) rep.initial_z_norm = std::sqrt(inner(z, z));
    const SpectralField diff = v + z - ubar.states[n];
    rep.path_sup_error = std::max(rep.path_sup_error, sobolev_norm(diff, alpha));
    const double w = (n == 0 || n + 1 == vbar.size()) ? 0.5 : 1.0;
    lq += w * ubar.dt * std::pow(sobolev_norm(diff, beta_exp), q);
    if (n + 1 == vbar.size()) {
      rep.endpoint_error = sobolev_norm(v + z - ubar.states.back(), alpha);
      break;
    }
    v = step_v(v, z, c, n);
  }
  rep.path_lq_error = std::pow(lq, 1.0 / q);
  return rep;
}

double semigroup_budget_quadrature(const SpectralField& x, double alpha, double horizon, double dt) {
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  double s = 0.0;
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const double w = (n == 0 || n == steps) ? 0.5 : 1.0;
    s += w * std::pow(sobolev_norm(heat_semigroup(x, t), alpha + 0.5), 2);
  }
  return s * dt;
}

double semigroup_budget_exact(const SpectralField& x, double alpha, double horizon) {
  double s = 0.0;
  for (auto k : retained_modes(x.truncation())) {
    const double lam = k.lambda();
    s += std::pow(lam, 2.0 * alpha) * -std::expm1(-2.0 * lam * horizon) * std::norm(x[k]) / 2.0;
  }
  return s;
}

void write_replay_csv_header(std::ostream& out) {
  out << "dt,endpoint_error,path_sup_error,path_lq_error,initial_z_norm\n";
}

void write_replay_csv_row(std::ostream& out, const ReplayReport& r) {
  const auto old = out.precision(17);
  out << r.dt << ',' << r.endpoint_error << ',' << r.path_sup_error << ',' << r.path_lq_error << ','
      << r.initial_z_norm << '\n';
  out.precision(old);
}

}  // namespace scbf
