#include "scbf/dynamics.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "scbf/error.hpp"

namespace scbf {

double CutoffFunction::value(double x) const {
  const double s = std::abs(x) - radius;
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double CutoffFunction::derivative(double x) const {
  const double s = std::abs(x) - radius;
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double d = 30.0 * s * s * (1.0 - s) * (1.0 - s);
  return x > 0.0 ? -d : d;
}

SimConfig SimConfig::quiet(int n, const OperatorParams& op) {
  SimConfig cfg;
  cfg.op = op;
  cfg.truncation = n;
  cfg.noise = NoiseSpectrum::zero(n);
  cfg.forcing = SpectralField(n);
  cfg.initial = SpectralField(n);
  return cfg;
}

void SimConfig::validate() const {
  op.validate();
  if (truncation < 1) throw ConfigError("truncation must be at least 1");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
  if (noise.truncation != truncation) throw ConfigError("noise spectrum truncation differs from the config");
  if (forcing.truncation() != truncation) throw ConfigError("forcing truncation differs from the config");
  if (initial.truncation() != truncation) throw ConfigError("initial condition truncation differs from the config");
  if (!(cutoff.radius > 0.0)) throw ConfigError("cut-off radius must be positive");
  if (grid() < 3 * truncation + 1) throw ConfigError("grid size not compatible with truncation");
  if (op.r == 3 && grid() < 4 * truncation + 1)
    throw ConfigError("insufficient dealiasing headroom for r = 3");
}

std::size_t SimConfig::steps() const {
  const double n = horizon / dt;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n))
    throw ConfigError("horizon must be an integer multiple of the time step");
  return static_cast<std::size_t>(rounded);
}

namespace {

void check_finite(const SpectralField& u, std::uint64_t step, const char* where) {
  if (!u.all_finite()) throw BlowUpError(step, where);
}

SpectralGrid& grid_of(const SimConfig& cfg) { return SpectralGrid::cached(cfg.truncation, cfg.grid()); }

// Theta_R(||A^a w||^2), or 1 without a cut-off.
double theta(const SimConfig& cfg, const SpectralField& w) {
  if (!cfg.cutoff.active()) return 1.0;
  const double a = cfg.cut_exponent();
  return cfg.cutoff.value(inner_powers(w, a, w, a));
}

// base + dt (f - th * drift(w)) + extra, then the implicit solve.
SpectralField advance(const SpectralField& base, const SpectralField& w, const SimConfig& cfg,
                      const SpectralField* extra, double* lp_out) {
  const double th = theta(cfg, w);
  SpectralField rhs = base;
  const bool nonlinear = (cfg.convection || cfg.damping) && th != 0.0;
  const double dt = cfg.dt;
  auto out = rhs.coefficients();
  auto f = cfg.forcing.coefficients();
  if (nonlinear || lp_out) {
    const SpectralField drift =
        nonlinear_drift(grid_of(cfg), w, cfg.op.beta, cfg.op.r, cfg.convection && nonlinear,
                        cfg.damping && nonlinear, lp_out);
    auto d = drift.coefficients();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += dt * (f[i] - th * d[i]);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += dt * f[i];
  }
  if (extra) rhs += *extra;
  return implicit_solve(rhs, cfg.op.mu * dt);
}

}  // namespace

SpectralField implicit_solve(const SpectralField& rhs, double mu_dt) {
  SpectralField out(rhs.truncation());
  const int n = rhs.truncation();
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      out(k1, k2) = rhs(k1, k2) / (1.0 + mu_dt * WaveVector{k1, k2}.lambda());
    }
  return out;
}

SpectralField step_ou(const SpectralField& z, const SimConfig& cfg, const SpectralField& normals) {
  const int n = cfg.truncation;
  SpectralField out(n);
  const double mu = cfg.op.mu, dt = cfg.dt;
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double rate = mu * WaveVector{k1, k2}.lambda();
      const double sd = cfg.noise.sigma(k1, k2) * std::sqrt(-std::expm1(-2.0 * rate * dt) / (2.0 * rate));
      out(k1, k2) = std::exp(-rate * dt) * z(k1, k2) + sd * normals(k1, k2);
    }
  return out;
}

SpectralField step_ou(const SpectralField& z, const SimConfig& cfg, const RngStream& rng, std::uint64_t step) {
  return step_ou(z, cfg, standard_normals(cfg.truncation, rng, step));
}

SpectralField step_scbf(const SpectralField& u, const SimConfig& cfg, const SpectralField& increment,
                        std::uint64_t step, double* lp_out) {
  SpectralField next = advance(u, u, cfg, &increment, lp_out);
  check_finite(next, step, "step_scbf");
  return next;
}

SpectralField step_scbf(const SpectralField& u, const SimConfig& cfg, const RngStream& rng, std::uint64_t step) {
  return step_scbf(u, cfg, sample_increment(cfg.noise, cfg.dt, rng, step), step);
}

SpectralField step_v(const SpectralField& v, const SpectralField& z, const SimConfig& cfg, std::uint64_t step) {
  SpectralField next = advance(v, v + z, cfg, nullptr, nullptr);
  check_finite(next, step, "step_v");
  return next;
}

SpectralField step_first_variation(const SpectralField& U, const SpectralField& u, const SimConfig& cfg,
                                   std::uint64_t step) {
  SpectralGrid& g = grid_of(cfg);
  double th = 1.0, dth = 0.0;
  if (cfg.cutoff.active()) {
    const double a = cfg.cut_exponent();
    const double x = inner_powers(u, a, u, a);
    th = cfg.cutoff.value(x);
    dth = cfg.cutoff.derivative(x);
  }
  SpectralField rhs = U;
  const double dt = cfg.dt;
  if (th != 0.0 && (cfg.convection || cfg.damping)) {
    const SpectralField lin = linearized_drift(g, u, U, cfg.op.beta, cfg.op.r, cfg.convection, cfg.damping);
    rhs -= (dt * th) * lin;
  }
  if (dth != 0.0 && (cfg.convection || cfg.damping)) {
    const double a = cfg.cut_exponent();
    const double dx = 2.0 * inner_powers(u, a, U, a);
    rhs -= (dt * dth * dx) * nonlinear_drift(g, u, cfg.op.beta, cfg.op.r, cfg.convection, cfg.damping);
  }
  SpectralField next = implicit_solve(rhs, cfg.op.mu * dt);
  check_finite(next, step, "step_first_variation");
  return next;
}

Observables observe(const SpectralField& u, double t, int r, int grid_size) {
  Observables o;
  o.t = t;
  o.energy = inner(u, u);
  o.enstrophy = inner_powers(u, 0.5, u, 0.5);
  const int m = grid_size > 0 ? grid_size : default_grid_size(u.truncation());
  o.lp = lp_norm_pow(SpectralGrid::cached(u.truncation(), m).to_physical(u), r + 1.0);
  return o;
}

void write_observables_header(std::ostream& out) { out << "t,energy,enstrophy,lp_norm\n"; }

void write_observables_row(std::ostream& out, const Observables& o) {
  const auto old = out.precision(17);
  out << o.t << ',' << o.energy << ',' << o.enstrophy << ',' << o.lp << '\n';
  out.precision(old);
}

IncrementSource default_increments(const SimConfig& cfg, const RngStream& rng) {
  return [noise = cfg.noise, dt = cfg.dt, rng](std::uint64_t n) { return sample_increment(noise, dt, rng, n); };
}

SpectralField simulate(const SimConfig& cfg, const IncrementSource& increments, const StepObserver& observer) {
  cfg.validate();
  const std::size_t steps = cfg.steps();
  SpectralField u = cfg.initial;
  double lp = 0.0;
  for (std::size_t n = 0; n < steps; ++n) {
    const SpectralField inc = increments(n);
    SpectralField next = step_scbf(u, cfg, inc, n, observer ? &lp : nullptr);
    if (observer) observer(n, static_cast<double>(n) * cfg.dt, u, &inc, lp);
    u = std::move(next);
  }
  if (observer) {
    const double t = static_cast<double>(steps) * cfg.dt;
    observer(steps, t, u, nullptr, observe(u, t, cfg.op.r, cfg.grid()).lp);
  }
  return u;
}

Trajectory record_trajectory(const SimConfig& cfg, const IncrementSource& increments) {
  Trajectory path;
  path.dt = cfg.dt;
  simulate(cfg, increments, [&](std::uint64_t, double, const SpectralField& u, const SpectralField* inc, double) {
    path.states.push_back(u);
    if (inc) path.increments.push_back(*inc);
  });
  return path;
}

EnergyLedger::EnergyLedger(const SimConfig& cfg) : cfg_(&cfg), trace_(trace_Q(cfg.noise)) {
  acc_.initial_energy = inner(cfg.initial, cfg.initial);
}

void EnergyLedger::record(const SpectralField& u, const SpectralField& increment, double lp, double dt) {
  const SimConfig& c = *cfg_;
  acc_.dissipation += 2.0 * c.op.mu * inner_powers(u, 0.5, u, 0.5) * dt;
  if (c.damping) acc_.damping += 2.0 * c.op.beta * theta(c, u) * lp * dt;
  acc_.forcing += 2.0 * inner(c.forcing, u) * dt;
  acc_.martingale += 2.0 * inner(increment, u);
  t_ += dt;
}

EnergyBalance EnergyLedger::finish(const SpectralField& final_state) const {
  EnergyBalance b = acc_;
  b.energy = inner(final_state, final_state);
  b.ito = trace_ * t_;
  b.residual = b.energy + b.dissipation + b.damping - b.initial_energy - b.forcing - b.ito - b.martingale;
  return b;
}

EnergyBalance energy_ledger(const Trajectory& path, const SimConfig& cfg) {
  if (path.states.size() != path.increments.size() + 1) throw ConfigError("trajectory is missing increments");
  EnergyLedger ledger(cfg);
  for (std::size_t n = 0; n < path.increments.size(); ++n) {
    const double lp = observe(path.states[n], 0.0, cfg.op.r, cfg.grid()).lp;
    ledger.record(path.states[n], path.increments[n], lp, path.dt);
  }
  return ledger.finish(path.states.back());
}

}  // namespace scbf
