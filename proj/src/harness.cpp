#include "scbf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "scbf/error.hpp"
#include "scbf/operators.hpp"

namespace scbf {

namespace {

// Initial states use their own key so they never share draws with the dynamics.
std::uint64_t initial_key(std::uint64_t seed) { return mix64(seed ^ 0x696e697469616cULL); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

SpectralField sample_initial(const EnsembleSpec& spec, int truncation, std::uint64_t seed, std::uint64_t index) {
  if (spec.law.kind == InitialLaw::Kind::dirac) {
    if (spec.law.point.empty()) return SpectralField(truncation);
    if (spec.law.point.truncation() != truncation) throw ConfigError("initial point has the wrong truncation");
    return spec.law.point;
  }
  const SpectralField xi = standard_normals(truncation, {initial_key(seed), index}, 0);
  SpectralField x(truncation);
  for (auto k : retained_modes(truncation))
    if (k.magnitude() < spec.law.shells + 0.5) x(k.k1, k.k2) = spec.law.std_dev * xi[k];
  const double e = inner(x, x);
  const double cap = std::log(spec.R) / spec.lambda0;
  if (e > cap) x *= std::sqrt(cap / e);
  return x;
}

double check_initial_law(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed) {
  const double threshold = lambda0_threshold(cfg.noise, cfg.op.mu);
  if (!(spec.lambda0 > 0.0 && spec.lambda0 < threshold))
    throw ConfigError("lambda0 must lie strictly between 0 and mu lambda_1 / (2 ||Q||)");
  if (!(spec.R >= 1.0)) throw ConfigError("R must be at least 1");
  if (spec.n_traj == 0) throw ConfigError("ensemble needs at least one trajectory");
  if (spec.law.kind == InitialLaw::Kind::dirac) {
    const SpectralField x = sample_initial(spec, cfg.truncation, seed, 0);
    const double a = spec.lambda0 * inner(x, x);
    if (a > std::log(spec.R)) throw ConfigError("Dirac initial law lies outside M_{lambda0,R}");
    return std::exp(a);
  }
  if (spec.law.shells < 1 || !(spec.law.std_dev >= 0.0)) throw ConfigError("invalid Gaussian initial law");
  double s = 0.0;
  for (std::uint64_t i = 0; i < spec.n_traj; ++i) {
    const SpectralField x = sample_initial(spec, cfg.truncation, seed, i);
    s += std::exp(spec.lambda0 * inner(x, x));
  }
  const double mean = s / static_cast<double>(spec.n_traj);
  if (mean > spec.R * (1.0 + 1e-12)) throw ConfigError("Gaussian initial law lies outside M_{lambda0,R}");
  return mean;
}

std::vector<Observable> named_observables(const std::vector<std::string>& names, int r, int grid_size) {
  std::vector<Observable> out;
  for (const auto& n : names) {
    if (n == "energy") {
      out.push_back({n, [](const SpectralField& u) { return inner(u, u); }});
    } else if (n == "enstrophy") {
      out.push_back({n, [](const SpectralField& u) { return inner_powers(u, 0.5, u, 0.5); }});
    } else if (n == "lp") {
      out.push_back({n, [r, grid_size](const SpectralField& u) { return observe(u, 0.0, r, grid_size).lp; }});
    } else {
      throw ConfigError("unknown observable '" + n + "' (expected energy, enstrophy or lp)");
    }
  }
  return out;
}

EnsembleSpec ensemble_spec_from(const Config& c, const SimConfig& cfg) {
  EnsembleSpec s;
  const int n = c.get_int("ensemble.n_traj", 100);
  if (n < 1) throw ConfigError("ensemble.n_traj must be positive");
  s.n_traj = static_cast<std::size_t>(n);
  s.horizon = c.get_double("ensemble.horizon", cfg.horizon);
  if (c.has("ensemble.lambda0")) {
    s.lambda0 = c.get_double("ensemble.lambda0", 0.0);
  } else {
    const double threshold = lambda0_threshold(cfg.noise, cfg.op.mu);
    if (!std::isfinite(threshold)) throw ConfigError("zero noise: set ensemble.lambda0 explicitly");
    s.lambda0 = c.get_double("ensemble.lambda0_fraction", 0.5) * threshold;
  }
  s.R = c.get_double("ensemble.R", 2.0);
  const std::string law = c.get_string("ensemble.law", "dirac");
  if (law == "dirac") {
    s.law.kind = InitialLaw::Kind::dirac;
    s.law.point = cfg.initial;
  } else if (law == "gaussian") {
    s.law.kind = InitialLaw::Kind::gaussian;
    s.law.shells = c.get_int("ensemble.gaussian_shells", s.law.shells);
    s.law.std_dev = c.get_double("ensemble.gaussian_std", s.law.std_dev);
  } else {
    throw ConfigError("ensemble.law must be 'dirac' or 'gaussian'");
  }
  s.observables = split_list(c.get_string("ensemble.observables", "energy,enstrophy"));
  named_observables(s.observables, cfg.op.r, cfg.grid());
  const std::string radius = c.get_string("ensemble.hitting_radius", "none");
  if (radius == "auto") {
    s.hitting_radius = default_hitting_radius(1.0, s.lambda0, cfg.op.mu, cfg.noise, cfg.forcing);
  } else if (radius != "none") {
    s.hitting_radius = c.get_double("ensemble.hitting_radius", -1.0);
    if (!(s.hitting_radius >= 0.0)) throw ConfigError("ensemble.hitting_radius must be nonnegative, 'auto' or 'none'");
  }
  return s;
}

PathStats run_trajectory(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed, std::uint64_t index,
                         OccupationAccumulator* occupation) {
  SimConfig c = cfg;
  c.initial = sample_initial(spec, cfg.truncation, seed, index);
  c.horizon = spec.horizon;
  PathStats p;
  p.initial_energy = inner(c.initial, c.initial);
  double energy_integral = 0.0;
  try {
    simulate(c, default_increments(c, {seed, index}),
             [&](std::uint64_t, double, const SpectralField& u, const SpectralField* inc, double lp) {
               if (!inc) {
                 p.final_energy = inner(u, u);
                 if (occupation) occupation->finish(u);
                 return;
               }
               p.dissipation += c.dt * inner_powers(u, 0.5, u, 0.5);
               p.damping += c.dt * lp;
               energy_integral += c.dt * inner(u, u);
               if (occupation) occupation->accumulate(u, c.dt);
             });
  } catch (const BlowUpError& e) {
    throw BlowUpError(e.step(), "trajectory " + std::to_string(index));
  }
  p.mean_energy = spec.horizon > 0.0 ? energy_integral / spec.horizon : p.initial_energy;
  return p;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto observables = named_observables(spec.observables, cfg.op.r, cfg.grid());
  const std::size_t n = spec.n_traj;
  std::vector<PathStats> paths(n);
  std::vector<OccupationAccumulator> acc(n, OccupationAccumulator(observables, {}, spec.hitting_radius));
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      paths[idx] = run_trajectory(spec, cfg, seed, idx, &acc[idx]);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  EnsembleResult r{OccupationAccumulator(observables, {}, -1.0), std::move(paths)};
  for (const auto& a : acc) r.occupation.merge(a);
  return r;
}

void write_paths_csv(std::ostream& out, const std::vector<PathStats>& paths) {
  const auto old = out.precision(17);
  out << "trajectory,initial_energy,final_energy,dissipation,damping,mean_energy\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    out << i << ',' << p.initial_energy << ',' << p.final_energy << ',' << p.dissipation << ',' << p.damping << ','
        << p.mean_energy << '\n';
  }
  out.precision(old);
}

ExpEstimate pooled_exp_mean(const std::vector<double>& exponents) {
  if (exponents.empty()) throw ConfigError("no samples to pool");
  ExpEstimate e;
  const double amax = *std::max_element(exponents.begin(), exponents.end());
  std::vector<double> w(exponents.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(exponents[i] - amax);
  const double n = static_cast<double>(w.size());
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const double mean = total / n;
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  var = w.size() > 1 ? var / (n - 1.0) : 0.0;
  e.log_estimate = amax + std::log(mean);
  e.estimate = std::exp(e.log_estimate);
  e.std_error = std::exp(amax) * std::sqrt(var / n);
  std::sort(w.begin(), w.end(), std::greater<>());
  const auto top = std::max<std::size_t>(1, (w.size() + 99) / 100);
  e.top_share = std::accumulate(w.begin(), w.begin() + static_cast<long>(top), 0.0) / total;
  e.heavy_tail = e.top_share > 0.5;
  return e;
}

double exponential_bound_factor(const SimConfig& cfg, double lambda0, double t) {
  const double denom = cfg.op.mu - 2.0 * operator_norm_Q(cfg.noise) * lambda0;  // lambda_1 = 1
  if (!(denom > 0.0)) throw ConfigError("lambda0 must lie below mu lambda_1 / (2 ||Q||)");
  return std::exp(t * lambda0 * (trace_Q(cfg.noise) + inner(cfg.forcing, cfg.forcing) / denom));
}

ExponentialReport verify_exponential_estimate(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed) {
  check_initial_law(spec, cfg, seed);
  EnsembleSpec plain = spec;
  plain.hitting_radius = -1.0;
  return verify_exponential_estimate(spec, cfg, run_ensemble(plain, cfg, seed).paths, seed);
}

ExponentialReport verify_exponential_estimate(const EnsembleSpec& spec, const SimConfig& cfg,
                                              const std::vector<PathStats>& paths, std::uint64_t seed) {
  ExponentialReport r;
  r.lambda0 = spec.lambda0;
  r.horizon = spec.horizon;
  r.initial_moment = check_initial_law(spec, cfg, seed);
  const double log_bound = std::log(exponential_bound_factor(cfg, spec.lambda0, spec.horizon)) + std::log(r.initial_moment);
  const double l0 = spec.lambda0, mu = cfg.op.mu, beta = cfg.op.beta;
  std::vector<double> joint, energy, dissipation, damping;
  for (const auto& p : paths) {
    energy.push_back(l0 * p.final_energy);
    dissipation.push_back(mu * l0 * p.dissipation);
    damping.push_back(beta * l0 * p.damping);
    joint.push_back(energy.back() + dissipation.back() + damping.back());
  }
  const std::pair<const char*, const std::vector<double>*> parts[] = {
      {"joint", &joint}, {"energy", &energy}, {"dissipation", &dissipation}, {"damping", &damping}};
  r.pass = true;
  for (const auto& [name, xs] : parts) {
    EstimateCheck c;
    c.name = name;
    c.mc = pooled_exp_mean(*xs);
    c.log_bound = log_bound;
    c.bound = std::exp(log_bound);
    const double lower = c.mc.estimate - 3.0 * c.mc.std_error;
    c.pass = lower <= 0.0 || std::log(lower) <= log_bound;
    c.margin = c.bound - lower;
    r.pass = r.pass && c.pass;
    r.checks.push_back(c);
  }
  return r;
}

void write_exponential_json(std::ostream& out, const ExponentialReport& r) {
  nlohmann::json j;
  j["lambda0"] = r.lambda0;
  j["horizon"] = r.horizon;
  j["initial_moment"] = r.initial_moment;
  j["pass"] = r.pass;
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name},
                           {"estimate", c.mc.estimate},
                           {"log_estimate", c.mc.log_estimate},
                           {"std_error", c.mc.std_error},
                           {"bound", c.bound},
                           {"log_bound", c.log_bound},
                           {"margin", c.margin},
                           {"top_share", c.mc.top_share},
                           {"heavy_tail", c.mc.heavy_tail},
                           {"pass", c.pass}});
  out << j.dump(2) << '\n';
}

void write_exponential_csv(std::ostream& out, const ExponentialReport& r) {
  const auto old = out.precision(17);
  out << "functional,estimate,std_error,bound,margin,top_share,heavy_tail,pass\n";
  for (const auto& c : r.checks)
    out << c.name << ',' << c.mc.estimate << ',' << c.mc.std_error << ',' << c.bound << ',' << c.margin << ','
        << c.mc.top_share << ',' << (c.mc.heavy_tail ? 1 : 0) << ',' << (c.pass ? 1 : 0) << '\n';
  out.precision(old);
}

namespace {

SpectralField suite_field(int n, std::uint64_t seed, std::uint64_t index) {
  SpectralField u = standard_normals(n, {mix64(seed ^ 0x7375697465ULL), index}, 0);
  for (auto k : retained_modes(n)) u(k.k1, k.k2) /= (1.0 + k.lambda());
  return u;
}

void record(IdentityCheck& c, double value) {
  if (!(value <= c.worst)) c.worst = std::isnan(value) ? std::numeric_limits<double>::infinity() : value;
}

}  // namespace

std::vector<IdentityCheck> run_identity_suite(const IdentitySuiteOptions& opts) {
  if (opts.truncation < 1 || opts.samples < 1) throw ConfigError("identity suite needs truncation and samples >= 1");
  const int n = opts.truncation;
  SpectralGrid& g = SpectralGrid::cached(n);
  std::vector<IdentityCheck> out = {
      {"trilinear_cancellation", 0.0, 1e-10, false}, {"trilinear_antisymmetry", 0.0, 1e-10, false},
      {"damping_identity", 0.0, 1e-9, false},        {"monotonicity", 0.0, 1e-9, false},
      {"norm_comparison", 0.0, 1e-9, false},         {"local_monotonicity", 0.0, 1e-8, false},
      {"gateaux_positivity", 0.0, 1e-10, false}};
  for (auto& c : out) c.worst = -std::numeric_limits<double>::infinity();
  const OperatorParams p{1.0, 1.0, 3};
  for (int s = 0; s < opts.samples; ++s) {
    const auto base = static_cast<std::uint64_t>(3 * s);
    const SpectralField u = suite_field(n, opts.seed, base), v = suite_field(n, opts.seed, base + 1),
                        w = suite_field(n, opts.seed, base + 2);
    const SpectralField buv = bilinear_B(g, u, v), buw = bilinear_B(g, u, w);
    const double nb = std::sqrt(inner(buv, buv) * inner(v, v));
    record(out[0], std::abs(inner(buv, v)) / nb);
    record(out[1], std::abs(inner(buv, w) + inner(buw, v)) / (nb + std::sqrt(inner(buw, buw) * inner(v, v))));
    for (int r = 1; r <= 3; ++r) {
      const double lp = lp_norm_pow(g.to_physical(u), r + 1.0);
      record(out[2], std::abs(inner(damping_C(g, u, r), u) - lp) / lp);
      const double scale = lp + lp_norm_pow(g.to_physical(v), r + 1.0);
      record(out[3], -monotonicity_gap(u, v, r) / scale);
      record(out[4], -norm_comparison_margin(u, v, r) / scale);
      const SpectralField cp = gateaux_C_prime(g, u, w, r);
      record(out[6], -inner(cp, w) / (1.0 + scale) / inner(w, w));
    }
    SpectralField vb = v;
    vb *= 1.0 / lp_norm(g.to_physical(v), 4.0);
    const SpectralField d = u - vb;
    const double t2 = 27.0 / (32.0 * p.mu * p.mu * p.mu) * inner(d, d);
    const double res = local_monotonicity_residual(u, vb, p, 1.0);
    record(out[5], -res / (std::abs(res - t2) + t2));
  }
  for (auto& c : out) c.pass = c.worst <= c.tolerance;
  return out;
}

void write_identity_json(std::ostream& out, const std::vector<IdentityCheck>& checks) {
  nlohmann::json j;
  bool all = true;
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"worst", c.worst}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    all = all && c.pass;
  }
  j["pass"] = all;
  out << j.dump(2) << '\n';
}

}  // namespace scbf
