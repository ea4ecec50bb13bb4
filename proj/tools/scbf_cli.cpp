// Command line front end: scbf_cli <subcommand> [--config FILE] [options] [key=value ...]
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "scbf/config.hpp"
#include "scbf/control.hpp"
#include "scbf/error.hpp"
#include "scbf/harness.hpp"
#include "scbf/ldp_oracle.hpp"

namespace fs = std::filesystem;
using namespace scbf;

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "json";
  std::vector<std::string> overrides;
  std::string chain;
  std::string nu;
  std::string target;
  double lambda = 0.0;
  int start = 0;
};

class Usage : public Error {
 public:
  using Error::Error;
};

Config load_config(const Options& o, bool required) {
  Config c;
  if (!o.config.empty()) {
    c = Config::load(o.config);
  } else if (required) {
    throw Usage("--config is required for this subcommand");
  }
  for (const auto& a : o.overrides) c.apply_override(a);
  return c;
}

// One file can serve several subcommands, so only sections this subcommand reads are reported.
void warn_unused(const Config& c, const std::vector<std::string>& sections) {
  for (const auto& k : c.unused()) {
    const std::string section = k.substr(0, k.find('.'));
    if (std::find(sections.begin(), sections.end(), section) != sections.end())
      std::cerr << "warning: config key '" << k << "' was not used\n";
  }
}

const std::vector<std::string> model_sections = {"operator", "galerkin", "noise", "forcing", "initial", "dynamics"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::ofstream open_out(const Options& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  const fs::path p = fs::path(o.out_dir) / name;
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("expected a comma separated list of numbers, got '" + s + "'");
    }
  }
  return out;
}

int cmd_simulate(const Options& o) {
  const Config c = load_config(o, true);
  const SimConfig cfg = sim_config_from(c, o.seed);
  const int every = c.get_int("output.every", 100);
  if (every < 1) throw ConfigError("output.every must be positive");
  warn_unused(c, with(model_sections, {"output"}));

  auto table = open_out(o, "trajectory.csv");
  write_observables_header(table);
  EnergyLedger ledger(cfg);
  const SpectralField final_state =
      simulate(cfg, default_increments(cfg, {o.seed, 0}),
               [&](std::uint64_t n, double t, const SpectralField& u, const SpectralField* inc, double lp) {
                 if (!inc || n % static_cast<std::uint64_t>(every) == 0)
                   write_observables_row(table, observe(u, t, cfg.op.r, cfg.grid()));
                 if (inc) ledger.record(u, *inc, lp, cfg.dt);
               });
  const EnergyBalance b = ledger.finish(final_state);
  nlohmann::json j = {{"truncation", cfg.truncation},
                      {"grid_size", cfg.grid()},
                      {"dt", cfg.dt},
                      {"horizon", cfg.horizon},
                      {"steps", cfg.steps()},
                      {"seed", o.seed},
                      {"final_energy", b.energy},
                      {"energy_ledger",
                       {{"initial_energy", b.initial_energy},
                        {"dissipation", b.dissipation},
                        {"damping", b.damping},
                        {"forcing", b.forcing},
                        {"ito", b.ito},
                        {"martingale", b.martingale},
                        {"residual", b.residual}}}};
  open_out(o, "summary.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_verify(const Options& o) {
  const Config c = load_config(o, true);
  const SimConfig cfg = sim_config_from(c, o.seed);
  const EnsembleSpec spec = ensemble_spec_from(c, cfg);
  warn_unused(c, with(model_sections, {"ensemble"}));
  const ExponentialReport r = verify_exponential_estimate(spec, cfg, o.seed);
  if (o.format == "csv") {
    auto out = open_out(o, "exponential.csv");
    write_exponential_csv(out, r);
    write_exponential_csv(std::cout, r);
  } else {
    auto out = open_out(o, "exponential.json");
    write_exponential_json(out, r);
    write_exponential_json(std::cout, r);
  }
  for (const auto& ch : r.checks)
    if (ch.mc.heavy_tail) std::cerr << "warning: heavy-tailed samples in '" << ch.name << "', the estimate is fragile\n";
  std::cerr << (r.pass ? "PASS" : "FAIL") << " exponential estimate\n";
  return 0;
}

int cmd_occupation(const Options& o) {
  const Config c = load_config(o, true);
  const SimConfig cfg = sim_config_from(c, o.seed);
  const EnsembleSpec spec = ensemble_spec_from(c, cfg);
  const auto lambdas = parse_list(c.get_string("occupation.lambdas", "0.1,0.2"));
  warn_unused(c, with(model_sections, {"ensemble", "occupation"}));
  check_initial_law(spec, cfg, o.seed);
  const EnsembleResult r = run_ensemble(spec, cfg, o.seed);
  auto averages = open_out(o, "averages.csv");
  r.occupation.write_averages_csv(averages);
  auto histogram = open_out(o, "histogram.csv");
  r.occupation.write_histogram_csv(histogram);
  auto paths = open_out(o, "paths.csv");
  write_paths_csv(paths, r.paths);
  if (spec.hitting_radius >= 0.0) {
    std::vector<HittingMoment> m;
    for (double l : lambdas) m.push_back(exp_hitting_moment(r.occupation.hitting(), l, false));
    const HittingCondition cond =
        hitting_condition(spec.hitting_radius, lambdas.empty() ? 0.0 : lambdas.back(), spec.lambda0, cfg.op.mu,
                          cfg.noise, cfg.forcing);
    auto out = open_out(o, "hitting.json");
    write_hitting_json(out, m, cond);
  }
  r.occupation.write_averages_csv(std::cout);
  return 0;
}

SpectralField band_limited(int n, double amplitude, std::uint64_t seed, std::uint64_t which) {
  const SpectralField xi = standard_normals(n, {mix64(seed ^ 0x636f6e74726f6cULL), which}, 0);
  SpectralField x(n);
  for (auto k : retained_modes(n))
    if (std::abs(k.k1) <= 2 && std::abs(k.k2) <= 2) x(k.k1, k.k2) = amplitude * xi[k];
  return x;
}

int cmd_control(const Options& o) {
  Config c = load_config(o, false);
  if (!c.has("galerkin.truncation")) c.set("galerkin.truncation", "16");
  if (!c.has("noise.type")) c.set("noise.type", "zero");
  const SimConfig base = sim_config_from(c, o.seed);
  const double horizon = c.get_double("control.horizon", 2.0);
  const double t0 = c.get_double("control.t0", 0.5);
  const double t1 = c.get_double("control.t1", 1.5);
  const double amplitude = c.get_double("control.amplitude", 0.01);
  const double alpha = c.get_double("control.alpha", base.noise.alpha);
  const auto dts = parse_list(c.get_string("control.dt", "4e-4,2e-4,1e-4"));
  warn_unused(c, with(model_sections, {"control"}));

  const SpectralField x = band_limited(base.truncation, amplitude, o.seed, 0);
  const SpectralField y = band_limited(base.truncation, amplitude, o.seed, 1);
  auto table = open_out(o, "control.csv");
  write_replay_csv_header(table);
  write_replay_csv_header(std::cout);
  for (double dt : dts) {
    SimConfig cfg = base;
    cfg.dt = dt;
    cfg.horizon = horizon;
    const BridgePath ub = build_bridge_path(x, y, horizon, t0, t1, dt);
    const ReplayReport rep = extract_and_replay(ub, solve_control_v(ub, cfg), cfg, alpha);
    write_replay_csv_row(table, rep);
    write_replay_csv_row(std::cout, rep);
  }
  const double exact = semigroup_budget_exact(x, alpha, horizon);
  const double quad = semigroup_budget_quadrature(x, alpha, horizon, dts.empty() ? 1e-3 : dts.back());
  const double half = 0.5 * inner_powers(x, alpha, x, alpha);
  nlohmann::json j = {{"budget_exact", exact}, {"budget_quadrature", quad}, {"half_norm_squared", half},
                      {"within_bound", exact <= half}};
  open_out(o, "budget.json") << j.dump(2) << '\n';
  return 0;
}

std::vector<int> parse_states(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

int cmd_dv(const Options& o) {
  if (o.chain.empty()) throw Usage("dv-oracle needs --chain FILE");
  std::ifstream in(o.chain);
  if (!in) throw ConfigError("cannot open chain file '" + o.chain + "'");
  const FiniteChain chain = read_chain_csv(in);
  const ProbVector pi = invariant_distribution(chain);
  nlohmann::json j;
  j["states"] = pi.size();
  j["irreducible"] = is_irreducible(chain);
  j["aperiodic"] = is_aperiodic(chain);
  j["invariant"] = std::vector<double>(pi.data(), pi.data() + pi.size());
  if (!o.nu.empty()) {
    const auto v = parse_list(o.nu);
    const ProbVector nu = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const DvResult d = dv_rate_detail(nu, chain);
    j["dv_rate"] = {{"nu", v}, {"value", d.value}, {"gradient_norm", d.gradient_norm}, {"iterations", d.iterations}};
  }
  if (!o.target.empty()) {
    const auto K = parse_states(o.target);
    const double threshold = divergence_threshold(chain, K);
    const HittingMomentExact h = exp_hitting_moment_exact(chain, K, o.lambda, o.start);
    j["hitting"] = {{"target", K},
                    {"start", o.start},
                    {"lambda", o.lambda},
                    {"divergence_threshold", threshold},
                    {"divergent", h.divergent},
                    {"spectral_radius", h.spectral_radius}};
    if (!h.divergent) j["hitting"]["moment"] = h.value;
  }
  if (o.format == "csv") {
    auto out = open_out(o, "dv_oracle.csv");
    out << "state,invariant\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < pi.size(); ++i) out << i << ',' << pi[i] << '\n';
  }
  open_out(o, "dv_oracle.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_identities(const Options& o) {
  const Config c = load_config(o, false);
  IdentitySuiteOptions opts;
  opts.truncation = c.get_int("identities.truncation", opts.truncation);
  opts.samples = c.get_int("identities.samples", opts.samples);
  opts.seed = o.seed;
  warn_unused(c, {"identities"});
  const auto checks = run_identity_suite(opts);
  if (o.format == "csv") {
    auto out = open_out(o, "identities.csv");
    out << "name,worst,tolerance,pass\n";
    for (const auto& ch : checks) out << ch.name << ',' << ch.worst << ',' << ch.tolerance << ',' << ch.pass << '\n';
  } else {
    auto out = open_out(o, "identities.json");
    write_identity_json(out, checks);
  }
  bool all = true;
  for (const auto& ch : checks) {
    std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << " worst " << ch.worst << " tolerance " << ch.tolerance
              << '\n';
    all = all && ch.pass;
  }
  std::cout << (all ? "all identities hold" : "some identities fail") << '\n';
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification harness for the stochastic convective Brinkman-Forchheimer equations"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "key = value configuration file");
    s->add_option("--seed", o.seed, "master seed");
    s->add_option("--out-dir", o.out_dir, "directory for output files");
    s->add_option("--format", o.format, "summary format")->check(CLI::IsMember({"csv", "json"}));
    s->add_option("overrides", o.overrides, "key=value overrides");
  };
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> commands;
  commands.emplace_back(app.add_subcommand("simulate", "integrate one trajectory"), cmd_simulate);
  commands.emplace_back(app.add_subcommand("verify-estimates", "Monte Carlo check of the exponential moment bound"),
                        cmd_verify);
  commands.emplace_back(app.add_subcommand("occupation", "ensemble occupation averages and hitting times"),
                        cmd_occupation);
  commands.emplace_back(app.add_subcommand("control-demo", "steering replay error against dt"), cmd_control);
  auto* dv = app.add_subcommand("dv-oracle", "Donsker-Varadhan rate and hitting moments of a finite chain");
  commands.emplace_back(dv, cmd_dv);
  commands.emplace_back(app.add_subcommand("identities", "operator property suite"), cmd_identities);
  for (auto& [s, f] : commands) common(s);
  dv->add_option("--chain", o.chain, "transition matrix CSV");
  dv->add_option("--nu", o.nu, "comma separated distribution for the rate");
  dv->add_option("--target", o.target, "comma separated target states for hitting moments");
  dv->add_option("--lambda", o.lambda, "exponent of the hitting moment");
  dv->add_option("--start", o.start, "start state of the hitting moment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  for (auto& [s, f] : commands) {
    if (!s->parsed()) continue;
    try {
      return f(o);
    } catch (const Usage& e) {
      std::cerr << "error: " << e.what() << "\n\n" << s->help();
      return 2;
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return 1;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return 2;
}
