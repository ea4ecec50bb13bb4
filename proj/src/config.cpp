#include "scbf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "scbf/error.hpp"

namespace scbf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
}

long long parse_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& origin) {
  Config c;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": empty key");
    if (c.entries_.count(key)) throw ConfigError(origin + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
    c.entries_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) { entries_[trim(key)] = trim(value); }

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty())
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto* v = find(key);
  return v ? parse_double(key, *v) : fallback;
}

int Config::get_int(const std::string& key, int fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  const long long x = parse_integer(key, *v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError("config key '" + key + "' is out of range");
  return static_cast<int>(x);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  const long long x = parse_integer(key, *v);
  if (x < 0) throw ConfigError("config key '" + key + "' must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + *v + "'");
}

std::vector<std::string> Config::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

SpectralField single_mode(int truncation, WaveVector k, double norm) {
  if (k.k1 == 0 && k.k2 == 0) throw ConfigError("the mean mode (0, 0) is not retained");
  if (std::abs(k.k1) > truncation || std::abs(k.k2) > truncation)
    throw ConfigError("mode outside the truncation box");
  SpectralField u(truncation);
  // The conjugate partner carries the other half of the energy.
  u.set_mode(k, norm / std::sqrt(2.0));
  return u;
}

SimConfig sim_config_from(const Config& c, std::uint64_t seed) {
  OperatorParams op;
  op.mu = c.get_double("operator.mu", op.mu);
  op.beta = c.get_double("operator.beta", op.beta);
  op.r = c.get_int("operator.r", op.r);
  op.validate();

  const int n = c.get_int("galerkin.truncation", 32);
  if (n < 1) throw ConfigError("galerkin.truncation must be at least 1");
  SimConfig cfg = SimConfig::quiet(n, op);
  cfg.grid_size = c.get_int("galerkin.grid_size", 0);

  const std::string noise = c.get_string("noise.type", "diagonal");
  if (noise == "diagonal") {
    const double alpha = c.get_double("noise.alpha", 0.4);
    const double eps = c.get_double("noise.epsilon", default_epsilon(alpha));
    cfg.noise = build_diagonal_spectrum(n, alpha, eps, op.r);
    const double scale = c.get_double("noise.scale", 1.0);
    if (!(scale >= 0.0)) throw ConfigError("noise.scale must be nonnegative");
    for (double& a : cfg.noise.amplitude) a *= scale;
  } else if (noise == "power") {
    // sigma_k = amplitude * lambda_k^{-exponent}, checked against the window unless relaxed.
    const double alpha = c.get_double("noise.alpha", 0.4);
    const double p = c.get_double("noise.exponent", 2.0 * alpha);
    const double eps = c.get_double("noise.epsilon", std::min(default_epsilon(alpha), p - 0.5));
    const double amp = c.get_double("noise.scale", 1.0);
    std::vector<double> sigma;
    for (auto k : retained_modes(n)) sigma.push_back(amp * std::pow(k.lambda(), -p));
    cfg.noise = custom_spectrum(n, alpha, eps, op.r, sigma, {amp, amp}, c.get_bool("noise.relaxed", false));
  } else if (noise == "zero") {
    cfg.noise = NoiseSpectrum::zero(n);
    cfg.noise.alpha = c.get_double("noise.alpha", 0.4);
  } else {
    throw ConfigError("noise.type must be 'diagonal', 'power' or 'zero'");
  }

  const double fnorm = c.get_double("forcing.norm", 0.0);
  if (fnorm != 0.0)
    cfg.forcing = single_mode(n, {c.get_int("forcing.k1", 1), c.get_int("forcing.k2", 1)}, fnorm);

  const std::string init = c.get_string("initial.type", "zero");
  if (init == "mode") {
    cfg.initial = single_mode(n, {c.get_int("initial.k1", 1), c.get_int("initial.k2", 0)},
                              c.get_double("initial.norm", 1.0));
  } else if (init == "random") {
    const int shells = c.get_int("initial.shells", 2);
    const double std_dev = c.get_double("initial.std", 0.1);
    const SpectralField xi = standard_normals(n, {mix64(seed ^ 0x696e6974ULL), c.get_u64("initial.seed", 0)}, 0);
    for (auto k : retained_modes(n))
      if (k.magnitude() < shells + 0.5) cfg.initial(k.k1, k.k2) = std_dev * xi[k];
  } else if (init != "zero") {
    throw ConfigError("initial.type must be 'zero', 'mode' or 'random'");
  }

  cfg.dt = c.get_double("dynamics.dt", cfg.dt);
  cfg.horizon = c.get_double("dynamics.horizon", cfg.horizon);
  cfg.cutoff.radius = c.get_double("dynamics.cutoff_radius", cfg.cutoff.radius);
  cfg.alpha_cut = c.get_double("dynamics.alpha_cut", cfg.alpha_cut);
  cfg.convection = c.get_bool("dynamics.convection", true);
  cfg.damping = c.get_bool("dynamics.damping", true);
  cfg.validate();
  cfg.steps();
  return cfg;
}

}  // namespace scbf
