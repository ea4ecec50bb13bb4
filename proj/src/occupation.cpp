#include "scbf/occupation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "scbf/error.hpp"

namespace scbf {

namespace {

// Tolerance for comparing accumulated times against 1.
constexpr double kTimeSlack = 1e-9;

bool in_ball(const SpectralField& u, double radius) {
  return std::sqrt(inner_powers(u, 0.5, u, 0.5)) <= radius;
}

}  // namespace

std::vector<Observable> default_observables() {
  return {{"energy", [](const SpectralField& u) { return inner(u, u); }},
          {"enstrophy", [](const SpectralField& u) { return inner_powers(u, 0.5, u, 0.5); }}};
}

std::vector<double> shell_energies(const SpectralField& u, int count) {
  std::vector<double> e(static_cast<std::size_t>(count), 0.0);
  for (auto k : retained_modes(u.truncation())) {
    const auto s = static_cast<long>(std::floor(k.magnitude() + 0.5));
    if (s >= 1 && s <= count) e[static_cast<std::size_t>(s - 1)] += std::norm(u[k]);
  }
  return e;
}

std::vector<int> histogram_key(const SpectralField& u, const HistogramSpec& spec) {
  const auto e = shell_energies(u, spec.shells);
  std::vector<int> key(e.size());
  const double width = (spec.log10_max - spec.log10_min) / spec.bins;
  for (std::size_t i = 0; i < e.size(); ++i) {
    int b = 0;
    if (e[i] > 0.0) b = static_cast<int>(std::floor((std::log10(e[i]) - spec.log10_min) / width));
    key[i] = std::clamp(b, 0, spec.bins - 1);
  }
  return key;
}

double histogram_variation(const Histogram& p, double p_mass, const Histogram& q, double q_mass) {
  double s = 0.0;
  for (const auto& [key, w] : p) {
    const auto it = q.find(key);
    s += std::abs(w / p_mass - (it == q.end() ? 0.0 : it->second / q_mass));
  }
  for (const auto& [key, w] : q)
    if (!p.count(key)) s += w / q_mass;
  return s;
}

HittingTimes hitting_time(const std::vector<SpectralField>& states, double dt, double radius) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  HittingTimes h;
  h.horizon = states.empty() ? 0.0 : static_cast<double>(states.size() - 1) * dt;
  for (std::size_t n = 0; n < states.size(); ++n) {
    const double t = static_cast<double>(n) * dt;
    if (!in_ball(states[n], radius)) continue;
    if (h.censored) {
      h.tau = t;
      h.censored = false;
    }
    if (t >= 1.0 - kTimeSlack) {
      h.tau1 = t;
      h.censored1 = false;
      break;
    }
  }
  return h;
}

OccupationAccumulator::OccupationAccumulator(std::vector<Observable> observables, HistogramSpec spec, double radius)
    : observables_(std::move(observables)), spec_(spec), radius_(radius), integrals_(observables_.size(), 0.0) {
  if (spec_.shells < 1 || spec_.bins < 1 || !(spec_.log10_max > spec_.log10_min))
    throw ConfigError("invalid histogram specification");
  if (radius_ >= 0.0) hits_.emplace_back();
}

void OccupationAccumulator::check_hit(const SpectralField& u) {
  if (hits_.size() != 1 || !in_ball(u, radius_)) return;
  HittingTimes& h = hits_.front();
  if (h.censored) {
    h.tau = t_;
    h.censored = false;
  }
  if (h.censored1 && t_ >= 1.0 - kTimeSlack) {
    h.tau1 = t_;
    h.censored1 = false;
  }
}

void OccupationAccumulator::accumulate(const SpectralField& u, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  check_hit(u);
  for (std::size_t i = 0; i < observables_.size(); ++i) integrals_[i] += dt * observables_[i].eval(u);
  histogram_[histogram_key(u, spec_)] += dt;
  t_ += dt;
  if (hits_.size() == 1) hits_.front().horizon = t_;
}

void OccupationAccumulator::finish(const SpectralField& u) { check_hit(u); }

void OccupationAccumulator::merge(const OccupationAccumulator& other) {
  if (other.observables_.size() != observables_.size() || other.spec_.shells != spec_.shells ||
      other.spec_.bins != spec_.bins)
    throw ConfigError("cannot merge accumulators with different layouts");
  t_ += other.t_;
  for (std::size_t i = 0; i < integrals_.size(); ++i) integrals_[i] += other.integrals_[i];
  for (const auto& [key, w] : other.histogram_) histogram_[key] += w;
  hits_.insert(hits_.end(), other.hits_.begin(), other.hits_.end());
}

std::vector<double> OccupationAccumulator::averages() const {
  std::vector<double> a(integrals_.size(), std::numeric_limits<double>::quiet_NaN());
  if (t_ > 0.0)
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = integrals_[i] / t_;
  return a;
}

double OccupationAccumulator::histogram_mass() const {
  double s = 0.0;
  for (const auto& [key, w] : histogram_) s += w;
  return s;
}

void OccupationAccumulator::write_averages_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "observable,integral,average\n";
  const auto a = averages();
  for (std::size_t i = 0; i < a.size(); ++i) out << observables_[i].name << ',' << integrals_[i] << ',' << a[i] << '\n';
  out.precision(old);
}

void OccupationAccumulator::write_histogram_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  for (int s = 1; s <= spec_.shells; ++s) out << "shell" << s << "_bin,";
  out << "time,fraction\n";
  for (const auto& [key, w] : histogram_) {
    for (int b : key) out << b << ',';
    out << w << ',' << w / t_ << '\n';
  }
  out.precision(old);
}

HittingMoment exp_hitting_moment(const std::vector<HittingTimes>& hits, double lambda, bool shifted) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  HittingMoment m;
  m.lambda = lambda;
  std::vector<double> x;
  for (const auto& h : hits) {
    if (shifted ? h.censored1 : h.censored) {
      ++m.censored;
      continue;
    }
    x.push_back(std::exp(lambda * (shifted ? h.tau1 : h.tau)));
  }
  m.used = x.size();
  if (x.empty()) throw NumericalError("every trajectory is censored; no hitting-time estimate");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  m.estimate = mean;
  if (x.size() > 1) m.std_error = std::sqrt(var / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  return m;
}

namespace {

double forcing_term(double lambda0, double mu, const NoiseSpectrum& noise, const SpectralField& forcing) {
  const double denom = mu - 2.0 * operator_norm_Q(noise) * lambda0;  // lambda_1 = 1
  if (!(denom > 0.0)) throw ConfigError("lambda0 must lie below mu lambda_1 / (2 ||Q||)");
  return inner(forcing, forcing) / denom;
}

}  // namespace

HittingCondition hitting_condition(double radius, double lambda, double lambda0, double mu,
                                   const NoiseSpectrum& noise, const SpectralField& forcing) {
  HittingCondition c;
  c.radius = radius;
  c.constant = 0.5 * mu * radius * radius - trace_Q(noise) - forcing_term(lambda0, mu, noise, forcing);
  c.margin = lambda0 * c.constant - lambda;
  c.satisfied = c.margin >= 1.0 - 1e-12;
  return c;
}

double default_hitting_radius(double lambda, double lambda0, double mu, const NoiseSpectrum& noise,
                              const SpectralField& forcing) {
  if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
  const double c = (1.0 + lambda) / lambda0;
  return std::sqrt(2.0 / mu * (c + trace_Q(noise) + forcing_term(lambda0, mu, noise, forcing)));
}

void write_hitting_json(std::ostream& out, const std::vector<HittingMoment>& moments, const HittingCondition& cond) {
  nlohmann::json j;
  j["radius"] = cond.radius;
  j["constant"] = cond.constant;
  j["margin"] = cond.margin;
  j["condition_satisfied"] = cond.satisfied;
  for (const auto& m : moments)
    j["moments"].push_back({{"lambda", m.lambda},
                            {"estimate", m.estimate},
                            {"std_error", m.std_error},
                            {"used", m.used},
                            {"censored", m.censored}});
  out << j.dump(2) << '\n';
}

}  // namespace scbf
