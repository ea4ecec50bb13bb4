#include "scbf/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "scbf/error.hpp"
#include "scbf/operators.hpp"

namespace scbf {

double NoiseSpectrum::sigma(int k1, int k2) const {
  return amplitude[static_cast<std::size_t>(k1 + truncation) * (2 * truncation + 1) + (k2 + truncation)];
}

bool NoiseSpectrum::is_zero() const {
  return std::all_of(amplitude.begin(), amplitude.end(), [](double s) { return s == 0.0; });
}

NoiseSpectrum NoiseSpectrum::zero(int truncation) {
  NoiseSpectrum s;
  s.truncation = truncation;
  s.amplitude.assign(static_cast<std::size_t>(2 * truncation + 1) * (2 * truncation + 1), 0.0);
  return s;
}

void validate_noise_window(double alpha, double epsilon, int r) {
  validate_exponent(r);
  const double lower = r == 1 ? 0.25 : (r - 1.0) / (2.0 * r);
  std::ostringstream msg;
  if (!(alpha > lower)) {
    msg << "noise exponent alpha = " << alpha << " violates alpha > " << lower << " required for r = " << r;
    throw ConfigError(msg.str());
  }
  if (!(alpha < 0.5)) {
    msg << "noise exponent alpha = " << alpha << " violates alpha < 1/2";
    throw ConfigError(msg.str());
  }
  if (!(epsilon > 0.0)) {
    msg << "noise margin epsilon = " << epsilon << " violates epsilon > 0";
    throw ConfigError(msg.str());
  }
  if (epsilon > 2.0 * alpha - 0.5 + 1e-15) {
    msg << "noise margin epsilon = " << epsilon << " violates epsilon <= 2 alpha - 1/2 = " << 2.0 * alpha - 0.5;
    throw ConfigError(msg.str());
  }
}

NoiseSpectrum build_diagonal_spectrum(int truncation, double alpha, int r) {
  return build_diagonal_spectrum(truncation, alpha, default_epsilon(alpha), r);
}

NoiseSpectrum build_diagonal_spectrum(int truncation, double alpha, double epsilon, int r) {
  validate_noise_window(alpha, epsilon, r);
  NoiseSpectrum s = NoiseSpectrum::zero(truncation);
  s.alpha = alpha;
  s.epsilon = epsilon;
  for (auto k : retained_modes(truncation))
    s.amplitude[static_cast<std::size_t>(k.k1 + truncation) * (2 * truncation + 1) + (k.k2 + truncation)] =
        std::pow(k.lambda(), -2.0 * alpha);
  return s;
}

NoiseSpectrum custom_spectrum(int truncation, double alpha, double epsilon, int r, const std::vector<double>& sigma,
                              WindowConstants window, bool relaxed) {
  const auto modes = retained_modes(truncation);
  if (sigma.size() != modes.size())
    throw ConfigError("expected " + std::to_string(modes.size()) + " noise amplitudes, got " +
                      std::to_string(sigma.size()));
  if (!relaxed) validate_noise_window(alpha, epsilon, r);
  NoiseSpectrum s = NoiseSpectrum::zero(truncation);
  s.alpha = alpha;
  s.epsilon = epsilon;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto k = modes[i];
    const double lam = k.lambda();
    if (sigma[i] < 0.0 || !std::isfinite(sigma[i]))
      throw ConfigError("noise amplitudes must be finite and nonnegative");
    if (!relaxed) {
      const double lo = window.lower * std::pow(lam, -2.0 * alpha);
      const double hi = window.upper * std::pow(lam, -(0.5 + epsilon));
      if (sigma[i] < lo * (1.0 - 1e-12) || sigma[i] > hi * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "sigma at k = (" << k.k1 << ", " << k.k2 << ") is " << sigma[i] << ", outside the window [" << lo
            << ", " << hi << "]";
        throw ConfigError(msg.str());
      }
    }
    s.amplitude[static_cast<std::size_t>(k.k1 + truncation) * (2 * truncation + 1) + (k.k2 + truncation)] = sigma[i];
  }
  for (auto k : modes)
    if (s.sigma(k) != s.sigma(-k.k1, -k.k2))
      throw ConfigError("noise amplitudes must agree on k and -k");
  return s;
}

double trace_Q(const NoiseSpectrum& s) {
  double t = 0.0;
  for (double a : s.amplitude) t += a * a;
  return t;
}

double operator_norm_Q(const NoiseSpectrum& s) {
  double m = 0.0;
  for (double a : s.amplitude) m = std::max(m, a * a);
  return m;
}

double lambda0_threshold(const NoiseSpectrum& s, double mu) {
  const double q = operator_norm_Q(s);
  if (q == 0.0) return std::numeric_limits<double>::infinity();
  return mu / (2.0 * q);
}

void write_spectrum_csv(std::ostream& out, const NoiseSpectrum& s) {
  out << "k1,k2,sigma\n";
  const auto old = out.precision(17);
  for (auto k : retained_modes(s.truncation)) out << k.k1 << ',' << k.k2 << ',' << s.sigma(k) << '\n';
  out.precision(old);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double counter_uniform(const RngStream& rng, std::uint64_t step, std::uint64_t slot) {
  std::uint64_t h = mix64(rng.seed);
  h = mix64(h ^ rng.stream);
  h = mix64(h ^ step);
  h = mix64(h ^ slot);
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

SpectralField standard_normals(int truncation, const RngStream& rng, std::uint64_t step) {
  SpectralField xi(truncation);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k1 = -truncation; k1 <= truncation; ++k1)
    for (int k2 = 0; k2 <= truncation; ++k2) {
      if (k2 == 0 && k1 <= 0) continue;
      const auto slot = static_cast<std::uint64_t>(xi.index(k1, k2));
      const double a = counter_uniform(rng, step, 2 * slot);
      const double b = counter_uniform(rng, step, 2 * slot + 1);
      // Box-Muller; each real part has variance 1/2 so that E|xi|^2 = 1.
      const double rad = std::sqrt(-std::log(a));
      const Complex z(rad * std::cos(two_pi * b), rad * std::sin(two_pi * b));
      xi(k1, k2) = z;
      xi(-k1, -k2) = std::conj(z);
    }
  return xi;
}

SpectralField scale_increment(const NoiseSpectrum& s, double dt, const SpectralField& normals) {
  if (normals.truncation() != s.truncation) throw ConfigError("noise spectrum truncation mismatch");
  SpectralField out(s.truncation);
  if (dt <= 0.0) return out;
  const double root = std::sqrt(dt);
  auto src = normals.coefficients();
  auto dst = out.coefficients();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = s.amplitude[i] * root * src[i];
  return out;
}

SpectralField sample_increment(const NoiseSpectrum& s, double dt, const RngStream& rng, std::uint64_t step) {
  if (dt <= 0.0 || s.is_zero()) return SpectralField(s.truncation);
  return scale_increment(s, dt, standard_normals(s.truncation, rng, step));
}

SpectralField aggregated_increment(const NoiseSpectrum& s, double fine_dt, std::uint64_t factor, const RngStream& rng,
                                   std::uint64_t coarse_step) {
  if (factor == 0) throw ConfigError("refinement factor must be positive");
  SpectralField sum = sample_increment(s, fine_dt, rng, coarse_step * factor);
  for (std::uint64_t j = 1; j < factor; ++j) sum += sample_increment(s, fine_dt, rng, coarse_step * factor + j);
  return sum;
}

}  // namespace scbf
