#pragma once

// Diagonal noise G e_k = sigma_k e_k, its admissibility window, and reproducible
// Wiener increments.
//
// Random numbers are counter based: every Gaussian is a pure function of
// (seed, stream, step, mode), so a trajectory's increments do not depend on which
// thread runs it or in which order.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "scbf/spectral.hpp"

namespace scbf {

struct NoiseSpectrum {
  int truncation = 0;
  double alpha = 0.0;
  double epsilon = 0.0;
  /// One amplitude per storage slot of a SpectralField; the mean slot is zero.
  std::vector<double> amplitude;

  double sigma(int k1, int k2) const;
  double sigma(WaveVector k) const { return sigma(k.k1, k.k2); }
  bool is_zero() const;

  static NoiseSpectrum zero(int truncation);
};

/// Checks (r-1)/(2r) < alpha < 1/2 (1/4 < alpha for r = 1) and 0 < epsilon <= 2 alpha - 1/2.
void validate_noise_window(double alpha, double epsilon, int r);
/// The largest epsilon the window allows for this alpha.
inline double default_epsilon(double alpha) { return 2.0 * alpha - 0.5; }

/// sigma_k = lambda_k^{-2 alpha}.
NoiseSpectrum build_diagonal_spectrum(int truncation, double alpha, int r);
NoiseSpectrum build_diagonal_spectrum(int truncation, double alpha, double epsilon, int r);

struct WindowConstants {
  double lower = 1.0;  // c in c lambda^{-2 alpha} <= sigma
  double upper = 1.0;  // C in sigma <= C lambda^{-(1/2 + epsilon)}
};

/// User-supplied amplitudes indexed by `retained_modes(truncation)`. With `relaxed`
/// no window is checked.
NoiseSpectrum custom_spectrum(int truncation, double alpha, double epsilon, int r, const std::vector<double>& sigma,
                              WindowConstants window = {}, bool relaxed = false);

/// Sum of sigma_k^2 over all retained modes.
double trace_Q(const NoiseSpectrum& s);
/// max_k sigma_k^2.
double operator_norm_Q(const NoiseSpectrum& s);
/// mu lambda_1 / (2 ||Q||); +infinity for a zero spectrum.
double lambda0_threshold(const NoiseSpectrum& s, double mu);

/// Spectrum table with header `k1,k2,sigma`.
void write_spectrum_csv(std::ostream& out, const NoiseSpectrum& s);

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// 64-bit finalizer of splitmix64.
std::uint64_t mix64(std::uint64_t x);
/// Deterministic uniform in (0, 1) for a counter tuple.
double counter_uniform(const RngStream& rng, std::uint64_t step, std::uint64_t slot);

/// Hermitian field of complex standard Gaussians, E|xi_k|^2 = 1, for step `step`.
SpectralField standard_normals(int truncation, const RngStream& rng, std::uint64_t step);

/// G dW over a step of length dt: E|dW_k|^2 = sigma_k^2 dt.
SpectralField sample_increment(const NoiseSpectrum& s, double dt, const RngStream& rng, std::uint64_t step);
/// Same as above with normals already drawn.
SpectralField scale_increment(const NoiseSpectrum& s, double dt, const SpectralField& normals);

/// Sum of `factor` consecutive increments of length fine_dt, namely fine steps
/// coarse_step * factor, ..., coarse_step * factor + factor - 1. Refining the time step
/// with the same RNG stream therefore keeps the Brownian path fixed.
SpectralField aggregated_increment(const NoiseSpectrum& s, double fine_dt, std::uint64_t factor, const RngStream& rng,
                                   std::uint64_t coarse_step);

}  // namespace scbf
