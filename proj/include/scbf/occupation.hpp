#pragma once

// Occupation measures L_t = (1/t) int_0^t delta_{u(s)} ds of a sampled path, as time
// averages of observables plus a coarse histogram, and hitting times of the ball
// K = {||A^{1/2} x|| <= M}.
//
// Accumulation is sample-and-hold: the state at the start of a step carries the
// whole step's weight. This keeps the histogram an exact probability measure; the
// averages differ from the trapezoid rule by dt (psi(u_0) - psi(u_n)) / (2t).

#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "scbf/noise.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

struct Observable {
  std::string name;
  std::function<double(const SpectralField&)> eval;
};

/// ||u||^2 and ||A^{1/2} u||^2.
std::vector<Observable> default_observables();

/// Energies of the shells s - 1/2 <= |k| < s + 1/2, s = 1..count.
std::vector<double> shell_energies(const SpectralField& u, int count);

struct HistogramSpec {
  int shells = 4;
  int bins = 32;
  double log10_min = -8.0;  // energies below land in bin 0
  double log10_max = 2.0;   // energies above land in the last bin
};

/// Bin indices of u, one per shell.
std::vector<int> histogram_key(const SpectralField& u, const HistogramSpec& spec);

using Histogram = std::map<std::vector<int>, double>;

/// Sum of |p(b) - q(b)| over the union of bins of two histograms of total mass p_mass, q_mass.
double histogram_variation(const Histogram& p, double p_mass, const Histogram& q, double q_mass);

struct HittingTimes {
  double tau = std::numeric_limits<double>::quiet_NaN();   // first t >= 0 with u_t in K
  double tau1 = std::numeric_limits<double>::quiet_NaN();  // first t >= 1 with u_t in K
  bool censored = true;
  bool censored1 = true;
  double horizon = 0.0;
};

/// Scans a path sampled every dt.
HittingTimes hitting_time(const std::vector<SpectralField>& states, double dt, double radius);

class OccupationAccumulator {
 public:
  /// A negative radius disables hitting records.
  explicit OccupationAccumulator(std::vector<Observable> observables = default_observables(),
                                 HistogramSpec spec = {}, double radius = -1.0);

  /// Weight dt on the state u at the current elapsed time.
  void accumulate(const SpectralField& u, double dt);
  /// Last state of the path; only updates the hitting record.
  void finish(const SpectralField& u);

  /// Adds the sums of another accumulator and appends its hitting records.
  void merge(const OccupationAccumulator& other);

  double elapsed() const { return t_; }
  const std::vector<Observable>& observables() const { return observables_; }
  const std::vector<double>& integrals() const { return integrals_; }
  std::vector<double> averages() const;
  const Histogram& histogram() const { return histogram_; }
  double histogram_mass() const;
  const HistogramSpec& spec() const { return spec_; }
  /// One record per merged trajectory, in merge order.
  const std::vector<HittingTimes>& hitting() const { return hits_; }

  void write_averages_csv(std::ostream& out) const;
  void write_histogram_csv(std::ostream& out) const;

 private:
  void check_hit(const SpectralField& u);

  std::vector<Observable> observables_;
  HistogramSpec spec_;
  double radius_;
  double t_ = 0.0;
  std::vector<double> integrals_;
  Histogram histogram_;
  std::vector<HittingTimes> hits_;
};

struct HittingMoment {
  double lambda = 0.0;
  double estimate = 0.0;   // mean of e^{lambda tau} over uncensored paths
  double std_error = 0.0;
  std::size_t used = 0;
  std::size_t censored = 0;
};

/// E[e^{lambda tau_K}] (or tau_K^{(1)} with `shifted`). Censored paths are counted, never imputed.
HittingMoment exp_hitting_moment(const std::vector<HittingTimes>& hits, double lambda, bool shifted);

/// C = mu M^2 / 2 - Tr(Q) - ||f||^2 / (mu lambda_1 - 2 ||Q|| lambda0) and the margin
/// lambda0 C - lambda, which should be at least 1.
struct HittingCondition {
  double radius = 0.0;
  double constant = 0.0;
  double margin = 0.0;
  bool satisfied = false;
};

HittingCondition hitting_condition(double radius, double lambda, double lambda0, double mu,
                                   const NoiseSpectrum& noise, const SpectralField& forcing);
/// The radius with lambda0 C - lambda = 1.
double default_hitting_radius(double lambda, double lambda0, double mu, const NoiseSpectrum& noise,
                              const SpectralField& forcing);

void write_hitting_json(std::ostream& out, const std::vector<HittingMoment>& moments, const HittingCondition& cond);

}  // namespace scbf
