#pragma once

// Ensembles of independent trajectories, the Monte Carlo check of the exponential
// moment estimates, and the operator identity suite.
//
// Trajectory i draws its noise from RngStream{seed, i} and its initial state from a
// separate stream, so results depend only on (seed, i) and never on scheduling.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scbf/config.hpp"
#include "scbf/dynamics.hpp"
#include "scbf/occupation.hpp"

namespace scbf {

struct InitialLaw {
  enum class Kind { dirac, gaussian };
  Kind kind = Kind::dirac;
  SpectralField point;   // the Dirac mass; empty means the origin
  int shells = 2;        // Gaussian support: shells 1..shells
  double std_dev = 0.1;  // per complex mode
};

/// The class M_{lambda0,R} = {nu : int e^{lambda0 ||x||^2} nu(dx) <= R}.
struct EnsembleSpec {
  std::size_t n_traj = 100;
  double horizon = 1.0;
  InitialLaw law;
  double lambda0 = 0.0;
  double R = 2.0;
  std::vector<std::string> observables = {"energy", "enstrophy"};
  double hitting_radius = -1.0;  // negative: no hitting records
};

/// Draws trajectory i's initial state. Gaussian draws with e^{lambda0 ||x||^2} > R are
/// scaled back onto the boundary of that ball.
SpectralField sample_initial(const EnsembleSpec& spec, int truncation, std::uint64_t seed, std::uint64_t index);

/// Throws ConfigError unless lambda0 lies in (0, threshold) and the initial law is in
/// M_{lambda0,R}: for a Dirac mass e^{lambda0 ||x||^2} <= R, otherwise the sample mean over
/// the ensemble's draws. Returns the sample mean of e^{lambda0 ||x||^2}.
double check_initial_law(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed);

std::vector<Observable> named_observables(const std::vector<std::string>& names, int r, int grid_size);

/// ensemble.* keys; `cfg` supplies truncation, noise and mu.
EnsembleSpec ensemble_spec_from(const Config& c, const SimConfig& cfg);

struct PathStats {
  double initial_energy = 0.0;
  double final_energy = 0.0;
  double dissipation = 0.0;  // int_0^t ||A^{1/2} u||^2
  double damping = 0.0;      // int_0^t ||u||_{L^{r+1}}^{r+1}
  double mean_energy = 0.0;  // (1/t) int_0^t ||u||^2
};

struct EnsembleResult {
  OccupationAccumulator occupation;
  std::vector<PathStats> paths;  // in trajectory order
};

/// One trajectory of the ensemble.
PathStats run_trajectory(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed, std::uint64_t index,
                         OccupationAccumulator* occupation = nullptr);

/// All trajectories, in parallel; the merge runs in index order afterwards.
EnsembleResult run_ensemble(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed);

void write_paths_csv(std::ostream& out, const std::vector<PathStats>& paths);

/// Pooled Monte Carlo estimate of E[e^{a_i}] from the exponents a_i.
struct ExpEstimate {
  double log_estimate = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double top_share = 0.0;  // fraction of the total carried by the largest 1% of samples
  bool heavy_tail = false;  // top_share > 1/2
};
ExpEstimate pooled_exp_mean(const std::vector<double>& exponents);

struct EstimateCheck {
  std::string name;
  ExpEstimate mc;
  double log_bound = 0.0;
  double bound = 0.0;
  bool pass = false;  // estimate - 3 std_error <= bound
  double margin = 0.0;  // bound - (estimate - 3 std_error)
};

struct ExponentialReport {
  double lambda0 = 0.0;
  double horizon = 0.0;
  double initial_moment = 0.0;  // sample mean of e^{lambda0 ||x||^2}
  std::vector<EstimateCheck> checks;  // joint, energy, dissipation, damping
  bool pass = false;
};

/// e^{t lambda0 (Tr Q + ||f||^2 / (mu lambda_1 - 2 ||Q|| lambda0))}, the growth factor of the bound.
double exponential_bound_factor(const SimConfig& cfg, double lambda0, double t);

ExponentialReport verify_exponential_estimate(const EnsembleSpec& spec, const SimConfig& cfg, std::uint64_t seed);
ExponentialReport verify_exponential_estimate(const EnsembleSpec& spec, const SimConfig& cfg,
                                              const std::vector<PathStats>& paths, std::uint64_t seed);

void write_exponential_json(std::ostream& out, const ExponentialReport& r);
void write_exponential_csv(std::ostream& out, const ExponentialReport& r);

struct IdentityCheck {
  std::string name;
  double worst = 0.0;      // the worst normalized value seen
  double tolerance = 0.0;  // pass when worst <= tolerance
  bool pass = false;
};

struct IdentitySuiteOptions {
  int truncation = 16;
  int samples = 50;
  std::uint64_t seed = 1;
};

/// Trilinear antisymmetry, the damping identity, monotonicity, the norm comparison,
/// local monotonicity and positivity of C', each as a worst case over random fields.
std::vector<IdentityCheck> run_identity_suite(const IdentitySuiteOptions& opts);

void write_identity_json(std::ostream& out, const std::vector<IdentityCheck>& checks);

}  // namespace scbf
