#pragma once

// Exact large-deviation quantities for finite discrete-time Markov chains: the
// Donsker-Varadhan rate of an empirical distribution, the scaled cumulant generating
// function, exponential moments of hitting times by linear algebra, and Monte Carlo
// counterparts to compare against.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace scbf {

using ProbVector = Eigen::VectorXd;

struct FiniteChain {
  Eigen::MatrixXd P;
  std::optional<ProbVector> pi;

  explicit FiniteChain(Eigen::MatrixXd transition, std::optional<ProbVector> invariant = std::nullopt);
  int size() const { return static_cast<int>(P.rows()); }
};

/// Throws ConfigError unless P is square, nonnegative and row-stochastic to 1e-12.
void validate_chain(const Eigen::MatrixXd& P);
bool is_irreducible(const FiniteChain& chain);
bool is_aperiodic(const FiniteChain& chain);
/// pi P = pi, sum pi = 1, by a direct linear solve.
ProbVector invariant_distribution(const FiniteChain& chain);

/// Throws ConfigError unless nu is a probability vector of the right size to 1e-12.
void validate_prob(const ProbVector& nu, int n);

/// I(nu) = sup_{u > 0} sum_x nu(x) log(u(x) / (P u)(x)), maximized over w = log u with
/// w(0) = 0 by regularized Newton steps and a backtracking line search.
struct DvResult {
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
};
DvResult dv_rate_detail(const ProbVector& nu, const FiniteChain& chain, double tolerance = 1e-10);
double dv_rate(const ProbVector& nu, const FiniteChain& chain);

/// Lambda(V) = log rho(P diag(e^V)).
double scgf(const FiniteChain& chain, const Eigen::VectorXd& V);
/// Lambda(V) and sup_theta (theta m - Lambda(theta V)); the rate is +infinity when m
/// lies outside [min V, max V].
struct ScgfResult {
  double scgf = 0.0;
  double rate = 0.0;
  double theta = 0.0;  // maximizer
};
ScgfResult scgf_and_legendre(const FiniteChain& chain, const Eigen::VectorXd& V, double mean);

/// E^x[e^{lambda tau_K}], tau_K = inf{n >= 0 : X_n in K}, or a divergence flag when
/// e^lambda rho(P restricted to the complement of K) >= 1.
struct HittingMomentExact {
  double value = 0.0;
  bool divergent = false;
  double spectral_radius = 0.0;  // of P restricted to the complement of K
};
HittingMomentExact exp_hitting_moment_exact(const FiniteChain& chain, const std::vector<int>& K, double lambda,
                                            int x);
/// The largest lambda with finite moments: -log rho(P restricted to the complement of K).
double divergence_threshold(const FiniteChain& chain, const std::vector<int>& K);

/// Sum |nu1 - nu2|, the sup over |psi| <= 1 of |sum psi (nu1 - nu2)|.
double total_variation(const ProbVector& nu1, const ProbVector& nu2);

/// Next state from x given a uniform in (0, 1).
int chain_step(const FiniteChain& chain, int x, double uniform);

/// Monte Carlo tau_K samples, one run per RNG stream (seed, run). Runs that have not hit
/// within max_steps are returned as -1.
std::vector<long> sample_hitting_times(const FiniteChain& chain, const std::vector<int>& K, int x, std::size_t runs,
                                       std::uint64_t seed, long max_steps);

struct TailFit {
  double threshold = 0.0;  // -slope of log P(tau > t)
  double slope = 0.0;
  long t_min = 0;
  long t_max = 0;
};
/// Least-squares slope of log P(tau > t) over t in [t_min, t_max].
TailFit fit_hitting_tail(const std::vector<long>& taus, long t_min, long t_max);

/// Lattice points of the simplex with spacing 1/resolution.
std::vector<ProbVector> simplex_grid(int n, int resolution);

struct LdpTarget {
  std::function<bool(const ProbVector&)> contains;
};

/// Empirical measure of X_1, ..., X_T started from `start`.
ProbVector occupation_vector(const FiniteChain& chain, int start, long T, std::uint64_t seed, std::uint64_t run);

struct LdpReport {
  long T = 0;
  std::size_t runs = 0;
  std::size_t hits = 0;
  double fraction = 0.0;
  double empirical_rate = 0.0;  // -(1/T) log fraction; a lower bound only when hits == 0
  bool zero_hits = false;
  double grid_inf_rate = 0.0;
  ProbVector argmin;
  double ratio = 0.0;  // empirical_rate / grid_inf_rate
};
LdpReport empirical_ldp_check(const FiniteChain& chain, const LdpTarget& target, long T, std::size_t runs,
                              std::uint64_t seed, int resolution = 40, int start = 0);

/// Rows of a comma separated matrix; a non-numeric first line is treated as a header.
FiniteChain read_chain_csv(std::istream& in);
void write_ldp_json(std::ostream& out, const LdpReport& r);

}  // namespace scbf
