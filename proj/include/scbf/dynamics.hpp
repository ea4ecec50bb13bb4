#pragma once

// Time stepping for the Galerkin system
//
//     du + (mu A u + Theta_R(||A^a u||^2) [B(u) + beta C(u)]) dt = f dt + G dW,
//
// the Ornstein-Uhlenbeck part z, the pathwise equation for v = u - z, the first
// variation, and the Ito energy ledger.
//
// All schemes are implicit in A and explicit in the nonlinearity:
// (I + mu dt A) u_{n+1} = u_n + dt F(u_n) + G dW_n. The OU step is exact in law.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "scbf/noise.hpp"
#include "scbf/operators.hpp"
#include "scbf/spectral.hpp"

namespace scbf {

/// Equal to 1 on [-R, R], 0 outside [-R-1, R+1], quintic smoothstep in between.
struct CutoffFunction {
  double radius = std::numeric_limits<double>::infinity();

  double value(double x) const;
  double derivative(double x) const;
  bool active() const { return std::isfinite(radius); }
};

struct SimConfig {
  OperatorParams op;
  NoiseSpectrum noise;
  SpectralField forcing;
  SpectralField initial;
  int truncation = 32;
  int grid_size = 0;  // 0 selects default_grid_size(truncation)
  double dt = 1e-3;
  double horizon = 1.0;
  CutoffFunction cutoff;
  double alpha_cut = std::numeric_limits<double>::quiet_NaN();  // NaN means noise.alpha
  bool convection = true;
  bool damping = true;

  /// A config with zero noise, forcing and initial state at truncation n.
  static SimConfig quiet(int n, const OperatorParams& op = {});

  void validate() const;
  int grid() const { return grid_size > 0 ? grid_size : default_grid_size(truncation); }
  double cut_exponent() const { return std::isnan(alpha_cut) ? noise.alpha : alpha_cut; }
  std::size_t steps() const;
};

/// Exact OU update driven by standard normals xi (E|xi_k|^2 = 1).
SpectralField step_ou(const SpectralField& z, const SimConfig& cfg, const SpectralField& normals);
SpectralField step_ou(const SpectralField& z, const SimConfig& cfg, const RngStream& rng, std::uint64_t step);

/// One step of the full system with a given noise increment G dW.
SpectralField step_scbf(const SpectralField& u, const SimConfig& cfg, const SpectralField& increment,
                        std::uint64_t step = 0, double* lp_out = nullptr);
SpectralField step_scbf(const SpectralField& u, const SimConfig& cfg, const RngStream& rng, std::uint64_t step);

/// One step of dv/dt + mu A v + Theta [B(v + z) + beta C(v + z)] = f.
SpectralField step_v(const SpectralField& v, const SpectralField& z, const SimConfig& cfg, std::uint64_t step = 0);

/// Linearization of step_scbf at u applied to U.
SpectralField step_first_variation(const SpectralField& U, const SpectralField& u, const SimConfig& cfg,
                                   std::uint64_t step = 0);

/// Semi-implicit solve of (I + mu dt A) x = rhs.
SpectralField implicit_solve(const SpectralField& rhs, double mu_dt);

struct Observables {
  double t = 0.0;
  double energy = 0.0;     // ||u||^2
  double enstrophy = 0.0;  // ||A^{1/2} u||^2
  double lp = 0.0;         // ||u||_{L^{r+1}}^{r+1}
};

Observables observe(const SpectralField& u, double t, int r, int grid_size = 0);
void write_observables_header(std::ostream& out);
void write_observables_row(std::ostream& out, const Observables& o);

/// Supplies G dW for step n.
using IncrementSource = std::function<SpectralField(std::uint64_t)>;
IncrementSource default_increments(const SimConfig& cfg, const RngStream& rng);

/// Called before each step with (n, t_n, u_n, G dW_n, ||u_n||^{r+1}_{L^{r+1}}) and once at
/// the end with a null increment.
using StepObserver =
    std::function<void(std::uint64_t, double, const SpectralField&, const SpectralField*, double)>;

/// Integrates from cfg.initial to cfg.horizon and returns the final state.
SpectralField simulate(const SimConfig& cfg, const IncrementSource& increments, const StepObserver& observer = {});

/// A recorded path. `states` has steps + 1 entries; `increments` has steps.
struct Trajectory {
  double dt = 0.0;
  std::vector<SpectralField> states;
  std::vector<SpectralField> increments;
};
Trajectory record_trajectory(const SimConfig& cfg, const IncrementSource& increments);

struct EnergyBalance {
  double energy = 0.0;          // ||u(t)||^2
  double initial_energy = 0.0;  // ||x||^2
  double dissipation = 0.0;     // 2 mu int ||A^{1/2} u||^2
  double damping = 0.0;         // 2 beta int ||u||_{L^{r+1}}^{r+1}
  double forcing = 0.0;         // 2 int <f, u>
  double ito = 0.0;             // Tr(Q_N) t
  double martingale = 0.0;      // 2 int (G dW, u)
  double residual = 0.0;
};

/// Left-point accumulation of the Ito energy identity along a path. With a finite cut-off
/// the damping integrand carries the same Theta factor as the dynamics.
class EnergyLedger {
 public:
  explicit EnergyLedger(const SimConfig& cfg);
  void record(const SpectralField& u, const SpectralField& increment, double lp, double dt);
  EnergyBalance finish(const SpectralField& final_state) const;

 private:
  const SimConfig* cfg_;
  double trace_;
  double t_ = 0.0;
  EnergyBalance acc_;
};

EnergyBalance energy_ledger(const Trajectory& path, const SimConfig& cfg);

}  // namespace scbf
