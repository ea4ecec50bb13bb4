#pragma once

// Steering construction from x to y: a bridge path u_bar, the control system for
// v_bar driven by u_bar, the extracted driving path z_bar = u_bar - v_bar, and a
// replay of the pathwise v-equation with that z_bar.

#include <iosfwd>
#include <vector>

#include "scbf/dynamics.hpp"

namespace scbf {

/// u_bar sampled at t_n = n dt: exp(-tA)x on [0, t0], exp(-(T-t)A)y on [t1, T], and the
/// straight line between the two branch values on (t0, t1).
struct BridgePath {
  double dt = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double horizon = 0.0;
  std::vector<SpectralField> states;
};

BridgePath build_bridge_path(const SpectralField& x, const SpectralField& y, double horizon, double t0, double t1,
                             double dt);

/// Solves dv/dt + mu A v = -B(u_bar) - beta C(u_bar) + f from v(0) = u_bar(0). The
/// linear part is backward Euler; the forcing is averaged over both ends of each step.
std::vector<SpectralField> solve_control_v(const BridgePath& ubar, const SimConfig& cfg);

struct ReplayReport {
  double dt = 0.0;
  double endpoint_error = 0.0;   // ||(v + z_bar)(T) - y||_{D(A^alpha)}
  double path_sup_error = 0.0;   // sup_t ||A^alpha (v + z_bar - u_bar)||
  double path_lq_error = 0.0;    // L^{4/(1-2 alpha)}(0, T; D(A^{1/4 + alpha/2})) norm of the same
  double initial_z_norm = 0.0;   // ||z_bar(0)||, zero by construction
};

/// z_bar = u_bar - v_bar, then step_v from v(0) = x driven by z_bar.
ReplayReport extract_and_replay(const BridgePath& ubar, const std::vector<SpectralField>& vbar, const SimConfig& cfg,
                                double alpha);

/// Trapezoid quadrature of int_0^T ||A^{alpha + 1/2} exp(-tA) x||^2 dt.
double semigroup_budget_quadrature(const SpectralField& x, double alpha, double horizon, double dt);
/// The same integral in closed form, sum_k lambda_k^{2 alpha} (1 - exp(-2 lambda_k T)) |x_k|^2 / 2.
double semigroup_budget_exact(const SpectralField& x, double alpha, double horizon);

void write_replay_csv_header(std::ostream& out);
void write_replay_csv_row(std::ostream& out, const ReplayReport& r);

}  // namespace scbf
