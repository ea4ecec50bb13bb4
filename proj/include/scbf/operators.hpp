#pragma once

// Convective term B(u, v) = P((u.grad) v), damping C(u) = P(|u|^{r-1} u), its Gateaux
// derivative, and numerical checkers for the inequalities these operators satisfy.
//
// Every operator is evaluated pseudospectrally: samples on the grid, pointwise
// products, then projection and truncation back to |k_i| <= N. Each function has an
// overload taking an explicit SpectralGrid for hot loops; the others use the
// thread-local default grid for the field's truncation.

#include "scbf/spectral.hpp"

namespace scbf {

struct OperatorParams {
  double mu = 1.0;
  double beta = 1.0;
  int r = 3;

  void validate() const;
};

void validate_exponent(int r);
/// Throws unless products of degree r are alias-free on `grid`.
void require_headroom(const SpectralGrid& grid, int r);

SpectralField bilinear_B(const SpectralField& u, const SpectralField& v);
SpectralField bilinear_B(SpectralGrid& grid, const SpectralField& u, const SpectralField& v);
/// B(u, u) via the rotational form P(omega (-u2, u1)); cheaper than bilinear_B(u, u).
SpectralField convection_B(SpectralGrid& grid, const SpectralField& u);

SpectralField damping_C(const SpectralField& u, int r);
SpectralField damping_C(SpectralGrid& grid, const SpectralField& u, int r);

SpectralField gateaux_C_prime(const SpectralField& u, const SpectralField& v, int r);
SpectralField gateaux_C_prime(SpectralGrid& grid, const SpectralField& u, const SpectralField& v, int r);

/// B(u, u) + beta C(u) in one pass over the grid. Either term can be switched off.
/// If `lp_out` is given it receives ||u||_{L^{r+1}}^{r+1} from the same samples.
SpectralField nonlinear_drift(SpectralGrid& grid, const SpectralField& u, double beta, int r,
                              bool convection = true, bool damping = true, double* lp_out = nullptr);
/// B(u, w) + B(w, u) + beta C'(u) w, the derivative of nonlinear_drift at u in direction w.
SpectralField linearized_drift(SpectralGrid& grid, const SpectralField& u, const SpectralField& w,
                               double beta, int r, bool convection = true, bool damping = true);

/// <C(u) - C(v), u - v> - (||u|^{(r-1)/2}(u-v)||^2 + ||v|^{(r-1)/2}(u-v)||^2) / 2.
double monotonicity_gap(const SpectralField& u, const SpectralField& v, int r);
/// 2^{r-2}(||u|^{(r-1)/2} w||^2 + ||v|^{(r-1)/2} w||^2) - ||w||_{L^{r+1}}^{r+1} with w = u - v.
double norm_comparison_margin(const SpectralField& u, const SpectralField& v, int r);
/// r (||u|| + ||v||)^{r-1} ||u - v|| - ||c(u) - c(v)||_{L^{(r+1)/r}} for the pointwise map
/// c(u) = |u|^{r-1} u, all other norms in L^{r+1}.
double local_lipschitz_margin(const SpectralField& u, const SpectralField& v, int r);

/// <G(u) - G(v), u - v> + 27/(32 mu^3) Nball^4 ||u - v||^2 with G = mu A + B + beta C.
/// Throws PreconditionError if ||v||_{L^4} > Nball.
double local_monotonicity_residual(const SpectralField& u, const SpectralField& v, const OperatorParams& p,
                                   double nball);

}  // namespace scbf
