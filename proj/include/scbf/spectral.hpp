#pragma once

// Fourier representation of divergence-free velocity fields on the 2*pi-periodic torus.
//
// A field is stored as one complex amplitude per wavevector k = (k1, k2) with
// |k1|, |k2| <= N and k != 0. The amplitude multiplies the complex unit vector
// b(k) = i (-k2, k1) / |k|, so
//
//     u(x) = sum_k c_k b(k) exp(i k.x),
//
// which is divergence-free by construction and real-valued iff c_{-k} = conj(c_k).
// The basis is orthonormal for the normalized inner product
// (u, v) = (2 pi)^-2 \int u.v dx, hence ||u||_H^2 = sum_k |c_k|^2.
// Eigenvalues of the Stokes operator are lambda_k = |k|^2, so lambda_1 = 1.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace scbf {

using Complex = std::complex<double>;

struct WaveVector {
  int k1 = 0;
  int k2 = 0;

  double lambda() const { return static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2; }
  double magnitude() const;
  bool operator==(const WaveVector&) const = default;
};

/// All retained wavevectors for truncation N, in storage order.
std::vector<WaveVector> retained_modes(int truncation);

class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int truncation);

  int truncation() const { return n_; }
  bool empty() const { return coeffs_.empty(); }

  Complex operator()(int k1, int k2) const { return coeffs_[index(k1, k2)]; }
  Complex& operator()(int k1, int k2) { return coeffs_[index(k1, k2)]; }
  Complex operator[](WaveVector k) const { return (*this)(k.k1, k.k2); }

  /// Sets the amplitude of k and the conjugate amplitude of -k.
  void set_mode(WaveVector k, Complex value);

  std::span<Complex> coefficients() { return coeffs_; }
  std::span<const Complex> coefficients() const { return coeffs_; }

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

  /// Largest |c(-k) - conj(c(k))| over retained modes.
  double hermitian_defect() const;
  bool all_finite() const;

  std::size_t index(int k1, int k2) const {
    return static_cast<std::size_t>(k1 + n_) * static_cast<std::size_t>(2 * n_ + 1) +
           static_cast<std::size_t>(k2 + n_);
  }

 private:
  int n_ = 0;
  std::vector<Complex> coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);
SpectralField operator*(SpectralField a, double s);

/// Real inner product (u, v)_H.
double inner(const SpectralField& u, const SpectralField& v);
/// (A^a u, A^b v)_H without forming either power.
double inner_powers(const SpectralField& u, double a, const SpectralField& v, double b);

/// Multiplies every coefficient by lambda_k^alpha.
SpectralField apply_fractional_power(const SpectralField& u, double alpha);
/// ||A^alpha u||_H.
double sobolev_norm(const SpectralField& u, double alpha);
/// Applies exp(-t * scale * A) mode by mode.
SpectralField heat_semigroup(const SpectralField& u, double t, double scale = 1.0);

/// Velocity samples on an M x M grid, x_j = 2 pi j / M. Index (i1, i2) maps to
/// i1 * M + i2 with i1 along the first coordinate.
struct PhysicalField {
  int grid_size = 0;
  std::vector<double> u1;
  std::vector<double> u2;

  PhysicalField() = default;
  explicit PhysicalField(int m)
      : grid_size(m), u1(static_cast<std::size_t>(m) * m, 0.0), u2(static_cast<std::size_t>(m) * m, 0.0) {}

  std::size_t size() const { return u1.size(); }
  double coordinate(int j) const;
};

/// Smallest 2,3,5-smooth grid size that makes products of `degree` band-N fields
/// alias-free after truncation back to N, i.e. M >= (degree + 1) N + 1.
int dealiased_grid_size(int truncation, int degree);
/// Grid used when none is requested: alias-free up to cubic products.
int default_grid_size(int truncation);

/// FFT workspace for one (N, M) pair. Not shareable between threads; use
/// `SpectralGrid::cached` for a thread-local instance.
class SpectralGrid {
 public:
  SpectralGrid(int truncation, int grid_size);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  static SpectralGrid& cached(int truncation, int grid_size);
  static SpectralGrid& cached(int truncation) { return cached(truncation, default_grid_size(truncation)); }

  int truncation() const { return n_; }
  int grid_size() const { return m_; }
  std::size_t points() const { return static_cast<std::size_t>(m_) * m_; }

  PhysicalField to_physical(const SpectralField& u);
  /// Leray projection of a grid field followed by truncation to |k_i| <= N.
  SpectralField to_spectral(const PhysicalField& v);

  /// Grid samples of `component` (0 or 1) of d/dx_{deriv} u, deriv = -1 means no derivative.
  void synthesize(const SpectralField& u, int component, int deriv, std::span<double> out);
  /// Scalar vorticity d1 u2 - d2 u1 on the grid.
  void vorticity(const SpectralField& u, std::span<double> out);
  /// Projects the vector field (g1, g2) onto divergence-free modes.
  SpectralField project(std::span<const double> g1, std::span<const double> g2);

 private:
  void inverse(std::span<double> out);
  void forward(std::span<const double> in);
  std::size_t half_index(int k1, int k2) const;

  int n_;
  int m_;
  int half_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

inline PhysicalField to_physical(const SpectralField& u) {
  return SpectralGrid::cached(u.truncation()).to_physical(u);
}
inline PhysicalField to_physical(const SpectralField& u, int grid_size) {
  return SpectralGrid::cached(u.truncation(), grid_size).to_physical(u);
}
SpectralField to_spectral(const PhysicalField& v, int truncation);
SpectralField project_divergence_free(const PhysicalField& v, int truncation);

/// Mean over the grid of |u|^p, i.e. ||u||_{L^p}^p for the normalized measure.
double lp_norm_pow(const PhysicalField& u, double p);
double lp_norm(const PhysicalField& u, double p);

// Binary snapshot: "SCBF", version, N, count, then (k1, k2, re, im) records, little-endian.
inline constexpr std::uint32_t kSnapshotVersion = 1;
void write_snapshot(std::ostream& out, const SpectralField& u);
SpectralField read_snapshot(std::istream& in);

}  // namespace scbf
