#include "scbf/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>

#include "scbf/error.hpp"

namespace scbf {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_smooth(int m) {
  for (int p : {2, 3, 5})
    while (m % p == 0) m /= p;
  return m == 1;
}

void require_same(const SpectralField& a, const SpectralField& b) {
  if (a.truncation() != b.truncation())
    throw ConfigError("mismatched truncations: " + std::to_string(a.truncation()) + " vs " +
                      std::to_string(b.truncation()));
}

}  // namespace

double WaveVector::magnitude() const { return std::sqrt(lambda()); }

std::vector<WaveVector> retained_modes(int truncation) {
  std::vector<WaveVector> out;
  out.reserve(static_cast<std::size_t>(2 * truncation + 1) * (2 * truncation + 1) - 1);
  for (int k1 = -truncation; k1 <= truncation; ++k1)
    for (int k2 = -truncation; k2 <= truncation; ++k2)
      if (k1 != 0 || k2 != 0) out.push_back({k1, k2});
  return out;
}

SpectralField::SpectralField(int truncation) : n_(truncation) {
  if (truncation < 1) throw ConfigError("truncation must be at least 1");
  coeffs_.assign(static_cast<std::size_t>(2 * n_ + 1) * (2 * n_ + 1), Complex{});
}

void SpectralField::set_mode(WaveVector k, Complex value) {
  if (k.k1 == 0 && k.k2 == 0) throw ConfigError("the mean mode is not part of the field");
  if (std::abs(k.k1) > n_ || std::abs(k.k2) > n_)
    throw ConfigError("wavevector outside truncation");
  coeffs_[index(k.k1, k.k2)] = value;
  coeffs_[index(-k.k1, -k.k2)] = std::conj(value);
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same(*this, other);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

double SpectralField::hermitian_defect() const {
  double worst = 0.0;
  for (int k1 = -n_; k1 <= n_; ++k1)
    for (int k2 = -n_; k2 <= n_; ++k2)
      worst = std::max(worst, std::abs((*this)(-k1, -k2) - std::conj((*this)(k1, k2))));
  return worst;
}

bool SpectralField::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }
SpectralField operator*(SpectralField a, double s) { return a *= s; }

double inner(const SpectralField& u, const SpectralField& v) {
  require_same(u, v);
  auto a = u.coefficients();
  auto b = v.coefficients();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

double inner_powers(const SpectralField& u, double a, const SpectralField& v, double b) {
  require_same(u, v);
  const int n = u.truncation();
  double s = 0.0;
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double lam = WaveVector{k1, k2}.lambda();
      const Complex x = u(k1, k2), y = v(k1, k2);
      s += std::pow(lam, a + b) * (x.real() * y.real() + x.imag() * y.imag());
    }
  return s;
}

SpectralField apply_fractional_power(const SpectralField& u, double alpha) {
  SpectralField out(u.truncation());
  const int n = u.truncation();
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      out(k1, k2) = std::pow(WaveVector{k1, k2}.lambda(), alpha) * u(k1, k2);
    }
  return out;
}

double sobolev_norm(const SpectralField& u, double alpha) {
  return std::sqrt(std::max(0.0, inner_powers(u, alpha, u, alpha)));
}

SpectralField heat_semigroup(const SpectralField& u, double t, double scale) {
  SpectralField out(u.truncation());
  const int n = u.truncation();
  for (int k1 = -n; k1 <= n; ++k1)
    for (int k2 = -n; k2 <= n; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      out(k1, k2) = std::exp(-t * scale * WaveVector{k1, k2}.lambda()) * u(k1, k2);
    }
  return out;
}

double PhysicalField::coordinate(int j) const {
  return 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(grid_size);
}

int dealiased_grid_size(int truncation, int degree) {
  if (truncation < 1 || degree < 1) throw ConfigError("truncation and degree must be positive");
  int m = (degree + 1) * truncation + 1;
  while (!is_smooth(m)) ++m;
  return m;
}

int default_grid_size(int truncation) { return dealiased_grid_size(truncation, 3); }

struct SpectralGrid::Plans {
  fftw_plan c2r = nullptr;
  fftw_plan r2c = nullptr;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_complex* spec2 = nullptr;
};

SpectralGrid::SpectralGrid(int truncation, int grid_size)
    : n_(truncation), m_(grid_size), half_(grid_size / 2 + 1), plans_(std::make_unique<Plans>()) {
  if (truncation < 1) throw ConfigError("truncation must be at least 1");
  if (grid_size < 3 * truncation + 1)
    throw ConfigError("grid size " + std::to_string(grid_size) + " not compatible with truncation " +
                      std::to_string(truncation) + " (need at least " + std::to_string(3 * truncation + 1) +
                      ")");
  const std::size_t nreal = points();
  const std::size_t nspec = static_cast<std::size_t>(m_) * half_;
  plans_->real = fftw_alloc_real(nreal);
  plans_->spec = fftw_alloc_complex(nspec);
  plans_->spec2 = fftw_alloc_complex(nspec);
  std::lock_guard lock(planner_mutex());
  // FFTW_ESTIMATE keeps plan selection independent of timing, hence bitwise reproducible.
  plans_->c2r = fftw_plan_dft_c2r_2d(m_, m_, plans_->spec, plans_->real, FFTW_ESTIMATE);
  plans_->r2c = fftw_plan_dft_r2c_2d(m_, m_, plans_->real, plans_->spec, FFTW_ESTIMATE);
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plans_->c2r);
  fftw_destroy_plan(plans_->r2c);
  fftw_free(plans_->real);
  fftw_free(plans_->spec);
  fftw_free(plans_->spec2);
}

SpectralGrid& SpectralGrid::cached(int truncation, int grid_size) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<SpectralGrid>> cache;
  auto& slot = cache[{truncation, grid_size}];
  if (!slot) slot = std::make_unique<SpectralGrid>(truncation, grid_size);
  return *slot;
}

std::size_t SpectralGrid::half_index(int k1, int k2) const {
  const int row = k1 < 0 ? k1 + m_ : k1;
  return static_cast<std::size_t>(row) * half_ + static_cast<std::size_t>(k2);
}

void SpectralGrid::inverse(std::span<double> out) {
  fftw_execute_dft_c2r(plans_->c2r, plans_->spec, plans_->real);
  std::memcpy(out.data(), plans_->real, points() * sizeof(double));
}

void SpectralGrid::forward(std::span<const double> in) {
  std::memcpy(plans_->real, in.data(), points() * sizeof(double));
  fftw_execute_dft_r2c(plans_->r2c, plans_->real, plans_->spec);
}

void SpectralGrid::synthesize(const SpectralField& u, int component, int deriv, std::span<double> out) {
  if (u.truncation() != n_) throw ConfigError("field truncation does not match grid");
  if (out.size() != points()) throw ConfigError("output buffer has wrong size");
  auto* spec = reinterpret_cast<Complex*>(plans_->spec);
  std::fill(spec, spec + static_cast<std::size_t>(m_) * half_, Complex{});
  for (int k1 = -n_; k1 <= n_; ++k1)
    for (int k2 = 0; k2 <= n_; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double mag = WaveVector{k1, k2}.magnitude();
      // b(k) = i (-k2, k1) / |k|
      Complex b = component == 0 ? Complex(0.0, -k2 / mag) : Complex(0.0, k1 / mag);
      if (deriv == 0) b *= Complex(0.0, k1);
      else if (deriv == 1) b *= Complex(0.0, k2);
      spec[half_index(k1, k2)] = b * u(k1, k2);
    }
  inverse(out);
}

void SpectralGrid::vorticity(const SpectralField& u, std::span<double> out) {
  if (u.truncation() != n_) throw ConfigError("field truncation does not match grid");
  auto* spec = reinterpret_cast<Complex*>(plans_->spec);
  std::fill(spec, spec + static_cast<std::size_t>(m_) * half_, Complex{});
  // d1 u2 - d2 u1 = (i k1)(i k1/|k|) c - (i k2)(-i k2/|k|) c = -|k| c
  for (int k1 = -n_; k1 <= n_; ++k1)
    for (int k2 = 0; k2 <= n_; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      spec[half_index(k1, k2)] = -WaveVector{k1, k2}.magnitude() * u(k1, k2);
    }
  inverse(out);
}

SpectralField SpectralGrid::project(std::span<const double> g1, std::span<const double> g2) {
  if (g1.size() != points() || g2.size() != points()) throw ConfigError("grid field has wrong size");
  const double scale = 1.0 / static_cast<double>(points());
  std::memcpy(plans_->real, g1.data(), points() * sizeof(double));
  fftw_execute_dft_r2c(plans_->r2c, plans_->real, plans_->spec2);
  forward(g2);
  const auto* h1 = reinterpret_cast<const Complex*>(plans_->spec2);
  const auto* h2 = reinterpret_cast<const Complex*>(plans_->spec);
  SpectralField out(n_);
  for (int k1 = -n_; k1 <= n_; ++k1)
    for (int k2 = 0; k2 <= n_; ++k2) {
      if (k2 == 0 && k1 <= 0) continue;
      const double mag = WaveVector{k1, k2}.magnitude();
      const std::size_t h = half_index(k1, k2);
      // conj(b(k)) . g_hat
      const Complex c = (Complex(0.0, k2 / mag) * h1[h] + Complex(0.0, -k1 / mag) * h2[h]) * scale;
      out(k1, k2) = c;
      out(-k1, -k2) = std::conj(c);
    }
  return out;
}

PhysicalField SpectralGrid::to_physical(const SpectralField& u) {
  PhysicalField p(m_);
  synthesize(u, 0, -1, p.u1);
  synthesize(u, 1, -1, p.u2);
  return p;
}

SpectralField SpectralGrid::to_spectral(const PhysicalField& v) {
  if (v.grid_size != m_) throw ConfigError("grid size not compatible with this transform");
  return project(v.u1, v.u2);
}

SpectralField to_spectral(const PhysicalField& v, int truncation) {
  return SpectralGrid::cached(truncation, v.grid_size).to_spectral(v);
}

SpectralField project_divergence_free(const PhysicalField& v, int truncation) {
  return to_spectral(v, truncation);
}

double lp_norm_pow(const PhysicalField& u, double p) {
  double s = 0.0;
  const std::size_t n = u.size();
  if (p == 2.0) {
    for (std::size_t i = 0; i < n; ++i) s += u.u1[i] * u.u1[i] + u.u2[i] * u.u2[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) s += std::pow(u.u1[i] * u.u1[i] + u.u2[i] * u.u2[i], 0.5 * p);
  }
  return s / static_cast<double>(n);
}

double lp_norm(const PhysicalField& u, double p) { return std::pow(lp_norm_pow(u, p), 1.0 / p); }

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::uint64_t bits = 0;
  std::memcpy(&bits, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw ConfigError("truncated snapshot");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void write_snapshot(std::ostream& out, const SpectralField& u) {
  const auto modes = retained_modes(u.truncation());
  out.write("SCBF", 4);
  put_le<std::uint32_t>(out, kSnapshotVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(u.truncation()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(modes.size()));
  for (auto k : modes) {
    put_le<std::int32_t>(out, k.k1);
    put_le<std::int32_t>(out, k.k2);
    put_le<double>(out, u[k].real());
    put_le<double>(out, u[k].imag());
  }
}

SpectralField read_snapshot(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SCBF", 4) != 0) throw ConfigError("not an SCBF snapshot");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion) throw ConfigError("unsupported snapshot version " + std::to_string(version));
  const auto n = static_cast<int>(get_le<std::uint32_t>(in));
  const auto count = get_le<std::uint32_t>(in);
  SpectralField u(n);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto k1 = get_le<std::int32_t>(in);
    const auto k2 = get_le<std::int32_t>(in);
    const double re = get_le<double>(in);
    const double im = get_le<double>(in);
    if (std::abs(k1) > n || std::abs(k2) > n || (k1 == 0 && k2 == 0))
      throw ConfigError("snapshot record outside truncation");
    u(k1, k2) = Complex(re, im);
  }
  return u;
}

}  // namespace scbf
