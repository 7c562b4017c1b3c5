#pragma once

// Uniform periodic grid on [-L, L) with the unitary continuum Fourier
// convention
//
//     fhat(xi) = (2 pi)^{-1/2} \int e^{-i x xi} f(x) dx,
//
// realized on the grid with quadrature weight dx and node phases, so that
// band-limited, grid-supported functions have matching discrete and
// continuum transforms. Spectra are stored in FFT ordering: index k holds
// xi_k = k * pi / L for k < n/2 and (k - n) * pi / L otherwise, which puts
// the Nyquist mode at -pi/dx.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "displab/fft.hpp"

namespace displab {

using cplx = std::complex<double>;

inline constexpr int kMaxDerivativeOrder = 8;
inline constexpr int kMaxMomentOrder = 4;
inline constexpr double kContainmentRadius = 0.8;     // fraction of L
inline constexpr double kContainmentThreshold = 1e-8;  // mass fraction

class GridSpec {
public:
  std::size_t n_points() const { return n_; }
  double half_length() const { return half_length_; }
  double dx() const { return dx_; }
  // Frequency spacing pi / L.
  double dxi() const { return std::numbers::pi / half_length_; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> frequencies() const { return freqs_; }

  bool operator==(const GridSpec& o) const { return n_ == o.n_ && half_length_ == o.half_length_; }

private:
  friend std::shared_ptr<const GridSpec> make_grid(std::size_t, double);
  GridSpec(std::size_t n, double half_length) : n_(n), half_length_(half_length) {
    dx_ = 2.0 * half_length_ / static_cast<double>(n_);
    nodes_.resize(n_);
    freqs_.resize(n_);
    const auto sn = static_cast<std::ptrdiff_t>(n_);
    for (std::ptrdiff_t j = 0; j < sn; ++j) {
      nodes_[j] = -half_length_ + static_cast<double>(j) * dx_;
      const std::ptrdiff_t k = j < sn / 2 ? j : j - sn;
      freqs_[j] = static_cast<double>(k) * std::numbers::pi / half_length_;
    }
  }

  std::size_t n_;
  double half_length_;
  double dx_;
  std::vector<double> nodes_;
  std::vector<double> freqs_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

inline GridPtr make_grid(std::size_t n_points, double half_length) {
  if (n_points < 16 || (n_points & (n_points - 1)) != 0)
    throw std::invalid_argument("make_grid: n_points must be a power of two >= 16, got " +
                                std::to_string(n_points));
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw std::invalid_argument("make_grid: half_length must be positive and finite");
  return GridPtr(new GridSpec(n_points, half_length));
}

inline bool same_grid(const GridPtr& a, const GridPtr& b) {
  return a == b || (a && b && *a == *b);
}

namespace detail {

inline void require_finite(std::span<const cplx> v, const char* what) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw std::domain_error(std::string(what) + ": non-finite sample");
}

inline void require_grid(const GridPtr& g, std::size_t len, const char* what) {
  if (!g) throw std::invalid_argument(std::string(what) + ": null grid");
  if (len != g->n_points()) throw std::invalid_argument(std::string(what) + ": length does not match grid");
}

}  // namespace detail

// Samples of u(t, .) on a grid, valid at `time`.
class WaveField {
public:
  WaveField(GridPtr grid, std::vector<cplx> values, double time = 0.0)
      : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
    detail::require_grid(grid_, values_.size(), "WaveField");
    detail::require_finite(values_, "WaveField");
  }

  static WaveField zero(GridPtr grid, double time = 0.0) {
    const auto n = grid->n_points();
    return WaveField(std::move(grid), std::vector<cplx>(n), time);
  }

  template <class Fn>
  static WaveField sample(GridPtr grid, Fn&& fn, double time = 0.0) {
    std::vector<cplx> v(grid->n_points());
    auto x = grid->nodes();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = cplx(fn(x[j]));
    return WaveField(std::move(grid), std::move(v), time);
  }

  const GridPtr& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  double time() const { return time_; }
  std::size_t size() const { return values_.size(); }
  const cplx& operator[](std::size_t j) const { return values_[j]; }

  WaveField with_time(double t) const { return WaveField(grid_, values_, t); }

private:
  GridPtr grid_;
  std::vector<cplx> values_;
  double time_;
};

// Samples of fhat at the grid frequencies, FFT ordering.
class Spectrum {
public:
  Spectrum(GridPtr grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
    detail::require_grid(grid_, values_.size(), "Spectrum");
    detail::require_finite(values_, "Spectrum");
  }

  const GridPtr& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  const cplx& operator[](std::size_t k) const { return values_[k]; }

private:
  GridPtr grid_;
  std::vector<cplx> values_;
};

namespace detail {

// exp(i L xi_k) = (-1)^k for xi_k = k pi / L; exact sign, no round-off.
inline double node_phase(std::size_t k) { return (k & 1U) ? -1.0 : 1.0; }

// e^{i theta} rounded to the double pair whose modulus is closest to 1.
// Plain std::polar leaves a fixed modulus error per entry, and a multiplier
// table applied at every step turns that into a linear mass drift.
inline cplx unit_phase(double theta) {
  const long double th = theta;
  const double c0 = static_cast<double>(std::cos(th));
  const double s0 = static_cast<double>(std::sin(th));
  double best_c = c0, best_s = s0;
  long double best = std::abs(static_cast<long double>(c0) * c0 + static_cast<long double>(s0) * s0 - 1.0L);
  double c = c0;
  for (int i = 0; i < 2; ++i) c = std::nextafter(c, -2.0);
  for (int i = -2; i <= 2; ++i, c = std::nextafter(c, 2.0)) {
    double sv = s0;
    for (int j = 0; j < 2; ++j) sv = std::nextafter(sv, -2.0);
    for (int j = -2; j <= 2; ++j, sv = std::nextafter(sv, 2.0)) {
      const long double r = std::abs(static_cast<long double>(c) * c + static_cast<long double>(sv) * sv - 1.0L);
      if (r < best) {
        best = r;
        best_c = c;
        best_s = sv;
      }
    }
  }
  return {best_c, best_s};
}

// Raw-buffer transforms used by the propagators' inner loops.
inline void forward_raw(const GridSpec& g, std::span<const cplx> in, std::span<cplx> out) {
  FftPlanCache::instance().forward(in, out);
  const double scale = g.dx() / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= scale * node_phase(k);
}

inline void inverse_raw(const GridSpec& g, std::span<const cplx> in, std::span<cplx> out) {
  std::vector<cplx> tmp(in.begin(), in.end());
  for (std::size_t k = 0; k < tmp.size(); ++k) tmp[k] *= node_phase(k);
  FftPlanCache::instance().backward(tmp, out);
  const double scale = g.dxi() / std::sqrt(2.0 * std::numbers::pi);
  for (auto& z : out) z *= scale;
}

// Fourier multiplier applied in place to a raw field buffer (convention-free:
// the node phases and scale factors cancel).
template <class Mult>
inline void apply_multiplier_raw(const GridSpec& g, std::span<cplx> values, Mult&& mult) {
  const auto n = values.size();
  std::vector<cplx> spec(n);
  FftPlanCache::instance().forward(values, spec);
  auto xi = g.frequencies();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) spec[k] *= mult(xi[k]) * inv_n;
  FftPlanCache::instance().backward(spec, values);
}

}  // namespace detail

inline Spectrum forward_fourier(const WaveField& f) {
  std::vector<cplx> out(f.size());
  detail::forward_raw(*f.grid(), f.values(), out);
  return Spectrum(f.grid(), std::move(out));
}

inline WaveField inverse_fourier(const Spectrum& g, double time = 0.0) {
  std::vector<cplx> out(g.size());
  detail::inverse_raw(*g.grid(), g.values(), out);
  return WaveField(g.grid(), std::move(out), time);
}

// Multiplies the spectrum of f by mult(xi).
template <class Mult>
WaveField apply_fourier_multiplier(const WaveField& f, Mult&& mult) {
  std::vector<cplx> v(f.values().begin(), f.values().end());
  detail::apply_multiplier_raw(*f.grid(), v, std::forward<Mult>(mult));
  return WaveField(f.grid(), std::move(v), f.time());
}

// d^order/dx^order as the multiplier (i xi)^order. The Nyquist mode is kept
// (not zeroed) so that derivative orders compose exactly.
inline WaveField spectral_derivative(const WaveField& f, int order) {
  if (order < 0 || order > kMaxDerivativeOrder)
    throw std::invalid_argument("spectral_derivative: order must be in [0, 8], got " +
                                std::to_string(order));
  if (order == 0) return f;
  return apply_fourier_multiplier(f, [order](double xi) {
    cplx m(1.0, 0.0);
    const cplx ixi(0.0, xi);
    for (int i = 0; i < order; ++i) m *= ixi;
    return m;
  });
}

inline double l2_norm_squared(std::span<const cplx> v, double dx) {
  double acc = 0.0;
  for (const auto& z : v) acc += std::norm(z);
  return acc * dx;
}

inline double l2_norm(const WaveField& f) { return std::sqrt(l2_norm_squared(f.values(), f.grid()->dx())); }

// Discrete L2 norm of a spectrum, weight pi / L.
inline double l2_norm(const Spectrum& g) { return std::sqrt(l2_norm_squared(g.values(), g.grid()->dxi())); }

// <f, g> = dx sum conj(f_j) g_j
inline cplx inner_product(const WaveField& f, const WaveField& g) {
  if (!same_grid(f.grid(), g.grid())) throw std::invalid_argument("inner_product: grid mismatch");
  cplx acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) acc += std::conj(f[j]) * g[j];
  return acc * f.grid()->dx();
}

inline double l2_distance(const WaveField& f, const WaveField& g) {
  if (!same_grid(f.grid(), g.grid())) throw std::invalid_argument("l2_distance: grid mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) acc += std::norm(f[j] - g[j]);
  return std::sqrt(acc * f.grid()->dx());
}

// dx * sum x_j^{2s} |f_j|^2
inline double weighted_moment(const WaveField& f, int s) {
  if (s < 1 || s > kMaxMomentOrder)
    throw std::invalid_argument("weighted_moment: s must be in [1, 4], got " + std::to_string(s));
  auto x = f.grid()->nodes();
  double acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double x2 = x[j] * x[j];
    double w = x2;
    for (int i = 1; i < s; ++i) w *= x2;
    acc += w * std::norm(f[j]);
  }
  return acc * f.grid()->dx();
}

// Fraction of the mass sitting in |x| > radius_fraction * L. Zero field -> 0.
inline double containment_fraction(const WaveField& f, double radius_fraction = kContainmentRadius) {
  const double r = radius_fraction * f.grid()->half_length();
  auto x = f.grid()->nodes();
  double outside = 0.0, total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double m = std::norm(f[j]);
    total += m;
    if (std::abs(x[j]) > r) outside += m;
  }
  return total > 0.0 ? outside / total : 0.0;
}

inline double max_abs(const WaveField& f) {
  double m = 0.0;
  for (const auto& z : f.values()) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace displab
