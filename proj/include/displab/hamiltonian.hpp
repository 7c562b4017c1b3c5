#pragma once

// Dense discretization of H = -d^2/dx^2 - V and its functional calculus.
//
// On the periodic grid the spectral second derivative F* diag(xi^2) F is a
// real symmetric circulant (xi^2 is even in k and the Nyquist mode is
// self-conjugate), so H is real symmetric with a real orthonormal
// eigenbasis. The eigensolve is Householder tridiagonalization (Eigen),
// MRRR on the tridiagonal (LAPACK dstemr) and an Eigen back-transform; all
// dense level-3 work stays in Eigen. Eigenvectors are orthonormal in the
// Euclidean sense; continuum L2 quantities pick up the factor dx.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "displab/grid.hpp"
#include "displab/potential.hpp"

namespace displab {

inline constexpr std::size_t kMaxDenseSize = 4096;
inline constexpr double kDefaultClampTolerance = 1e-9;

class PositivityViolation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class HamiltonianDecomposition {
public:
  HamiltonianDecomposition(GridPtr grid, Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors, std::string label)
      : grid_(std::move(grid)),
        eigenvalues_(std::move(eigenvalues)),
        eigenvectors_(std::move(eigenvectors)),
        label_(std::move(label)) {
    const auto n = static_cast<Eigen::Index>(grid_->n_points());
    if (eigenvalues_.size() != n || eigenvectors_.rows() != n || eigenvectors_.cols() != n)
      throw std::invalid_argument("HamiltonianDecomposition: size mismatch");
  }

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  std::span<const double> eigenvalues() const { return {eigenvalues_.data(), size()}; }
  double min_eigenvalue() const { return eigenvalues_(0); }
  const std::string& potential_label() const { return label_; }

  // Column i is the i-th eigenvector.
  std::span<const double> eigenvector(std::size_t i) const {
    return {eigenvectors_.data() + i * size(), size()};
  }
  const Eigen::MatrixXd& eigenvector_matrix() const { return eigenvectors_; }

  // c = Q^T v (Euclidean coefficients).
  std::vector<cplx> coefficients(std::span<const cplx> v) const {
    check(v.size());
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd vr(n), vi(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      vr(j) = v[static_cast<std::size_t>(j)].real();
      vi(j) = v[static_cast<std::size_t>(j)].imag();
    }
    const Eigen::VectorXd cr = eigenvectors_.transpose() * vr;
    const Eigen::VectorXd ci = eigenvectors_.transpose() * vi;
    std::vector<cplx> c(size());
    for (Eigen::Index j = 0; j < n; ++j) c[static_cast<std::size_t>(j)] = cplx(cr(j), ci(j));
    return c;
  }

  // v = Q c
  std::vector<cplx> synthesize(std::span<const cplx> c) const {
    check(c.size());
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::VectorXd cr(n), ci(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      cr(j) = c[static_cast<std::size_t>(j)].real();
      ci(j) = c[static_cast<std::size_t>(j)].imag();
    }
    const Eigen::VectorXd re = eigenvectors_ * cr;
    const Eigen::VectorXd im = eigenvectors_ * ci;
    std::vector<cplx> v(size());
    for (Eigen::Index j = 0; j < n; ++j) v[j] = cplx(re(j), im(j));
    return v;
  }

  // Eigenvalue with the (posit) clamp: round-off negatives in (-tol, 0) map
  // to 0, anything below -tol is a hypothesis violation.
  double clamped_eigenvalue(std::size_t i, double tol_clamp) const {
    const double l = eigenvalues_(static_cast<Eigen::Index>(i));
    if (l < -tol_clamp)
      throw PositivityViolation("H = -d^2 - V is not nonnegative: eigenvalue " + std::to_string(l) +
                                " below -" + std::to_string(tol_clamp) + " (potential " + label_ + ")");
    return std::max(l, 0.0);
  }

private:
  void check(std::size_t len) const {
    if (len != size()) throw std::invalid_argument("HamiltonianDecomposition: vector length mismatch");
  }

  GridPtr grid_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  std::string label_;
};

using HamiltonianPtr = std::shared_ptr<const HamiltonianDecomposition>;

// First column of the spectral -d^2/dx^2 circulant.
inline std::vector<double> laplacian_circulant(const GridSpec& g) {
  const auto n = g.n_points();
  std::vector<cplx> sym(n), col(n);
  auto xi = g.frequencies();
  for (std::size_t k = 0; k < n; ++k) sym[k] = xi[k] * xi[k];
  detail::FftPlanCache::instance().backward(sym, col);
  std::vector<double> c(n);
  for (std::size_t m = 0; m < n; ++m) c[m] = col[m].real() / static_cast<double>(n);
  return c;
}

inline HamiltonianPtr build_hamiltonian(const GridPtr& grid, const Potential& V) {
  if (!same_grid(grid, V.grid())) throw std::invalid_argument("build_hamiltonian: potential is on a different grid");
  const auto n = grid->n_points();
  if (n > kMaxDenseSize)
    throw std::invalid_argument("build_hamiltonian: dense eigendecomposition capped at " +
                                std::to_string(kMaxDenseSize) + " points, got " + std::to_string(n));
  const auto c = laplacian_circulant(*grid);
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd a(ni, ni);
  auto v = V.values();
  for (Eigen::Index col = 0; col < ni; ++col) {
    for (Eigen::Index row = 0; row < ni; ++row) a(row, col) = c[static_cast<std::size_t>(row >= col ? row - col : row + ni - col)];
    a(col, col) -= v[static_cast<std::size_t>(col)];
  }

  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(a);
  a.resize(0, 0);
  Eigen::VectorXd d = tri.diagonal();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(ni);
  e.head(ni - 1) = tri.subDiagonal();
  Eigen::VectorXd w(ni);
  Eigen::MatrixXd z(ni, ni);
  std::vector<lapack_int> support(2 * n);
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  const lapack_int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'A', static_cast<lapack_int>(n), d.data(), e.data(), 0.0,
                                         0.0, 0, 0, &found, w.data(), z.data(), static_cast<lapack_int>(n),
                                         static_cast<lapack_int>(n), support.data(), &tryrac);
  if (info != 0 || found != static_cast<lapack_int>(n))
    throw std::runtime_error("build_hamiltonian: dstemr failed with info = " + std::to_string(info));
  Eigen::MatrixXd q = tri.matrixQ() * z;
  return std::make_shared<const HamiltonianDecomposition>(grid, std::move(w), std::move(q), V.label());
}

// Matrix-free H f = -f'' - V f.
inline WaveField apply_hamiltonian(const Potential& V, const WaveField& f) {
  if (!same_grid(f.grid(), V.grid())) throw std::invalid_argument("apply_hamiltonian: grid mismatch");
  auto out = apply_fourier_multiplier(f, [](double xi) { return cplx(xi * xi); });
  std::vector<cplx> v(out.values().begin(), out.values().end());
  auto pot = V.values();
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= pot[j] * f[j];
  return WaveField(f.grid(), std::move(v), f.time());
}

// (sqrt H)^s f through the eigenbasis, s in [1, 4].
inline WaveField apply_sqrtH_power(const HamiltonianDecomposition& H, int s, const WaveField& f,
                                   double tol_clamp = kDefaultClampTolerance) {
  if (s < 1 || s > kMaxMomentOrder)
    throw std::invalid_argument("apply_sqrtH_power: s must be in [1, 4], got " + std::to_string(s));
  if (!same_grid(H.grid(), f.grid())) throw std::invalid_argument("apply_sqrtH_power: grid mismatch");
  auto c = H.coefficients(f.values());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= std::pow(H.clamped_eigenvalue(i, tol_clamp), 0.5 * s);
  return WaveField(f.grid(), H.synthesize(c), f.time());
}

// ||(sqrt H)^s f||^2 = dx sum lambda_i^s |c_i|^2, without resynthesis.
inline double sqrtH_power_norm_squared(const HamiltonianDecomposition& H, int s, const WaveField& f,
                                       double tol_clamp = kDefaultClampTolerance) {
  if (s < 0 || s > kMaxMomentOrder)
    throw std::invalid_argument("sqrtH_power_norm_squared: s must be in [0, 4]");
  if (!same_grid(H.grid(), f.grid())) throw std::invalid_argument("sqrtH_power_norm_squared: grid mismatch");
  const auto c = H.coefficients(f.values());
  double acc = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double l = H.clamped_eigenvalue(i, tol_clamp);
    double w = 1.0;
    for (int p = 0; p < s; ++p) w *= l;
    acc += w * std::norm(c[i]);
  }
  return acc * f.grid()->dx();
}

// Same quantity by repeated matrix-free application: Re <f, H^s f>.
// Usable on grids above the dense cap.
inline double sqrtH_power_norm_squared(const Potential& V, int s, const WaveField& f) {
  if (s < 0 || s > kMaxMomentOrder)
    throw std::invalid_argument("sqrtH_power_norm_squared: s must be in [0, 4]");
  // Split H^s = H^a H^b with a = floor(s/2): ||H^{s/2} f||^2 for even s,
  // <H^a f, H^{a+1} f> for odd s. Keeps the derivative order per factor low.
  WaveField g = f;
  for (int i = 0; i < s / 2; ++i) g = apply_hamiltonian(V, g);
  if (s % 2 == 0) return l2_norm_squared(g.values(), f.grid()->dx());
  const WaveField hg = apply_hamiltonian(V, g);
  return std::max(0.0, inner_product(g, hg).real());
}

// Smallest eigenvalue estimate of the matrix-free H by Lanczos with full
// reorthogonalization. Converges from above; intended for the positivity
// diagnostic on grids above the dense cap.
inline double lanczos_min_eigenvalue(const Potential& V, int max_iterations = 300, double rel_tol = 1e-6) {
  const auto& g = V.grid();
  const auto n = g->n_points();
  const auto ni = static_cast<Eigen::Index>(n);
  const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(static_cast<std::size_t>(max_iterations), n));
  const auto c = laplacian_circulant(*g);
  std::vector<cplx> cc(c.begin(), c.end()), csym(n);
  detail::FftPlanCache::instance().forward(cc, csym);
  auto pot = V.values();
  // H is real symmetric: circulant convolution plus the diagonal.
  std::vector<cplx> buf(n), spec(n);
  auto apply = [&](const Eigen::VectorXd& q, Eigen::VectorXd& out) {
    for (std::size_t j = 0; j < n; ++j) buf[j] = q(static_cast<Eigen::Index>(j));
    detail::FftPlanCache::instance().forward(buf, spec);
    for (std::size_t k = 0; k < n; ++k) spec[k] *= csym[k];
    detail::FftPlanCache::instance().backward(spec, buf);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j)
      out(static_cast<Eigen::Index>(j)) = buf[j].real() * inv_n - pot[j] * q(static_cast<Eigen::Index>(j));
  };

  Eigen::MatrixXd basis(ni, m);
  Eigen::VectorXd q(ni), w(ni);
  auto x = g->nodes();
  for (Eigen::Index j = 0; j < ni; ++j) {
    const double xj = x[static_cast<std::size_t>(j)];
    q(j) = 1.0 + 0.5 * std::cos(0.37 * xj) + 0.25 * std::sin(1.3 * xj);
  }
  q.normalize();
  std::vector<double> alpha, beta;
  double current = std::numeric_limits<double>::infinity();
  // Smallest Ritz value and the residual bound |beta_m z_m| of its Ritz pair.
  auto ritz_min = [&](double next_beta) {
    const auto k = alpha.size();
    std::vector<double> d = alpha, e = beta, z(k * k);
    e.resize(k);
    const int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', static_cast<int>(k), d.data(), e.data(), z.data(),
                                   static_cast<int>(k));
    if (info != 0) throw std::runtime_error("lanczos_min_eigenvalue: dstev failed");
    current = d[0];
    return std::abs(next_beta * z[k - 1]);
  };
  for (Eigen::Index it = 0; it < m; ++it) {
    basis.col(it) = q;
    apply(q, w);
    alpha.push_back(q.dot(w));
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(it + 1) * (basis.leftCols(it + 1).transpose() * w);
    const double nb = w.norm();
    const bool last = nb < 1e-12 || it + 1 == m;
    if ((it + 1) % 20 == 0 || last) {
      const double residual = ritz_min(nb);
      if (last || residual <= rel_tol * std::max(1.0, std::abs(current))) break;
    }
    beta.push_back(nb);
    q = w / nb;
  }
  return current;
}

}  // namespace displab
