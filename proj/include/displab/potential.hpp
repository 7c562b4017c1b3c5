#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "displab/expression.hpp"
#include "displab/grid.hpp"

namespace displab {

// Real, bounded potential V sampled on a grid. Enters the flow as
// i u_t + u_xx + V u = 0, i.e. the Hamiltonian is H = -d^2/dx^2 - V.
class Potential {
public:
  Potential(GridPtr grid, std::vector<double> values, std::string label)
      : grid_(std::move(grid)), values_(std::move(values)), label_(std::move(label)) {
    if (!grid_ || values_.size() != grid_->n_points())
      throw std::invalid_argument("Potential: length does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::domain_error("Potential: non-finite sample");
  }

  const GridPtr& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  const std::string& label() const { return label_; }

  bool is_zero() const {
    for (double v : values_)
      if (v != 0.0) return false;
    return true;
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

private:
  GridPtr grid_;
  std::vector<double> values_;
  std::string label_;
};

// Vocabulary:
//   zero        V(x) = 0
//   sech2(a)    V(x) = -a / cosh(x)^2
//   lorentz(a)  V(x) = -a / (1 + x^2)
//   const(a)    V(x) = a
inline Potential make_potential(const GridPtr& grid, std::string_view expr) {
  const CallExpr call = parse_call(expr);
  auto want = [&](std::size_t n) {
    if (call.args.size() != n)
      throw std::invalid_argument("potential '" + call.name + "' expects " + std::to_string(n) +
                                  " argument(s)");
  };
  std::vector<double> v(grid->n_points());
  auto x = grid->nodes();
  if (call.name == "zero") {
    want(0);
  } else if (call.name == "sech2") {
    want(1);
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double c = std::cosh(x[j]);
      v[j] = -call.args[0] / (c * c);
    }
  } else if (call.name == "lorentz") {
    want(1);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = -call.args[0] / (1.0 + x[j] * x[j]);
  } else if (call.name == "const") {
    want(1);
    for (auto& e : v) e = call.args[0];
  } else {
    throw std::invalid_argument("unknown potential '" + call.name + "'");
  }
  return Potential(grid, std::move(v), std::string(detail::trim(expr)));
}

}  // namespace displab
