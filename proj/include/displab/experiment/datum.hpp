#pragma once

// Initial data vocabulary:
//   gaussian(a)            pi^{-1/4} a^{1/4} exp(-a x^2 / 2)
//   gaussian_shift(a, x0)  same profile centred at x0
//   packet(a, v)           gaussian(a) times exp(i v x)

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "displab/expression.hpp"
#include "displab/grid.hpp"

namespace displab {

inline void validate_datum_expr(const CallExpr& call) {
  auto want = [&](std::size_t n) {
    if (call.args.size() != n)
      throw std::invalid_argument("datum '" + call.name + "' expects " + std::to_string(n) + " argument(s)");
  };
  if (call.name == "gaussian")
    want(1);
  else if (call.name == "gaussian_shift" || call.name == "packet")
    want(2);
  else
    throw std::invalid_argument("unknown datum '" + call.name + "'");
  if (!(call.args[0] > 0.0) || !std::isfinite(call.args[0]))
    throw std::invalid_argument("datum width parameter a must be positive");
  for (double a : call.args)
    if (!std::isfinite(a)) throw std::invalid_argument("datum arguments must be finite");
}

inline WaveField make_datum(const GridPtr& grid, std::string_view expr) {
  const CallExpr call = parse_call(expr);
  validate_datum_expr(call);
  const double a = call.args[0];
  const double x0 = call.name == "gaussian_shift" ? call.args[1] : 0.0;
  const double v = call.name == "packet" ? call.args[1] : 0.0;
  const double c = std::pow(std::numbers::pi, -0.25) * std::pow(a, 0.25);
  return WaveField::sample(grid, [=](double x) {
    const double y = x - x0;
    return c * std::exp(-0.5 * a * y * y) * std::polar(1.0, v * x);
  });
}

}  // namespace displab
