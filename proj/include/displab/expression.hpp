#pragma once

// Parser for the tiny call-expression vocabulary used in configs:
// `name` or `name(arg, arg, ...)` with real-number arguments.

#include <cctype>
#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace displab {

struct CallExpr {
  std::string name;
  std::vector<double> args;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline CallExpr parse_call(std::string_view text) {
  auto s = detail::trim(text);
  CallExpr out;
  const auto open = s.find('(');
  if (open == std::string_view::npos) {
    out.name = std::string(s);
  } else {
    if (s.back() != ')') throw std::invalid_argument("expression: missing ')' in '" + std::string(s) + "'");
    out.name = std::string(detail::trim(s.substr(0, open)));
    auto body = detail::trim(s.substr(open + 1, s.size() - open - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      out.args.push_back(detail::parse_real(body.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      body = body.substr(comma + 1);
      if (detail::trim(body).empty()) throw std::invalid_argument("expression: trailing ','");
    }
  }
  if (out.name.empty()) throw std::invalid_argument("expression: empty name");
  for (char c : out.name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
      throw std::invalid_argument("expression: bad name '" + out.name + "'");
  return out;
}

}  // namespace displab
