// Minimal forward-mode dual number: value plus one directional derivative.
// The model code is templated on the scalar type; running it once per
// parameter with a seeded Dual yields exact partial derivatives.
#pragma once

#include <cmath>

namespace fdnreverb {

struct Dual {
  double v = 0.0;  // value
  double d = 0.0;  // derivative along the seeded direction

  Dual() = default;
  constexpr Dual(double value) : v(value), d(0.0) {}  // NOLINT(runtime/explicit)
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}
};

constexpr Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
constexpr Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
constexpr Dual operator-(Dual a) { return {-a.v, -a.d}; }
constexpr Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
constexpr Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
}
constexpr Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
constexpr Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
constexpr Dual& operator*=(Dual& a, Dual b) { return a = a * b; }

inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual pow(Dual base, double e) {
  const double p = std::pow(base.v, e);
  return {p, e * std::pow(base.v, e - 1.0) * base.d};
}

constexpr double value_of(double x) { return x; }
constexpr double value_of(Dual x) { return x.v; }

}  // namespace fdnreverb
