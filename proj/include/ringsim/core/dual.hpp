#pragma once

#include <array>
#include <cmath>

namespace ringsim {

/// Forward-mode dual number carrying N partial derivatives.
template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit constant lift
  static constexpr Dual variable(double value, int index) {
    Dual r(value);
    r.d[index] = 1.0;
    return r;
  }

  constexpr Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    for (int i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double q = v * inv;
    for (int i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    return *this;
  }
};

template <int N> constexpr Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <int N> constexpr Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <int N> constexpr Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <int N> constexpr Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <int N> constexpr Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
template <int N> constexpr Dual<N> operator+(double b, Dual<N> a) { a.v += b; return a; }
template <int N> constexpr Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
template <int N> constexpr Dual<N> operator-(double b, const Dual<N>& a) {
  Dual<N> r(b);
  return r -= a;
}
template <int N> constexpr Dual<N> operator-(const Dual<N>& a) {
  Dual<N> r;
  return r -= a;
}
template <int N> constexpr Dual<N> operator*(Dual<N> a, double s) {
  a.v *= s;
  for (auto& x : a.d) x *= s;
  return a;
}
template <int N> constexpr Dual<N> operator*(double s, Dual<N> a) { return a * s; }
template <int N> constexpr Dual<N> operator/(Dual<N> a, double s) { return a * (1.0 / s); }
template <int N> constexpr Dual<N> operator/(double s, const Dual<N>& a) { return Dual<N>(s) / a; }

template <int N>
inline Dual<N> sqrt(const Dual<N>& a) {
  Dual<N> r(std::sqrt(a.v));
  const double f = 0.5 / r.v;
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * f;
  return r;
}

inline double value_of(double x) { return x; }
template <int N> inline double value_of(const Dual<N>& x) { return x.v; }

}  // namespace ringsim
