#pragma once

#include <cmath>
#include <type_traits>

namespace foliab {

// Forward-mode dual number. Nesting Dual<Dual<...>> gives exact higher-order
// and mixed partial derivatives of anything evaluated through the template.
template <class T>
struct Dual {
  T v{};  // value part
  T d{};  // derivative part

  Dual() = default;
  Dual(double x) : v(x), d() {}
  Dual(T value, T deriv) : v(std::move(value)), d(std::move(deriv)) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v = v * o.v; return *this; }
  Dual& operator/=(const Dual& o) {
    d = (d * o.v - v * o.d) / (o.v * o.v);
    v = v / o.v;
    return *this;
  }
};

template <class T> Dual<T> operator+(Dual<T> a, const Dual<T>& b) { return a += b; }
template <class T> Dual<T> operator-(Dual<T> a, const Dual<T>& b) { return a -= b; }
template <class T> Dual<T> operator*(Dual<T> a, const Dual<T>& b) { return a *= b; }
template <class T> Dual<T> operator/(Dual<T> a, const Dual<T>& b) { return a /= b; }
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator+(const Dual<T>& a) { return a; }

template <class T> Dual<T> operator+(Dual<T> a, double c) { a.v += T(c); return a; }
template <class T> Dual<T> operator+(double c, Dual<T> a) { a.v += T(c); return a; }
template <class T> Dual<T> operator-(Dual<T> a, double c) { a.v -= T(c); return a; }
template <class T> Dual<T> operator-(double c, const Dual<T>& a) { return {T(c) - a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double c) { return {a.v * T(c), a.d * T(c)}; }
template <class T> Dual<T> operator*(double c, const Dual<T>& a) { return a * c; }
template <class T> Dual<T> operator/(const Dual<T>& a, double c) { return {a.v / T(c), a.d / T(c)}; }
template <class T> Dual<T> operator/(double c, const Dual<T>& a) { return Dual<T>(c) / a; }

// Recursive value extraction: the innermost double.
inline double scalar_value(double x) { return x; }
template <class T> double scalar_value(const Dual<T>& x) { return scalar_value(x.v); }

// Lift a double into an arbitrary scalar type, with zero derivative parts.
template <class S> struct ScalarLift {
  static S lift(double x) { return S(x); }
};
template <class T> struct ScalarLift<Dual<T>> {
  static Dual<T> lift(double x) { return Dual<T>(ScalarLift<T>::lift(x), ScalarLift<T>::lift(0.0)); }
};
template <class S> S lift_scalar(double x) { return ScalarLift<S>::lift(x); }

// Comparisons act on value parts; used for pivoting and branches.
template <class T> bool operator<(const Dual<T>& a, const Dual<T>& b) { return scalar_value(a) < scalar_value(b); }
template <class T> bool operator>(const Dual<T>& a, const Dual<T>& b) { return scalar_value(a) > scalar_value(b); }

using std::exp;
using std::log;
using std::sqrt;
using std::sin;
using std::cos;
using std::sinh;
using std::cosh;
using std::fabs;
using std::pow;

template <class T> Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.v);
  return {e, a.d * e};
}
template <class T> Dual<T> log(const Dual<T>& a) { return {log(a.v), a.d / a.v}; }
template <class T> Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.v);
  return {s, a.d / (2.0 * s)};
}
template <class T> Dual<T> sin(const Dual<T>& a) { return {sin(a.v), a.d * cos(a.v)}; }
template <class T> Dual<T> cos(const Dual<T>& a) { return {cos(a.v), -(a.d * sin(a.v))}; }
template <class T> Dual<T> sinh(const Dual<T>& a) { return {sinh(a.v), a.d * cosh(a.v)}; }
template <class T> Dual<T> cosh(const Dual<T>& a) { return {cosh(a.v), a.d * sinh(a.v)}; }
template <class T> Dual<T> fabs(const Dual<T>& a) { return scalar_value(a) < 0 ? -a : a; }

// Integer power by repeated multiplication; valid for any base sign.
template <class S> S ipow(const S& base, long long e) {
  if (e < 0) return lift_scalar<S>(1.0) / ipow(base, -e);
  S r = lift_scalar<S>(1.0);
  S b = base;
  while (e > 0) {
    if (e & 1) r = r * b;
    b = b * b;
    e >>= 1;
  }
  return r;
}

template <class T> Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
  return exp(b * log(a));
}

}  // namespace foliab
