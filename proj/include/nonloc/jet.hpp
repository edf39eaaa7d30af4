#pragma once

// Third-order forward-mode derivatives in up to three variables.
//
// A Jet carries the value, gradient, Hessian and third-derivative tensor of a
// scalar expression with respect to `n` seed variables. Test functions are
// written once as templates over the scalar type and evaluated either with
// double (fast path) or with Jet (exact derivatives up to order three).

#include <array>
#include <cmath>

namespace nonloc {

struct Jet {
  int n = 0;
  double v = 0.0;
  std::array<double, 3> g{};
  std::array<double, 9> h{};
  std::array<double, 27> t{};

  static Jet constant(int dim, double c) {
    Jet j;
    j.n = dim;
    j.v = c;
    return j;
  }

  static Jet variable(int dim, int index, double value) {
    Jet j = constant(dim, value);
    j.g[index] = 1.0;
    return j;
  }

  double hess(int i, int j) const { return h[3 * i + j]; }
  double third(int i, int j, int k) const { return t[9 * i + 3 * j + k]; }
};

namespace detail {

// f(a) given f, f', f'', f''' at a.v (Faa di Bruno to third order).
inline Jet compose(const Jet& a, double f0, double f1, double f2, double f3) {
  Jet r;
  r.n = a.n;
  r.v = f0;
  const int n = a.n;
  for (int i = 0; i < n; ++i) r.g[i] = f1 * a.g[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      r.h[3 * i + j] = f2 * a.g[i] * a.g[j] + f1 * a.h[3 * i + j];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double gi = a.g[i], gj = a.g[j], gk = a.g[k];
        r.t[9 * i + 3 * j + k] =
            f3 * gi * gj * gk +
            f2 * (a.h[3 * i + j] * gk + a.h[3 * i + k] * gj + a.h[3 * j + k] * gi) +
            f1 * a.t[9 * i + 3 * j + k];
      }
  return r;
}

}  // namespace detail

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  r.n = a.n > b.n ? a.n : b.n;
  r.v += b.v;
  for (int i = 0; i < 3; ++i) r.g[i] += b.g[i];
  for (int i = 0; i < 9; ++i) r.h[i] += b.h[i];
  for (int i = 0; i < 27; ++i) r.t[i] += b.t[i];
  return r;
}

inline Jet operator-(const Jet& a) {
  Jet r = a;
  r.v = -r.v;
  for (double& x : r.g) x = -x;
  for (double& x : r.h) x = -x;
  for (double& x : r.t) x = -x;
  return r;
}

inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

inline Jet operator+(const Jet& a, double c) {
  Jet r = a;
  r.v += c;
  return r;
}
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return a + (-c); }
inline Jet operator-(double c, const Jet& a) { return (-a) + c; }

inline Jet operator*(const Jet& a, double c) {
  Jet r = a;
  r.v *= c;
  for (double& x : r.g) x *= c;
  for (double& x : r.h) x *= c;
  for (double& x : r.t) x *= c;
  return r;
}
inline Jet operator*(double c, const Jet& a) { return a * c; }

inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  const int n = a.n > b.n ? a.n : b.n;
  r.n = n;
  r.v = a.v * b.v;
  for (int i = 0; i < n; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      r.h[3 * i + j] = a.v * b.h[3 * i + j] + b.v * a.h[3 * i + j] + a.g[i] * b.g[j] +
                       a.g[j] * b.g[i];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int ijk = 9 * i + 3 * j + k;
        r.t[ijk] = a.v * b.t[ijk] + b.v * a.t[ijk] +
                   a.g[i] * b.h[3 * j + k] + a.g[j] * b.h[3 * i + k] + a.g[k] * b.h[3 * i + j] +
                   b.g[i] * a.h[3 * j + k] + b.g[j] * a.h[3 * i + k] + b.g[k] * a.h[3 * i + j];
      }
  return r;
}

inline Jet reciprocal(const Jet& a) {
  const double x = a.v;
  const double i1 = 1.0 / x;
  return detail::compose(a, i1, -i1 * i1, 2.0 * i1 * i1 * i1, -6.0 * i1 * i1 * i1 * i1);
}

inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }
inline Jet operator/(double c, const Jet& a) { return reciprocal(a) * c; }

inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }
inline Jet& operator*=(Jet& a, const Jet& b) { return a = a * b; }
inline Jet& operator+=(Jet& a, double c) { return a = a + c; }
inline Jet& operator*=(Jet& a, double c) { return a = a * c; }

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return detail::compose(a, e, e, e, e);
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return detail::compose(a, s, c, -s, -c);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return detail::compose(a, c, -s, -c, s);
}

inline Jet sqrt(const Jet& a) {
  const double r = std::sqrt(a.v);
  return detail::compose(a, r, 0.5 / r, -0.25 / (r * a.v), 0.375 / (r * a.v * a.v));
}

inline Jet square(const Jet& a) { return a * a; }
inline double square(double a) { return a * a; }

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.v; }

}  // namespace nonloc
