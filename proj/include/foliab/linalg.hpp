#pragma once

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "foliab/dual.hpp"

namespace foliab {

using VecD = std::vector<double>;

// Small dense matrix over an arbitrary scalar (double or nested Dual).
template <class S>
struct MatT {
  int rows = 0, cols = 0;
  std::vector<S> a;

  MatT() = default;
  MatT(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, lift_scalar<S>(0.0)) {}

  S& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const S& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

  static MatT identity(int n) {
    MatT m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = lift_scalar<S>(1.0);
    return m;
  }
};

using MatD = MatT<double>;

template <class S>
std::vector<S> mat_vec(const MatT<S>& m, const std::vector<S>& x) {
  std::vector<S> y(m.rows, lift_scalar<S>(0.0));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) y[i] = y[i] + m(i, j) * x[j];
  return y;
}

template <class S>
MatT<S> mat_mul(const MatT<S>& a, const MatT<S>& b) {
  MatT<S> c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k)
      for (int j = 0; j < b.cols; ++j) c(i, j) = c(i, j) + a(i, k) * b(k, j);
  return c;
}

template <class S>
MatT<S> mat_add(const MatT<S>& a, const MatT<S>& b, double sb = 1.0) {
  MatT<S> c(a.rows, a.cols);
  for (size_t i = 0; i < a.a.size(); ++i) c.a[i] = a.a[i] + b.a[i] * sb;
  return c;
}

template <class S>
MatT<S> mat_transpose(const MatT<S>& a) {
  MatT<S> t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

// LU with partial pivoting on value parts. Throws on (numerically) singular input.
template <class S>
struct LU {
  MatT<S> lu;
  std::vector<int> perm;

  explicit LU(MatT<S> m) : lu(std::move(m)), perm(lu.rows) {
    const int n = lu.rows;
    assert(lu.rows == lu.cols);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::fabs(scalar_value(lu(k, k)));
      for (int i = k + 1; i < n; ++i) {
        double m_ik = std::fabs(scalar_value(lu(i, k)));
        if (m_ik > best) { best = m_ik; p = i; }
      }
      if (best == 0.0) throw std::runtime_error("LU: singular matrix");
      if (p != k) {
        for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
        std::swap(perm[k], perm[p]);
      }
      for (int i = k + 1; i < n; ++i) {
        S f = lu(i, k) / lu(k, k);
        lu(i, k) = f;
        for (int j = k + 1; j < n; ++j) lu(i, j) = lu(i, j) - f * lu(k, j);
      }
    }
  }

  std::vector<S> solve(const std::vector<S>& b) const {
    const int n = lu.rows;
    std::vector<S> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) x[i] = x[i] - lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) x[i] = x[i] - lu(i, j) * x[j];
      x[i] = x[i] / lu(i, i);
    }
    return x;
  }

  MatT<S> inverse() const {
    const int n = lu.rows;
    MatT<S> inv(n, n);
    std::vector<S> e(n, lift_scalar<S>(0.0));
    for (int j = 0; j < n; ++j) {
      e.assign(n, lift_scalar<S>(0.0));
      e[j] = lift_scalar<S>(1.0);
      auto col = solve(e);
      for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
  }
};

template <class S>
MatT<S> mat_inverse(const MatT<S>& m) { return LU<S>(m).inverse(); }

template <class S>
std::vector<S> lin_solve(const MatT<S>& m, const std::vector<S>& b) { return LU<S>(m).solve(b); }

inline double dot(const VecD& a, const VecD& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const VecD& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const VecD& a) {
  double m = 0;
  for (double x : a) m = std::max(m, std::fabs(x));
  return m;
}

inline VecD axpy(double s, const VecD& x, const VecD& y) {
  VecD r(y);
  for (size_t i = 0; i < x.size(); ++i) r[i] += s * x[i];
  return r;
}

inline VecD scale(double s, const VecD& x) {
  VecD r(x);
  for (double& v : r) v *= s;
  return r;
}

inline VecD vsub(const VecD& a, const VecD& b) {
  VecD r(a);
  for (size_t i = 0; i < a.size(); ++i) r[i] -= b[i];
  return r;
}

inline VecD vadd(const VecD& a, const VecD& b) {
  VecD r(a);
  for (size_t i = 0; i < a.size(); ++i) r[i] += b[i];
  return r;
}

// Symmetric eigenvalues via cyclic Jacobi; used for SPD checks and numeric rank.
inline VecD sym_eigenvalues(MatD m) {
  const int n = m.rows;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(m(p, q)) < 1e-300) continue;
        double theta = (m(q, q) - m(p, p)) / (2 * m(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  VecD ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  return ev;
}

}  // namespace foliab
