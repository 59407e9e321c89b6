#pragma once

#include <array>
#include <random>

#include "foliab/metric.hpp"

namespace foliab {

enum class ConnectionKind { levi_civita, adapted, breve };

// Christoffel convention throughout: nabla_{d_k} d_j = Gamma^i_{jk} d_i,
// stored as at(i, j, k).
template <class S>
struct Tensor3T {
  int n = 0;
  std::vector<S> a;
  Tensor3T() = default;
  explicit Tensor3T(int nn) : n(nn), a(static_cast<size_t>(nn) * nn * nn, lift_scalar<S>(0.0)) {}
  S& at(int i, int j, int k) { return a[(static_cast<size_t>(i) * n + j) * n + k]; }
  const S& at(int i, int j, int k) const { return a[(static_cast<size_t>(i) * n + j) * n + k]; }
};

// Curvature components R^i_{jkl}: R(d_k, d_l) d_j = R^i_{jkl} d_i.
template <class S>
struct Tensor4T {
  int n = 0;
  std::vector<S> a;
  Tensor4T() = default;
  explicit Tensor4T(int nn)
      : n(nn), a(static_cast<size_t>(nn) * nn * nn * nn, lift_scalar<S>(0.0)) {}
  S& at(int i, int j, int k, int l) {
    return a[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
  const S& at(int i, int j, int k, int l) const {
    return a[((static_cast<size_t>(i) * n + j) * n + k) * n + l];
  }
};

using Tensor3 = Tensor3T<double>;
using Tensor4 = Tensor4T<double>;

// Components of a (1, rank-1) tensor: slot 0 is the upper index.
template <class S>
struct TensorComps {
  int n = 0, rank = 0;
  std::vector<S> a;
  TensorComps() = default;
  TensorComps(int nn, int r) : n(nn), rank(r) {
    size_t sz = 1;
    for (int i = 0; i < r; ++i) sz *= nn;
    a.assign(sz, lift_scalar<S>(0.0));
  }
  size_t flat(const int* idx) const {
    size_t f = 0;
    for (int s = 0; s < rank; ++s) f = f * n + idx[s];
    return f;
  }
};

namespace detail {

template <class S>
std::vector<Dual<S>> seed_point(const std::vector<S>& x, int dir) {
  std::vector<Dual<S>> xs(x.size());
  for (size_t k = 0; k < x.size(); ++k)
    xs[k] = {x[k], static_cast<int>(k) == dir ? lift_scalar<S>(1.0) : lift_scalar<S>(0.0)};
  return xs;
}

}  // namespace detail

// Metric and its first partials at a generic point.
template <class S>
struct MetricJet1 {
  MatT<S> g;
  std::vector<MatT<S>> dg;  // dg[m](i,j) = d_m g_ij
};

template <class S>
MetricJet1<S> metric_jet1(const MetricField& M, const std::vector<S>& x) {
  const int n = M.spec().n_total();
  MetricJet1<S> jet;
  jet.dg.resize(n);
  for (int m = 0; m < n; ++m) {
    auto G = M.eval(detail::seed_point(x, m));
    if (m == 0) {
      jet.g = MatT<S>(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) jet.g(i, j) = G(i, j).v;
    }
    jet.dg[m] = MatT<S>(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) jet.dg[m](i, j) = G(i, j).d;
  }
  return jet;
}

template <class S>
Tensor3T<S> christoffel_lc(const MetricField& M, const std::vector<S>& x) {
  const int n = M.spec().n_total();
  auto jet = metric_jet1(M, x);
  MatT<S> gi = mat_inverse(jet.g);
  Tensor3T<S> G(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        S s = lift_scalar<S>(0.0);
        for (int l = 0; l < n; ++l)
          s = s + gi(i, l) * (jet.dg[k](l, j) + jet.dg[j](l, k) - jet.dg[l](j, k));
        G.at(i, j, k) = 0.5 * s;
      }
  return G;
}

// Vertical projector and its first partials.
template <class S>
struct ProjJet1 {
  MatT<S> P;
  std::vector<MatT<S>> dP;
};

template <class S>
ProjJet1<S> projector_jet1(const MetricField& M, const std::vector<S>& x) {
  const int n = M.spec().n_total();
  ProjJet1<S> jet;
  jet.dP.resize(n);
  for (int m = 0; m < n; ++m) {
    auto P = M.vertical_projector(detail::seed_point(x, m));
    if (m == 0) {
      jet.P = MatT<S>(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) jet.P(i, j) = P(i, j).v;
    }
    jet.dP[m] = MatT<S>(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) jet.dP[m](i, j) = P(i, j).d;
  }
  return jet;
}

// Adapted connection: each Levi-Civita derivative is split and re-projected,
// nabla0_E F = V nabla_E (V F) + H nabla_E (H F).
template <class S>
Tensor3T<S> christoffel_adapted(const MetricField& M, const std::vector<S>& x) {
  const int n = M.spec().n_total();
  Tensor3T<S> lc = christoffel_lc(M, x);
  ProjJet1<S> pj = projector_jet1(M, x);
  MatT<S> H = mat_add(MatT<S>::identity(n), pj.P, -1.0);
  Tensor3T<S> G(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      // nabla_{d_k} of the projected extensions of d_j
      std::vector<S> dv(n), dh(n);
      for (int l = 0; l < n; ++l) {
        S cv = pj.dP[k](l, j);
        S ch = -pj.dP[k](l, j);
        for (int m = 0; m < n; ++m) {
          cv = cv + lc.at(l, m, k) * pj.P(m, j);
          ch = ch + lc.at(l, m, k) * H(m, j);
        }
        dv[l] = cv;
        dh[l] = ch;
      }
      for (int i = 0; i < n; ++i) {
        S s = lift_scalar<S>(0.0);
        for (int l = 0; l < n; ++l) s = s + pj.P(i, l) * dv[l] + H(i, l) * dh[l];
        G.at(i, j, k) = s;
      }
    }
  return G;
}

// Torsion of the adapted connection: Tor(d_a, d_b) = (G^i_{ba} - G^i_{ab}) d_i,
// stored as at(i, a, b).
template <class S>
Tensor3T<S> torsion_from_christoffel(const Tensor3T<S>& G) {
  Tensor3T<S> T(G.n);
  for (int i = 0; i < G.n; ++i)
    for (int a = 0; a < G.n; ++a)
      for (int b = 0; b < G.n; ++b) T.at(i, a, b) = G.at(i, b, a) - G.at(i, a, b);
  return T;
}

// breve = adapted - T0/2; torsion-free with the same geodesics.
template <class S>
Tensor3T<S> christoffel_breve(const MetricField& M, const std::vector<S>& x) {
  Tensor3T<S> G = christoffel_adapted(M, x);
  Tensor3T<S> B(G.n);
  for (int i = 0; i < G.n; ++i)
    for (int j = 0; j < G.n; ++j)
      for (int k = 0; k < G.n; ++k)
        B.at(i, j, k) = 0.5 * (G.at(i, j, k) + G.at(i, k, j));
  return B;
}

template <class S>
Tensor3T<S> christoffel_t(const MetricField& M, ConnectionKind kind, const std::vector<S>& x) {
  switch (kind) {
    case ConnectionKind::levi_civita: return christoffel_lc(M, x);
    case ConnectionKind::adapted: return christoffel_adapted(M, x);
    case ConnectionKind::breve: return christoffel_breve(M, x);
  }
  throw std::logic_error("unreachable");
}

// O'Neill tensors as pointwise component arrays, T^i_{jk} = [T_{d_j} d_k]^i.
// Field extensions are the projector applied to frozen coordinate vectors; the
// result is extension-independent (tensoriality), which the tests exercise.
template <class S>
Tensor3T<S> oneill_T_comps(const MetricField& M, const std::vector<S>& x) {
  const int n = M.spec().n_total();
  Tensor3T<S> lc = christoffel_lc(M, x);
  ProjJet1<S> pj = projector_jet1(M, x);
  MatT<S> H = mat_add(MatT<S>::identity(n), pj.P, -1.0);
  Tensor3T<S> T(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      std::vector<S> dv(n, lift_scalar<S>(0.0)), dh(n, lift_scalar<S>(0.0));
      for (int mu = 0; mu < n; ++mu) {
        const S& vmu = pj.P(mu, j);  // V d_j
        if (scalar_value(vmu) == 0.0 && detail::DualDepth<S>::value == 0) continue;
        for (int l = 0; l < n; ++l) {
          S cv = pj.dP[mu](l, k);
          S ch = -pj.dP[mu](l, k);
          for (int m = 0; m < n; ++m) {
            cv = cv + lc.at(l, m, mu) * pj.P(m, k);
            ch = ch + lc.at(l, m, mu) * H(m, k);
          }
          dv[l] = dv[l] + vmu * cv;
          dh[l] = dh[l] + vmu * ch;
        }
      }
      for (int i = 0; i < n; ++i) {
        S s = lift_scalar<S>(0.0);
        for (int l = 0; l < n; ++l) s = s + H(i, l) * dv[l] + pj.P(i, l) * dh[l];
        T.at(i, j, k) = s;
      }
    }
  return T;
}

template <class S>
Tensor3T<S> oneill_A_comps(const MetricField& M, const std::vector<S>& x) {
  const int n = M.spec().n_total();
  Tensor3T<S> lc = christoffel_lc(M, x);
  ProjJet1<S> pj = projector_jet1(M, x);
  MatT<S> H = mat_add(MatT<S>::identity(n), pj.P, -1.0);
  Tensor3T<S> A(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      std::vector<S> dv(n, lift_scalar<S>(0.0)), dh(n, lift_scalar<S>(0.0));
      for (int mu = 0; mu < n; ++mu) {
        const S& wmu = H(mu, j);  // H d_j
        for (int l = 0; l < n; ++l) {
          S cv = pj.dP[mu](l, k);
          S ch = -pj.dP[mu](l, k);
          for (int m = 0; m < n; ++m) {
            cv = cv + lc.at(l, m, mu) * pj.P(m, k);
            ch = ch + lc.at(l, m, mu) * H(m, k);
          }
          dv[l] = dv[l] + wmu * cv;
          dh[l] = dh[l] + wmu * ch;
        }
      }
      for (int i = 0; i < n; ++i) {
        S s = lift_scalar<S>(0.0);
        for (int l = 0; l < n; ++l) s = s + H(i, l) * dv[l] + pj.P(i, l) * dh[l];
        A.at(i, j, k) = s;
      }
    }
  return A;
}

// R^i_{jkl} = d_k G^i_{jl} - d_l G^i_{jk} + G^i_{mk} G^m_{jl} - G^i_{ml} G^m_{jk}.
template <class S>
Tensor4T<S> curvature_tensor(const MetricField& M, ConnectionKind kind,
                             const std::vector<S>& x) {
  const int n = M.spec().n_total();
  std::vector<Tensor3T<S>> dG(n);
  Tensor3T<S> G;
  for (int m = 0; m < n; ++m) {
    auto Gj = christoffel_t(M, kind, detail::seed_point(x, m));
    if (m == 0) {
      G = Tensor3T<S>(n);
      for (size_t q = 0; q < Gj.a.size(); ++q) G.a[q] = Gj.a[q].v;
    }
    dG[m] = Tensor3T<S>(n);
    for (size_t q = 0; q < Gj.a.size(); ++q) dG[m].a[q] = Gj.a[q].d;
  }
  Tensor4T<S> R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          S s = dG[k].at(i, j, l) - dG[l].at(i, j, k);
          for (int m = 0; m < n; ++m)
            s = s + G.at(i, m, k) * G.at(m, j, l) - G.at(i, m, l) * G.at(m, j, k);
          R.at(i, j, k, l) = s;
        }
  return R;
}

enum class BaseTensor { curvature, oneill_T, oneill_A };

template <class S>
TensorComps<S> base_tensor_comps(const MetricField& M, BaseTensor which,
                                 const std::vector<S>& x) {
  const int n = M.spec().n_total();
  if (which == BaseTensor::curvature) {
    auto R = curvature_tensor(M, ConnectionKind::levi_civita, x);
    TensorComps<S> t(n, 4);
    t.a = std::move(R.a);
    return t;
  }
  auto T3 = which == BaseTensor::oneill_T ? oneill_T_comps(M, x) : oneill_A_comps(M, x);
  TensorComps<S> t(n, 3);
  t.a = std::move(T3.a);
  return t;
}

// One Levi-Civita covariant derivative of a tensor-valued functor; the
// derivative slot is appended last.
template <class S, class Fn>
TensorComps<S> covariant_derivative_of(const MetricField& M, const Fn& base,
                                       const std::vector<S>& x) {
  const int n = M.spec().n_total();
  Tensor3T<S> G = christoffel_lc(M, x);
  TensorComps<S> value;
  std::vector<TensorComps<S>> partials(n);
  for (int m = 0; m < n; ++m) {
    auto tm = base(M, detail::seed_point(x, m));
    if (m == 0) {
      value = TensorComps<S>(n, tm.rank);
      for (size_t q = 0; q < tm.a.size(); ++q) value.a[q] = tm.a[q].v;
    }
    partials[m] = TensorComps<S>(n, tm.rank);
    for (size_t q = 0; q < tm.a.size(); ++q) partials[m].a[q] = tm.a[q].d;
  }
  const int r = value.rank;
  TensorComps<S> out(n, r + 1);
  std::vector<int> idx(r + 1, 0);
  const size_t total = out.a.size();
  for (size_t f = 0; f < total; ++f) {
    size_t rem = f;
    for (int s = r; s >= 0; --s) { idx[s] = static_cast<int>(rem % n); rem /= n; }
    const int m = idx[r];
    S s = partials[m].a[value.flat(idx.data())];
    // upper slot correction
    std::vector<int> jdx(idx.begin(), idx.begin() + r);
    for (int l = 0; l < n; ++l) {
      int keep = jdx[0];
      jdx[0] = l;
      s = s + G.at(idx[0], l, m) * value.a[value.flat(jdx.data())];
      jdx[0] = keep;
    }
    // lower slot corrections
    for (int slot = 1; slot < r; ++slot) {
      int keep = jdx[slot];
      for (int l = 0; l < n; ++l) {
        jdx[slot] = l;
        s = s - G.at(l, keep, m) * value.a[value.flat(jdx.data())];
      }
      jdx[slot] = keep;
    }
    out.a[f] = s;
  }
  return out;
}

namespace detail {

struct BaseTensorFn {
  BaseTensor which;
  template <class S>
  TensorComps<S> operator()(const MetricField& M, const std::vector<S>& x) const {
    return base_tensor_comps(M, which, x);
  }
};

template <class Fn>
struct CovFn {
  Fn base;
  template <class S>
  TensorComps<S> operator()(const MetricField& M, const std::vector<S>& x) const {
    return covariant_derivative_of(M, base, x);
  }
};

}  // namespace detail

// nabla^m applied to R, T or A, evaluated at a double point. m <= 3.
TensorComps<double> covariant_tensor(const MetricField& M, BaseTensor which, int m,
                                     const VecD& x);

// Frobenius norm with full metric contractions on every slot.
double tensor_norm_full(const MetricField& M, const VecD& x, const TensorComps<double>& t);

// Norm restricted to the tensor's defining block: lower slots contracted with
// the vertical (for T) or horizontal (for A) part of the inverse metric. Used
// at order zero so that |T| matches the second fundamental form of the leaves.
double tensor_norm_block(const MetricField& M, const VecD& x, const TensorComps<double>& t,
                         bool vertical_block);

enum class NormTensor { R, T, A };
double covariant_norm(const MetricField& M, const VecD& x, NormTensor which, int order);

// --- pointwise operations on tangent vectors -------------------------------

struct ConnectionCoefficients {
  ConnectionKind kind;
  Tensor3 gamma;  // gamma.at(i, j, k) = Gamma^i_{jk}
};

ConnectionCoefficients christoffel(const MetricField& M, const VecD& x,
                                   ConnectionKind kind = ConnectionKind::levi_civita);

TangentVector oneill_T(const MetricField& M, const TangentVector& E, const TangentVector& F);
TangentVector oneill_A(const MetricField& M, const TangentVector& E, const TangentVector& F);

// Smooth vector field on the chart: either coefficient expressions or the
// projection of a frozen coordinate vector (vertical/horizontal extension).
class VectorField {
 public:
  enum class Kind { expressions, projected_vertical, projected_horizontal };

  static VectorField from_exprs(std::vector<Expr> comps) {
    VectorField f;
    f.kind_ = Kind::expressions;
    f.exprs_ = std::move(comps);
    return f;
  }
  static VectorField vertical_extension(VecD frozen) {
    VectorField f;
    f.kind_ = Kind::projected_vertical;
    f.frozen_ = std::move(frozen);
    return f;
  }
  static VectorField horizontal_extension(VecD frozen) {
    VectorField f;
    f.kind_ = Kind::projected_horizontal;
    f.frozen_ = std::move(frozen);
    return f;
  }

  template <class S>
  std::vector<S> eval(const MetricField& M, const std::vector<S>& x) const {
    const int n = M.spec().n_total();
    std::vector<S> out(n, lift_scalar<S>(0.0));
    switch (kind_) {
      case Kind::expressions:
        for (int i = 0; i < n; ++i) out[i] = exprs_[i].template eval<S>(x);
        return out;
      case Kind::projected_vertical: {
        auto P = M.vertical_projector(x);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) out[i] = out[i] + P(i, j) * lift_scalar<S>(frozen_[j]);
        return out;
      }
      case Kind::projected_horizontal: {
        auto P = M.vertical_projector(x);
        for (int i = 0; i < n; ++i) {
          out[i] = lift_scalar<S>(frozen_[i]);
          for (int j = 0; j < n; ++j) out[i] = out[i] - P(i, j) * lift_scalar<S>(frozen_[j]);
        }
        return out;
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  Kind kind_ = Kind::expressions;
  std::vector<Expr> exprs_;
  VecD frozen_;
};

// nabla^kind_{dir} F at dir's base point.
TangentVector connection_derivative(const MetricField& M, ConnectionKind kind,
                                    const TangentVector& dir, const VectorField& F);
TangentVector adapted_derivative(const MetricField& M, const TangentVector& dir,
                                 const VectorField& F);
TangentVector breve_derivative(const MetricField& M, const TangentVector& dir,
                               const VectorField& F);

// Torsion of the adapted connection evaluated on two vectors.
TangentVector adapted_torsion(const MetricField& M, const TangentVector& E,
                              const TangentVector& F);

// R^kind(E, F) G.
TangentVector curvature(const MetricField& M, ConnectionKind kind, const TangentVector& E,
                        const TangentVector& F, const TangentVector& G);

// Lie bracket [A, B] at x of two vector fields.
VecD field_bracket(const MetricField& M, const VectorField& A, const VectorField& B,
                   const VecD& x);

// theta_X V = nabla0_X V - T_V X; X must be horizontal at its base point.
TangentVector theta_operator(const MetricField& M, const TangentVector& X,
                             const VectorField& Vf);

// Horizontal representative of the normal partial derivative along vertical V.
TangentVector normal_connection_derivative(const MetricField& M, const TangentVector& V,
                                           const VectorField& Xf);

enum class CurvatureCase { VV, XY, XV };

// Max residual between the direct curvature difference (adapted minus
// Levi-Civita) and its O'Neill-tensor expression, over randomly drawn unit
// vectors of the appropriate types.
double curvature_difference_residual(const MetricField& M, const VecD& x, CurvatureCase c,
                                     int n_draws, std::mt19937_64& rng);

// --- small metric helpers ---------------------------------------------------

inline double g_inner(const MatD& g, const VecD& u, const VecD& v) {
  double s = 0;
  for (int i = 0; i < g.rows; ++i)
    for (int j = 0; j < g.cols; ++j) s += g(i, j) * u[i] * v[j];
  return s;
}

inline double g_norm(const MatD& g, const VecD& u) { return std::sqrt(g_inner(g, u, u)); }

// Gram-Schmidt orthonormal basis adapted to the splitting: first n' columns
// horizontal, last n'' vertical.
MatD adapted_orthonormal_basis(const MetricField& M, const VecD& x);

// Random unit vector with respect to g, optionally projected first.
VecD random_unit_vector(const MetricField& M, const VecD& x, std::mt19937_64& rng,
                        int project = 0);  // 0 none, 1 vertical, 2 horizontal

}  // namespace foliab
