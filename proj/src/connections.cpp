#include "foliab/connections.hpp"

namespace foliab {

namespace {

VecD contract_12(const Tensor3& t, const VecD& e, const VecD& f) {
  VecD out(t.n, 0.0);
  for (int i = 0; i < t.n; ++i)
    for (int j = 0; j < t.n; ++j) {
      if (e[j] == 0.0) continue;
      for (int k = 0; k < t.n; ++k) out[i] += t.at(i, j, k) * e[j] * f[k];
    }
  return out;
}

// [R(E,F)G]^i = R^i_{jkl} G^j E^k F^l
VecD contract_R(const Tensor4& r, const VecD& e, const VecD& f, const VecD& g) {
  VecD out(r.n, 0.0);
  for (int i = 0; i < r.n; ++i)
    for (int j = 0; j < r.n; ++j)
      for (int k = 0; k < r.n; ++k)
        for (int l = 0; l < r.n; ++l) out[i] += r.at(i, j, k, l) * g[j] * e[k] * f[l];
  return out;
}

// Contract one lower slot of a rank-4 component array with a vector in the
// derivative slot: (nabla T)^i_{jk;m} v^m.
Tensor3 contract_last(const TensorComps<double>& t, const VecD& v) {
  const int n = t.n;
  Tensor3 out(n);
  std::vector<int> idx(4, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0;
        idx[0] = i; idx[1] = j; idx[2] = k;
        for (int m = 0; m < n; ++m) {
          idx[3] = m;
          s += t.a[t.flat(idx.data())] * v[m];
        }
        out.at(i, j, k) = s;
      }
  return out;
}

MatD projected_inverse(const MetricField& M, const VecD& x, bool vertical) {
  const int n = M.spec().n_total();
  MatD gi = M.inverse_metric(x);
  MatD P = M.vertical_projector(x);
  if (!vertical) P = mat_add(MatD::identity(n), P, -1.0);
  return mat_mul(P, mat_mul(gi, mat_transpose(P)));
}

}  // namespace

TensorComps<double> covariant_tensor(const MetricField& M, BaseTensor which, int m,
                                     const VecD& x) {
  detail::BaseTensorFn f0{which};
  switch (m) {
    case 0: return f0(M, x);
    case 1: return detail::CovFn<detail::BaseTensorFn>{f0}(M, x);
    case 2:
      return detail::CovFn<detail::CovFn<detail::BaseTensorFn>>{{f0}}(M, x);
    case 3:
      return detail::CovFn<detail::CovFn<detail::CovFn<detail::BaseTensorFn>>>{{{f0}}}(M, x);
    default:
      throw OrderExceeded("covariant_tensor: order must be <= 3");
  }
}

namespace {

double contract_norm(const MetricField& M, const VecD& x, const TensorComps<double>& t,
                     const MatD* lower_metric) {
  const int n = t.n, r = t.rank;
  MatD g = M.eval_metric(x);
  MatD gi = M.inverse_metric(x);
  const MatD& low = lower_metric ? *lower_metric : gi;
  // transform one copy: lower the upper slot with g, raise lower slots with low
  std::vector<double> b(t.a.size(), 0.0);
  std::vector<int> idx(r, 0), jdx(r, 0);
  const size_t total = t.a.size();
  // slot-by-slot contraction
  std::vector<double> cur = t.a;
  for (int slot = 0; slot < r; ++slot) {
    const MatD& mtr = slot == 0 ? g : low;
    std::fill(b.begin(), b.end(), 0.0);
    size_t stride = 1;
    for (int s = slot + 1; s < r; ++s) stride *= n;
    size_t outer = total / (stride * n);
    for (size_t o = 0; o < outer; ++o)
      for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c) {
          double w = mtr(a, c);
          if (w == 0.0) continue;
          size_t ba = (o * n + a) * stride;
          size_t bc = (o * n + c) * stride;
          for (size_t q = 0; q < stride; ++q) b[ba + q] += w * cur[bc + q];
        }
    cur.swap(b);
  }
  double s = 0;
  for (size_t q = 0; q < total; ++q) s += cur[q] * t.a[q];
  return std::sqrt(std::max(0.0, s));
}

}  // namespace

double tensor_norm_full(const MetricField& M, const VecD& x, const TensorComps<double>& t) {
  return contract_norm(M, x, t, nullptr);
}

double tensor_norm_block(const MetricField& M, const VecD& x, const TensorComps<double>& t,
                         bool vertical_block) {
  MatD low = projected_inverse(M, x, vertical_block);
  return contract_norm(M, x, t, &low);
}

double covariant_norm(const MetricField& M, const VecD& x, NormTensor which, int order) {
  BaseTensor base = which == NormTensor::R   ? BaseTensor::curvature
                    : which == NormTensor::T ? BaseTensor::oneill_T
                                             : BaseTensor::oneill_A;
  TensorComps<double> t = covariant_tensor(M, base, order, x);
  if (order == 0 && which == NormTensor::T) return tensor_norm_block(M, x, t, true);
  if (order == 0 && which == NormTensor::A) return tensor_norm_block(M, x, t, false);
  return tensor_norm_full(M, x, t);
}

ConnectionCoefficients christoffel(const MetricField& M, const VecD& x, ConnectionKind kind) {
  M.require_inside(x);
  return {kind, christoffel_t(M, kind, x)};
}

TangentVector oneill_T(const MetricField& M, const TangentVector& E, const TangentVector& F) {
  const VecD& x = E.base.coords;
  M.require_inside(x);
  Tensor3 T = oneill_T_comps(M, x);
  return {E.base, contract_12(T, E.components, F.components)};
}

TangentVector oneill_A(const MetricField& M, const TangentVector& E, const TangentVector& F) {
  const VecD& x = E.base.coords;
  M.require_inside(x);
  Tensor3 A = oneill_A_comps(M, x);
  return {E.base, contract_12(A, E.components, F.components)};
}

TangentVector connection_derivative(const MetricField& M, ConnectionKind kind,
                                    const TangentVector& dir, const VectorField& F) {
  const VecD& x = dir.base.coords;
  M.require_inside(x);
  const int n = M.spec().n_total();
  Tensor3 G = christoffel_t(M, kind, x);
  VecD Fv(n, 0.0), out(n, 0.0);
  std::vector<VecD> dF(n, VecD(n, 0.0));
  for (int m = 0; m < n; ++m) {
    auto vals = F.eval(M, detail::seed_point<double>(x, m));
    for (int i = 0; i < n; ++i) {
      if (m == 0) Fv[i] = vals[i].v;
      dF[m][i] = vals[i].d;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int k = 0; k < n; ++k) {
      if (dir.components[k] == 0.0) continue;
      double c = dF[k][i];
      for (int j = 0; j < n; ++j) c += G.at(i, j, k) * Fv[j];
      s += dir.components[k] * c;
    }
    out[i] = s;
  }
  return {dir.base, out};
}

TangentVector adapted_derivative(const MetricField& M, const TangentVector& dir,
                                 const VectorField& F) {
  return connection_derivative(M, ConnectionKind::adapted, dir, F);
}

TangentVector breve_derivative(const MetricField& M, const TangentVector& dir,
                               const VectorField& F) {
  return connection_derivative(M, ConnectionKind::breve, dir, F);
}

TangentVector adapted_torsion(const MetricField& M, const TangentVector& E,
                              const TangentVector& F) {
  const VecD& x = E.base.coords;
  M.require_inside(x);
  Tensor3 tor = torsion_from_christoffel(christoffel_adapted(M, x));
  return {E.base, contract_12(tor, E.components, F.components)};
}

TangentVector curvature(const MetricField& M, ConnectionKind kind, const TangentVector& E,
                        const TangentVector& F, const TangentVector& G) {
  const VecD& x = E.base.coords;
  M.require_inside(x);
  Tensor4 R = curvature_tensor(M, kind, x);
  return {E.base, contract_R(R, E.components, F.components, G.components)};
}

VecD field_bracket(const MetricField& M, const VectorField& A, const VectorField& B,
                   const VecD& x) {
  const int n = M.spec().n_total();
  VecD Av(n), Bv(n), out(n, 0.0);
  std::vector<VecD> dA(n, VecD(n)), dB(n, VecD(n));
  for (int m = 0; m < n; ++m) {
    auto xs = detail::seed_point<double>(x, m);
    auto av = A.eval(M, xs);
    auto bv = B.eval(M, xs);
    for (int i = 0; i < n; ++i) {
      if (m == 0) { Av[i] = av[i].v; Bv[i] = bv[i].v; }
      dA[m][i] = av[i].d;
      dB[m][i] = bv[i].d;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m) out[i] += Av[m] * dB[m][i] - Bv[m] * dA[m][i];
  return out;
}

TangentVector theta_operator(const MetricField& M, const TangentVector& X,
                             const VectorField& Vf) {
  const VecD& x = X.base.coords;
  M.require_inside(x);
  MatD g = M.eval_metric(x);
  MatD P = M.vertical_projector(x);
  VecD vpart = mat_vec(P, X.components);
  if (g_norm(g, vpart) > 1e-8 * std::max(1.0, g_norm(g, X.components)))
    throw InvalidInput("theta_operator: X is not horizontal at the base point");
  VecD Vp = Vf.eval(M, x);
  TangentVector nab = adapted_derivative(M, X, Vf);
  Tensor3 T = oneill_T_comps(M, x);
  VecD tvx = contract_12(T, Vp, X.components);
  return {X.base, vsub(nab.components, tvx)};
}

TangentVector normal_connection_derivative(const MetricField& M, const TangentVector& V,
                                           const VectorField& Xf) {
  const VecD& x = V.base.coords;
  M.require_inside(x);
  const int n = M.spec().n_total();
  MatD g = M.eval_metric(x);
  MatD P = M.vertical_projector(x);
  VecD hpart = vsub(V.components, mat_vec(P, V.components));
  if (g_norm(g, hpart) > 1e-8 * std::max(1.0, g_norm(g, V.components)))
    throw InvalidInput("normal_connection_derivative: V is not vertical");
  TangentVector nab = adapted_derivative(M, V, Xf);
  Tensor3 A = oneill_A_comps(M, x);
  VecD Xp = Xf.eval(M, x);
  VecD axv = contract_12(A, Xp, V.components);
  VecD diff = vsub(nab.components, axv);
  MatD H = mat_add(MatD::identity(n), P, -1.0);
  return {V.base, mat_vec(H, diff)};
}

MatD adapted_orthonormal_basis(const MetricField& M, const VecD& x) {
  const int n = M.spec().n_total();
  const int nt = M.spec().n_transverse;
  MatD g = M.eval_metric(x);
  MatD P = M.vertical_projector(x);
  MatD basis(n, n);
  std::vector<VecD> cols;
  auto push_orthonormal = [&](VecD v) {
    for (const auto& c : cols) {
      double p = g_inner(g, v, c);
      v = axpy(-p, c, v);
    }
    double nn = g_norm(g, v);
    if (nn < 1e-12) throw DegenerateMetric("adapted basis: degenerate direction");
    cols.push_back(scale(1.0 / nn, v));
  };
  for (int i = 0; i < nt; ++i) {
    VecD e(n, 0.0);
    e[i] = 1.0;
    push_orthonormal(vsub(e, mat_vec(P, e)));  // H e_i
  }
  for (int a = nt; a < n; ++a) {
    VecD e(n, 0.0);
    e[a] = 1.0;
    push_orthonormal(e);  // already vertical
  }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) basis(i, j) = cols[j][i];
  return basis;
}

VecD random_unit_vector(const MetricField& M, const VecD& x, std::mt19937_64& rng,
                        int project) {
  const int n = M.spec().n_total();
  MatD g = M.eval_metric(x);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int attempts = 0; attempts < 64; ++attempts) {
    VecD v(n);
    for (double& c : v) c = nd(rng);
    if (project != 0) {
      MatD P = M.vertical_projector(x);
      VecD pv = mat_vec(P, v);
      v = project == 1 ? pv : vsub(v, pv);
    }
    double nn = g_norm(g, v);
    if (nn > 1e-6) return scale(1.0 / nn, v);
  }
  throw DegenerateMetric("random_unit_vector: could not draw a unit vector");
}

double curvature_difference_residual(const MetricField& M, const VecD& x, CurvatureCase c,
                                     int n_draws, std::mt19937_64& rng) {
  M.require_inside(x);
  Tensor4 Rad = curvature_tensor(M, ConnectionKind::adapted, x);
  Tensor4 Rlc = curvature_tensor(M, ConnectionKind::levi_civita, x);
  Tensor3 T = oneill_T_comps(M, x);
  Tensor3 A = oneill_A_comps(M, x);
  TensorComps<double> dT = covariant_tensor(M, BaseTensor::oneill_T, 1, x);
  TensorComps<double> dA = covariant_tensor(M, BaseTensor::oneill_A, 1, x);
  MatD g = M.eval_metric(x);

  auto op = [&](const Tensor3& t, const VecD& first) {
    // returns the endomorphism u -> t(first, u)
    return [&t, first](const VecD& u) {
      VecD out(t.n, 0.0);
      for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.n; ++j)
          for (int k = 0; k < t.n; ++k) out[i] += t.at(i, j, k) * first[j] * u[k];
      return out;
    };
  };

  double worst = 0;
  for (int d = 0; d < n_draws; ++d) {
    VecD G = random_unit_vector(M, x, rng, 0);
    VecD lhs, rhs;
    if (c == CurvatureCase::VV) {
      VecD V = random_unit_vector(M, x, rng, 1);
      VecD W = random_unit_vector(M, x, rng, 1);
      lhs = vsub(contract_R(Rad, V, W, G), contract_R(Rlc, V, W, G));
      Tensor3 dT_V = contract_last(dT, V);
      Tensor3 dT_W = contract_last(dT, W);
      auto T_V = op(T, V);
      auto T_W = op(T, W);
      rhs = vsub(contract_12(dT_W, V, G), contract_12(dT_V, W, G));
      rhs = vadd(rhs, vsub(T_V(T_W(G)), T_W(T_V(G))));
    } else if (c == CurvatureCase::XY) {
      VecD X = random_unit_vector(M, x, rng, 2);
      VecD Y = random_unit_vector(M, x, rng, 2);
      lhs = vsub(contract_R(Rad, X, Y, G), contract_R(Rlc, X, Y, G));
      Tensor3 dA_X = contract_last(dA, X);
      Tensor3 dA_Y = contract_last(dA, Y);
      auto A_X = op(A, X);
      auto A_Y = op(A, Y);
      rhs = vsub(contract_12(dA_Y, X, G), contract_12(dA_X, Y, G));
      rhs = vadd(rhs, vsub(A_X(A_Y(G)), A_Y(A_X(G))));
      VecD vxy = scale(2.0, contract_12(A, X, Y));  // V[X,Y] = 2 A_X Y
      rhs = vadd(rhs, contract_12(T, vxy, G));
    } else {
      VecD X = random_unit_vector(M, x, rng, 2);
      VecD V = random_unit_vector(M, x, rng, 1);
      lhs = vsub(contract_R(Rad, X, V, G), contract_R(Rlc, X, V, G));
      Tensor3 dT_X = contract_last(dT, X);
      Tensor3 dA_V = contract_last(dA, V);
      auto A_X = op(A, X);
      auto T_V = op(T, V);
      rhs = vsub(contract_12(dA_V, X, G), contract_12(dT_X, V, G));
      VecD tvx = contract_12(T, V, X);
      VecD axv = contract_12(A, X, V);
      rhs = vsub(rhs, contract_12(T, tvx, G));
      rhs = vadd(rhs, contract_12(A, axv, G));
      rhs = vadd(rhs, vsub(A_X(T_V(G)), T_V(A_X(G))));
    }
    worst = std::max(worst, g_norm(g, vsub(lhs, rhs)));
  }
  return worst;
}

}  // namespace foliab
