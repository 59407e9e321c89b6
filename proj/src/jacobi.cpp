#include "foliab/jacobi.hpp"

namespace foliab {

std::vector<MatD> transport_frame(const MetricField& M, ConnectionKind kind,
                                  const CurveSolution& curve, const MatD& frame0) {
  const int n = frame0.rows, nf = frame0.cols;
  std::vector<MatD> frames(curve.n_nodes(), MatD(n, nf));
  for (int c = 0; c < nf; ++c) {
    VecD col(n);
    for (int i = 0; i < n; ++i) col[i] = frame0(i, c);
    TransportSolution ts = parallel_transport(M, kind, curve, col);
    for (int k = 0; k < curve.n_nodes(); ++k)
      for (int i = 0; i < n; ++i) frames[k](i, c) = ts.vectors[k][i];
  }
  return frames;
}

namespace {

// Frame components of a chart vector with respect to a g-orthonormal frame.
VecD to_frame(const MatD& g, const MatD& frame, const VecD& vec) {
  const int n = frame.rows;
  VecD out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) s += g(a, b) * frame(a, i) * vec[b];
    out[i] = s;
  }
  return out;
}

struct JacobiCoeffs {
  MatD S;  // S^i_j = frame comps of T0(gdot, e_j)
  MatD K;  // K^i_j = frame comps of R0(gdot, e_j) gdot
};

JacobiCoeffs coeffs_at(const MetricField& M, const VecD& x, const VecD& gdot,
                       const MatD& frame) {
  const int n = static_cast<int>(x.size());
  MatD g = M.eval_metric(x);
  Tensor3 tor = torsion_from_christoffel(christoffel_adapted<double>(M, x));
  Tensor4 R = curvature_tensor<double>(M, ConnectionKind::adapted, x);
  JacobiCoeffs out{MatD(n, n), MatD(n, n)};
  for (int j = 0; j < n; ++j) {
    VecD ej(n);
    for (int i = 0; i < n; ++i) ej[i] = frame(i, j);
    VecD tv(n, 0.0), rv(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) tv[i] += tor.at(i, a, b) * gdot[a] * ej[b];
    // R0(gdot, e_j) gdot: [R(E,F)G]^i = R^i_{jkl} G^j E^k F^l with E=gdot, F=e_j, G=gdot
    for (int i = 0; i < n; ++i)
      for (int q = 0; q < n; ++q)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            rv[i] += R.at(i, q, k, l) * gdot[q] * gdot[k] * ej[l];
    VecD tf = to_frame(g, frame, tv);
    VecD rf = to_frame(g, frame, rv);
    for (int i = 0; i < n; ++i) {
      out.S(i, j) = tf[i];
      out.K(i, j) = rf[i];
    }
  }
  return out;
}

void check_leafwise(const MetricField& M, const CurveSolution& gamma) {
  if (gamma.kind != ConnectionKind::adapted)
    throw InvalidInput("solve_adapted_jacobi: gamma must be an adapted geodesic");
  const VecD& x = gamma.start_x();
  MatD g = M.eval_metric(x);
  MatD P = M.vertical_projector(x);
  VecD h = vsub(gamma.v.front(), mat_vec(P, gamma.v.front()));
  double s = g_norm(g, gamma.v.front());
  if (s == 0.0) throw InvalidInput("solve_adapted_jacobi: zero-speed geodesic");
  if (g_norm(g, h) > 1e-6 * s)
    throw InvalidInput("solve_adapted_jacobi: gamma is not leafwise");
}

}  // namespace

JacobiSolution solve_adapted_jacobi(const MetricField& M, const CurveSolution& gamma,
                                    const VecD& X0, const VecD& Y0) {
  check_leafwise(M, gamma);
  const int n = M.spec().n_total();
  const int nn = gamma.n_nodes();

  JacobiSolution sol;
  sol.gamma = gamma;

  const VecD& x0 = gamma.start_x();
  MatD g0 = M.eval_metric(x0);
  MatD P0 = M.vertical_projector(x0);

  VecD Y0v = mat_vec(P0, Y0);
  double change = g_norm(g0, vsub(Y0, Y0v));
  double scale_ref = std::max(1.0, g_norm(g0, Y0));
  if (change > 1e-3 * scale_ref)
    throw InvalidInput("solve_adapted_jacobi: Y0 is not vertical");
  sol.y0_projected = change > 1e-8 * scale_ref;

  MatD basis0 = adapted_orthonormal_basis(M, x0);
  sol.frames = transport_frame(M, ConnectionKind::adapted, gamma, basis0);
  sol.speed = g_norm(g0, gamma.v.front());

  // coefficients at nodes and midpoints (RK4 stage times)
  std::vector<JacobiCoeffs> at_node(nn), at_mid(std::max(0, nn - 1));
  for (int k = 0; k < nn; ++k)
    at_node[k] = coeffs_at(M, gamma.x[k], gamma.v[k], sol.frames[k]);
  for (int k = 0; k + 1 < nn; ++k) {
    double tm = 0.5 * (gamma.t[k] + gamma.t[k + 1]);
    VecD xm = gamma.eval_x(tm);
    VecD vm = gamma.eval_v(tm);
    MatD fm(n, n);
    for (int c = 0; c < n; ++c)
      for (int i = 0; i < n; ++i)
        fm(i, c) = 0.5 * (sol.frames[k](i, c) + sol.frames[k + 1](i, c));
    at_mid[k] = coeffs_at(M, xm, vm, fm);
  }

  sol.X_frame.assign(nn, VecD(n, 0.0));
  sol.Y_frame.assign(nn, VecD(n, 0.0));
  sol.gdot_frame.assign(nn, VecD(n, 0.0));
  for (int k = 0; k < nn; ++k) {
    MatD gk = M.eval_metric(gamma.x[k]);
    sol.gdot_frame[k] = to_frame(gk, sol.frames[k], gamma.v[k]);
  }

  VecD X = to_frame(g0, basis0, X0);
  VecD Y = to_frame(g0, basis0, Y0v);
  sol.X_frame[0] = X;
  sol.Y_frame[0] = Y;

  auto rhs = [&](const JacobiCoeffs& cf, const VecD& Xv, const VecD& Yv, VecD& dX, VecD& dY) {
    for (int i = 0; i < n; ++i) {
      double sx = Yv[i], sy = 0;
      for (int j = 0; j < n; ++j) {
        sx += cf.S(i, j) * Xv[j];
        sy += cf.K(i, j) * Xv[j];
      }
      dX[i] = sx;
      dY[i] = sy;
    }
  };

  VecD k1x(n), k1y(n), k2x(n), k2y(n), k3x(n), k3y(n), k4x(n), k4y(n), tx(n), ty(n);
  for (int k = 0; k + 1 < nn; ++k) {
    const double h = gamma.t[k + 1] - gamma.t[k];
    rhs(at_node[k], X, Y, k1x, k1y);
    for (int i = 0; i < n; ++i) { tx[i] = X[i] + 0.5 * h * k1x[i]; ty[i] = Y[i] + 0.5 * h * k1y[i]; }
    rhs(at_mid[k], tx, ty, k2x, k2y);
    for (int i = 0; i < n; ++i) { tx[i] = X[i] + 0.5 * h * k2x[i]; ty[i] = Y[i] + 0.5 * h * k2y[i]; }
    rhs(at_mid[k], tx, ty, k3x, k3y);
    for (int i = 0; i < n; ++i) { tx[i] = X[i] + h * k3x[i]; ty[i] = Y[i] + h * k3y[i]; }
    rhs(at_node[k + 1], tx, ty, k4x, k4y);
    for (int i = 0; i < n; ++i) {
      X[i] += h / 6.0 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
      Y[i] += h / 6.0 * (k1y[i] + 2 * k2y[i] + 2 * k3y[i] + k4y[i]);
    }
    sol.X_frame[k + 1] = X;
    sol.Y_frame[k + 1] = Y;
  }

  // growth constant: C = max_t max{3, 2|T0|^2 s^2 + 1 + |R0|^2 s^4}
  double C = 3.0;
  const double s2 = sol.speed * sol.speed;
  for (int k = 0; k < nn; ++k) {
    const VecD& x = gamma.x[k];
    Tensor3 tor = torsion_from_christoffel(christoffel_adapted<double>(M, x));
    Tensor4 R = curvature_tensor<double>(M, ConnectionKind::adapted, x);
    TensorComps<double> tc(n, 3);
    tc.a = tor.a;
    TensorComps<double> rc(n, 4);
    rc.a = R.a;
    double nt = tensor_norm_full(M, x, tc);
    double nr = tensor_norm_full(M, x, rc);
    C = std::max(C, 2 * nt * nt * s2 + 1 + nr * nr * s2 * s2);
  }
  sol.C_const = C;
  return sol;
}

std::vector<VecD> variation_field(const MetricField& M, const CurveSolution& gamma,
                                  const VecD& X0, const VecD& Y0, double h) {
  if (h <= 0 || h > 1e-2)
    throw InvalidInput("variation_field: h must lie in (0, 1e-2]");
  check_leafwise(M, gamma);
  const int n = M.spec().n_total();
  const double span = gamma.t.back() - gamma.t.front();
  const double step = gamma.t.size() > 1 ? gamma.t[1] - gamma.t[0] : 1e-3;

  const VecD& p0 = gamma.start_x();
  MatD vw(n, 2);
  for (int i = 0; i < n; ++i) {
    vw(i, 0) = gamma.v.front()[i];  // V(0) = gdot(a)
    vw(i, 1) = Y0[i];               // W(0) = Y0
  }

  auto branch = [&](double s_sign) {
    VecD vel = scale(s_sign, X0);
    CurveWithFrame xi = integrate_geodesic_with_frame(M, ConnectionKind::adapted, Point(p0),
                                                      vel, h, std::min(step, h / 8), vw);
    if (xi.curve.boundary_exit)
      throw BoundaryExit("variation_field: construction left the chart");
    VecD xs = xi.curve.end_x();
    const MatD& fr = xi.frames.back();
    const double s = s_sign * h;
    VecD u(n);
    for (int i = 0; i < n; ++i) u[i] = fr(i, 0) + s * fr(i, 1);
    CurveSolution c = integrate_geodesic(M, ConnectionKind::adapted, Point(xs), u, span, step);
    if (c.boundary_exit)
      throw BoundaryExit("variation_field: variation geodesic left the chart");
    return c;
  };

  CurveSolution plus = branch(1.0);
  CurveSolution minus = branch(-1.0);

  std::vector<VecD> field(gamma.t.size(), VecD(n, 0.0));
  for (size_t k = 0; k < gamma.t.size(); ++k) {
    double tau = gamma.t[k] - gamma.t.front();
    VecD xp = plus.eval_x(tau);
    VecD xm = minus.eval_x(tau);
    for (int i = 0; i < n; ++i) field[k][i] = (xp[i] - xm[i]) / (2 * h);
  }
  return field;
}

double growth_bound_margin(const JacobiSolution& sol) {
  auto sq = [](const VecD& v) {
    double s = 0;
    for (double c : v) s += c * c;
    return s;
  };
  const double span = sol.gamma.t.back() - sol.gamma.t.front();
  double initial = sq(sol.X_frame.front()) + sq(sol.Y_frame.front());
  double final_v = sq(sol.X_frame.back()) + sq(sol.Y_frame.back());
  return std::exp(sol.C_const * span) * initial - final_v;
}

JacobiSolution normalize_jacobi(const JacobiSolution& sol) {
  if (sol.speed <= 0)
    throw InvalidInput("normalize_jacobi: zero-speed geodesic");
  const double c = dot(sol.Y_frame.front(), sol.gdot_frame.front()) / (sol.speed * sol.speed);
  JacobiSolution out = sol;
  for (int k = 0; k < sol.n_nodes(); ++k) {
    double tau = sol.gamma.t[k] - sol.gamma.t.front();
    out.X_frame[k] = axpy(-c * tau, sol.gdot_frame[k], sol.X_frame[k]);
    out.Y_frame[k] = axpy(-c, sol.gdot_frame[k], sol.Y_frame[k]);
  }
  return out;
}

}  // namespace foliab
