#include "foliab/geodesic.hpp"

namespace foliab {

namespace {

struct HermiteSeg {
  static VecD eval(const VecD& y0, const VecD& m0, const VecD& y1, const VecD& m1,
                   double h, double u) {
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    VecD out(y0.size());
    for (size_t i = 0; i < y0.size(); ++i)
      out[i] = h00 * y0[i] + h10 * h * m0[i] + h01 * y1[i] + h11 * h * m1[i];
    return out;
  }
};

int locate(const std::vector<double>& t, double tt) {
  if (tt <= t.front()) return 0;
  if (tt >= t.back()) return static_cast<int>(t.size()) - 2;
  auto it = std::upper_bound(t.begin(), t.end(), tt);
  return static_cast<int>(it - t.begin()) - 1;
}

VecD geodesic_acc(const Tensor3& G, const VecD& v) {
  const int n = G.n;
  VecD a(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += G.at(i, j, k) * v[j] * v[k];
    a[i] = -s;
  }
  return a;
}

}  // namespace

VecD CurveSolution::eval_x(double tt) const {
  if (t.size() == 1) return x[0];
  int s = locate(t, tt);
  double h = t[s + 1] - t[s];
  return HermiteSeg::eval(x[s], v[s], x[s + 1], v[s + 1], h, (tt - t[s]) / h);
}

VecD CurveSolution::eval_v(double tt) const {
  if (t.size() == 1) return v[0];
  int s = locate(t, tt);
  double h = t[s + 1] - t[s];
  return HermiteSeg::eval(v[s], acc[s], v[s + 1], acc[s + 1], h, (tt - t[s]) / h);
}

CurveSolution CurveSolution::reversed() const {
  CurveSolution r;
  r.kind = kind;
  r.boundary_exit = boundary_exit;
  r.t_end_requested = t.back() - t.front();
  const int m = n_nodes();
  r.t.resize(m);
  r.x.resize(m);
  r.v.resize(m);
  r.acc.resize(m);
  for (int i = 0; i < m; ++i) {
    r.t[i] = t.back() - t[m - 1 - i];
    r.x[i] = x[m - 1 - i];
    r.v[i] = scale(-1.0, v[m - 1 - i]);
    r.acc[i] = acc[m - 1 - i];
  }
  return r;
}

namespace {

// Shared fixed-step RK4 driver over the state (x, v, columns of frame).
CurveWithFrame integrate_impl(const MetricField& M, ConnectionKind kind, const Point& p,
                              const VecD& v0, double t_end, double step, const MatD* frame0) {
  if (step <= 0) throw InvalidInput("integrate_geodesic: step must be positive");
  if (t_end < 0) throw InvalidInput("integrate_geodesic: t_end must be nonnegative");
  M.require_inside(p.coords);
  const int n = M.spec().n_total();
  const int nf = frame0 ? frame0->cols : 0;
  const int dim = 2 * n + nf * n;

  auto gamma_at = [&](const VecD& xx) { return christoffel_t<double>(M, kind, xx); };

  auto rhs = [&](const VecD& y, VecD& dy) {
    VecD xx(y.begin(), y.begin() + n);
    VecD vv(y.begin() + n, y.begin() + 2 * n);
    Tensor3 G = gamma_at(xx);
    for (int i = 0; i < n; ++i) dy[i] = vv[i];
    VecD a = geodesic_acc(G, vv);
    for (int i = 0; i < n; ++i) dy[n + i] = a[i];
    for (int c = 0; c < nf; ++c) {
      const double* u = y.data() + 2 * n + c * n;
      double* du = dy.data() + 2 * n + c * n;
      for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) s += G.at(i, j, k) * u[j] * vv[k];
        du[i] = -s;
      }
    }
  };

  CurveWithFrame out;
  CurveSolution& c = out.curve;
  c.kind = kind;
  c.t_end_requested = t_end;

  VecD y(dim, 0.0);
  std::copy(p.coords.begin(), p.coords.end(), y.begin());
  std::copy(v0.begin(), v0.end(), y.begin() + n);
  if (frame0)
    for (int col = 0; col < nf; ++col)
      for (int i = 0; i < n; ++i) y[2 * n + col * n + i] = (*frame0)(i, col);

  auto push_node = [&](double tt, const VecD& yy) {
    VecD xx(yy.begin(), yy.begin() + n);
    VecD vv(yy.begin() + n, yy.begin() + 2 * n);
    c.t.push_back(tt);
    c.x.push_back(xx);
    c.v.push_back(vv);
    c.acc.push_back(geodesic_acc(gamma_at(xx), vv));
    if (frame0) {
      MatD fr(n, nf);
      for (int col = 0; col < nf; ++col)
        for (int i = 0; i < n; ++i) fr(i, col) = yy[2 * n + col * n + i];
      out.frames.push_back(fr);
    }
  };

  push_node(0.0, y);
  if (t_end == 0) return out;

  const long n_steps = std::max<long>(1, static_cast<long>(std::ceil(t_end / step - 1e-12)));
  const double h = t_end / static_cast<double>(n_steps);
  VecD k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

  for (long s = 0; s < n_steps; ++s) {
    rhs(y, k1);
    for (int i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(tmp, k2);
    for (int i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(tmp, k3);
    for (int i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(tmp, k4);
    VecD ynew(dim);
    for (int i = 0; i < dim; ++i)
      ynew[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    VecD xnew(ynew.begin(), ynew.begin() + n);
    if (!M.domain().contains(xnew)) {
      c.boundary_exit = true;
      return out;
    }
    y.swap(ynew);
    push_node(h * static_cast<double>(s + 1), y);
  }
  return out;
}

}  // namespace

CurveSolution integrate_geodesic(const MetricField& M, ConnectionKind kind, const Point& p,
                                 const VecD& v, double t_end, double step) {
  return integrate_impl(M, kind, p, v, t_end, step, nullptr).curve;
}

CurveWithFrame integrate_geodesic_with_frame(const MetricField& M, ConnectionKind kind,
                                             const Point& p, const VecD& v, double t_end,
                                             double step, const MatD& frame0) {
  return integrate_impl(M, kind, p, v, t_end, step, &frame0);
}

TransportSolution parallel_transport(const MetricField& M, ConnectionKind kind,
                                     const CurveSolution& curve, const VecD& v0) {
  const int n = M.spec().n_total();
  TransportSolution out;
  out.t = curve.t;
  out.vectors.resize(curve.n_nodes());
  VecD u = v0;
  out.vectors[0] = u;

  auto rhs = [&](double tt, const VecD& uu, VecD& du) {
    VecD xx = curve.eval_x(tt);
    VecD vv = curve.eval_v(tt);
    Tensor3 G = christoffel_t<double>(M, kind, xx);
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) s += G.at(i, j, k) * uu[j] * vv[k];
      du[i] = -s;
    }
  };

  VecD k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s + 1 < curve.n_nodes(); ++s) {
    const double h = curve.t[s + 1] - curve.t[s];
    const double t0 = curve.t[s];
    rhs(t0, u, k1);
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
    rhs(t0 + 0.5 * h, tmp, k2);
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
    rhs(t0 + 0.5 * h, tmp, k3);
    for (int i = 0; i < n; ++i) tmp[i] = u[i] + h * k3[i];
    rhs(t0 + h, tmp, k4);
    for (int i = 0; i < n; ++i) u[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    out.vectors[s + 1] = u;
  }
  return out;
}

Point adapted_exp(const MetricField& M, const Point& p, const VecD& v, double step) {
  CurveSolution c = integrate_geodesic(M, ConnectionKind::adapted, p, v, 1.0, step);
  if (c.boundary_exit)
    throw BoundaryExit("adapted_exp: geodesic left the chart domain");
  return Point(p.chart_id, c.end_x());
}

CurveSolution integrate_base_geodesic(const MetricField& base, const VecD& x0, const VecD& v0,
                                      double t_end, double step) {
  return integrate_geodesic(base, ConnectionKind::levi_civita, Point(x0), v0, t_end, step);
}

double submersion_commutation_residual(const FixtureDef& fix, const MetricField& M,
                                       const Point& p, const VecD& v, double step) {
  if (!fix.submersion)
    throw UnsupportedFixture("fixture '" + fix.name + "' declares no submersion");
  const Submersion& sub = *fix.submersion;
  Point q = adapted_exp(M, p, v, step);
  VecD lhs = sub.project(q.coords);

  MetricField base = sub.base_metric(M.diff_config());
  VecD bx0 = sub.project(p.coords);
  VecD bv0 = sub.pushforward(p.coords, v);
  CurveSolution bc = integrate_base_geodesic(base, bx0, bv0, 1.0, step);
  if (bc.boundary_exit)
    throw BoundaryExit("submersion_commutation_residual: base geodesic left the domain");
  VecD rhs = bc.end_x();
  return norm_inf(vsub(lhs, rhs));
}

bool plaque_criterion_check(const FixtureDef& fix, const MetricField& M, const Point& p,
                            const VecD& E, const VecD& F, double tol, double step) {
  if (!fix.submersion)
    throw UnsupportedFixture("fixture '" + fix.name + "' declares no submersion");
  const Submersion& sub = *fix.submersion;
  VecD a = sub.project(adapted_exp(M, p, E, step).coords);
  VecD b = sub.project(adapted_exp(M, p, F, step).coords);
  return norm_inf(vsub(a, b)) <= tol;
}

}  // namespace foliab
