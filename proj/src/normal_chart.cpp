#include "foliab/normal_chart.hpp"

namespace foliab {

namespace {

VecD to_frame_comps(const MatD& g, const MatD& frame, const VecD& vec) {
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

// Adaptive Simpson on a vector-valued integrand with sup-norm error control.
template <class F>
VecD adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 12) {
  VecD fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  struct Rec {
    const F& f;
    double tol;
    int max_depth;
    VecD run(double a, double b, const VecD& fa, const VecD& fm, const VecD& fb,
             double tol_here, int depth) {
      double m = 0.5 * (a + b);
      VecD fl = f(0.5 * (a + m)), fr = f(0.5 * (m + b));
      const double h = b - a;
      VecD whole(fa.size()), left(fa.size()), right(fa.size());
      double err = 0;
      for (size_t i = 0; i < fa.size(); ++i) {
        whole[i] = h / 6 * (fa[i] + 4 * fm[i] + fb[i]);
        left[i] = h / 12 * (fa[i] + 4 * fl[i] + fm[i]);
        right[i] = h / 12 * (fm[i] + 4 * fr[i] + fb[i]);
        err = std::max(err, std::fabs(left[i] + right[i] - whole[i]));
      }
      if (depth >= max_depth || err < 15 * tol_here) {
        VecD out(fa.size());
        for (size_t i = 0; i < fa.size(); ++i)
          out[i] = left[i] + right[i] + (left[i] + right[i] - whole[i]) / 15;
        return out;
      }
      VecD l = run(a, m, fa, fl, fm, tol_here / 2, depth + 1);
      VecD r = run(m, b, fm, fr, fb, tol_here / 2, depth + 1);
      for (size_t i = 0; i < l.size(); ++i) l[i] += r[i];
      return l;
    }
  } rec{f, tol, max_depth};
  return rec.run(a, b, fa, fm, fb, tol, 0);
}

// Five-point central stencils for phi(t0), phi'(t0), phi''(t0) from samples at
// t0 + {-2h,-h,0,h,2h}.
struct RayJet {
  double value, d1, d2;
};
RayJet ray_jet(const std::array<double, 5>& phi, double h) {
  RayJet j;
  j.value = phi[2];
  j.d1 = (-phi[4] + 8 * phi[3] - 8 * phi[1] + phi[0]) / (12 * h);
  j.d2 = (-phi[4] + 16 * phi[3] - 30 * phi[2] + 16 * phi[1] - phi[0]) / (12 * h * h);
  return j;
}

}  // namespace

NormalChart::NormalChart(const MetricField& M, Point center, NormalChartConfig cfg)
    : M_(M), center_(std::move(center)), cfg_(cfg) {
  M_.require_inside(center_.coords);
  basis_ = adapted_orthonormal_basis(M_, center_.coords);
  const int n = n_total();
  const int nt = n_transverse();

  for (int attempt = 0;; ++attempt) {
    VecD lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      double r = i < nt ? cfg_.r_transverse : cfg_.r_leafwise;
      lo[i] = -r;
      hi[i] = r;
    }
    box_ = Box(lo, hi);
    bool ok = true;
    for (int mask = 0; mask < (1 << n) && ok; ++mask) {
      VecD corner(n);
      for (int i = 0; i < n; ++i)
        corner[i] = ((mask >> i) & 1) ? hi[i] : lo[i];
      try {
        solve_at(corner);
      } catch (const BoundaryExit&) {
        ok = false;
      }
    }
    if (ok) break;
    if (attempt >= cfg_.max_halvings)
      throw ChartTooLarge("normal chart at the given center exceeds the ambient chart "
                          "even after radius halvings");
    cfg_.r_transverse *= 0.5;
    cfg_.r_leafwise *= 0.5;
    std::lock_guard<std::mutex> lk(memo_mu_);
    memo_.clear();
  }

  DifferentiationConfig dc;
  dc.mode = DiffMode::finite_difference;
  dc.fd_step = cfg_.fd_step;
  chart_metric_ = MetricField(
      M_.spec(), box_, [this](const VecD& x) { return metric_pullback(x); }, dc,
      "normal-chart(" + M_.name() + ")");
}

NormalChart::Solve NormalChart::solve_at(const VecD& x) const {
  {
    std::lock_guard<std::mutex> lk(memo_mu_);
    auto it = memo_.find(x);
    if (it != memo_.end()) return it->second;
  }
  const int n = n_total();
  const int nt = n_transverse();
  double tnorm = 0, lnorm = 0;
  for (int i = 0; i < nt; ++i) tnorm += x[i] * x[i];
  for (int i = nt; i < n; ++i) lnorm += x[i] * x[i];

  Solve s{center_.coords, basis_};
  if (tnorm > 0) {
    VecD xt(n, 0.0);
    for (int i = 0; i < nt; ++i) xt[i] = x[i];
    VecD v = mat_vec(basis_, xt);
    CurveWithFrame leg =
        integrate_geodesic_with_frame(M_, ConnectionKind::adapted, center_, v, 1.0,
                                      cfg_.geo_step, basis_);
    if (leg.curve.boundary_exit)
      throw BoundaryExit("normal chart: transverse geodesic left the ambient chart");
    s.point = leg.curve.end_x();
    s.frame = leg.frames.back();
  }
  if (lnorm > 0) {
    VecD xl(n, 0.0);
    for (int i = nt; i < n; ++i) xl[i] = x[i];
    VecD w = mat_vec(s.frame, xl);
    CurveWithFrame leg = integrate_geodesic_with_frame(
        M_, ConnectionKind::adapted, Point(center_.chart_id, s.point), w, 1.0,
        cfg_.geo_step, s.frame);
    if (leg.curve.boundary_exit)
      throw BoundaryExit("normal chart: leafwise geodesic left the ambient chart");
    s.point = leg.curve.end_x();
    s.frame = leg.frames.back();
  }
  std::lock_guard<std::mutex> lk(memo_mu_);
  memo_.emplace(x, s);
  return s;
}

VecD NormalChart::forward(const VecD& x) const { return solve_at(x).point; }
MatD NormalChart::frame(const VecD& x) const { return solve_at(x).frame; }

MatD NormalChart::jacobian(const VecD& x) const {
  const int n = n_total();
  const double h = cfg_.fd_step;
  MatD J(n, n);
  for (int j = 0; j < n; ++j) {
    VecD xp(x), xm(x);
    xp[j] += h;
    xm[j] -= h;
    VecD fp = forward(xp), fm = forward(xm);
    for (int i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2 * h);
  }
  return J;
}

NormalChart::FrameCoeffs NormalChart::frame_coefficients(const VecD& x) const {
  const int n = n_total();
  MatD J = jacobian(x);
  MatD S = frame(x);
  LU<double> lu(J);
  MatD b(n, n);
  VecD col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = S(i, j);
    VecD bj = lu.solve(col);
    for (int i = 0; i < n; ++i) b(i, j) = bj[i];
  }
  return {mat_inverse(b), b};
}

MatD NormalChart::metric_in_chart(const VecD& x) const {
  MatD a = frame_coefficients(x).a;
  return mat_mul(mat_transpose(a), a);
}

MatD NormalChart::metric_pullback(const VecD& x) const {
  MatD J = jacobian(x);
  MatD g = M_.eval_metric(forward(x));
  return mat_mul(mat_transpose(J), mat_mul(g, J));
}

std::optional<VecD> NormalChart::inverse(const VecD& ambient, double tol, int max_iter) const {
  const int n = n_total();
  VecD x(n, 0.0);
  VecD r = vsub(forward(x), ambient);
  double rn = norm2(r);
  for (int it = 0; it < max_iter; ++it) {
    if (rn < tol) return x;
    MatD J = jacobian(x);
    VecD delta;
    try {
      delta = lin_solve(J, r);
    } catch (const std::runtime_error&) {
      return std::nullopt;
    }
    double lambda = 1.0;
    bool improved = false;
    for (int half = 0; half < 8; ++half) {
      VecD cand = axpy(-lambda, delta, x);
      if (box_.contains(cand)) {
        try {
          VecD rc = vsub(forward(cand), ambient);
          double rcn = norm2(rc);
          if (rcn < rn) {
            x = cand;
            r = rc;
            rn = rcn;
            improved = true;
            break;
          }
        } catch (const BoundaryExit&) {
        }
      }
      lambda *= 0.5;
    }
    if (!improved) return std::nullopt;
  }
  return rn < tol ? std::optional<VecD>(x) : std::nullopt;
}

Tensor3 NormalChart::chart_adapted_christoffel(const VecD& x) const {
  return christoffel_adapted<double>(chart_metric_, x);
}

Tensor4 NormalChart::chart_adapted_curvature(const VecD& x) const {
  return curvature_tensor<double>(chart_metric_, ConnectionKind::adapted, x);
}

Tensor3 NormalChart::frame_christoffel(const VecD& x) const {
  const int n = n_total();
  const double h = cfg_.fd_step;
  FrameCoeffs fc = frame_coefficients(x);
  Tensor3 Ghat = chart_adapted_christoffel(x);
  std::vector<MatD> db(n);  // db[k] = d_k b
  for (int k = 0; k < n; ++k) {
    VecD xp(x), xm(x);
    xp[k] += h;
    xm[k] -= h;
    MatD bp = frame_coefficients(xp).b;
    MatD bm = frame_coefficients(xm).b;
    db[k] = MatD(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) db[k](i, j) = (bp(i, j) - bm(i, j)) / (2 * h);
  }
  Tensor3 G(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0;
        for (int l = 0; l < n; ++l) {
          double inner = db[k](l, j);
          for (int m = 0; m < n; ++m) inner += Ghat.at(l, m, k) * fc.b(m, j);
          s += fc.a(i, l) * inner;
        }
        G.at(i, j, k) = s;
      }
  return G;
}

Tensor4 NormalChart::frame_curvature(const VecD& x) const {
  const int n = n_total();
  FrameCoeffs fc = frame_coefficients(x);
  Tensor4 R = chart_adapted_curvature(x);
  Tensor4 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0;
          for (int m = 0; m < n; ++m)
            for (int b = 0; b < n; ++b) s += fc.a(i, m) * R.at(m, b, k, l) * fc.b(b, j);
          out.at(i, j, k, l) = s;
        }
  return out;
}

Tensor3 NormalChart::frame_torsion(const VecD& x) const {
  const int n = n_total();
  FrameCoeffs fc = frame_coefficients(x);
  Tensor3 Ghat = chart_adapted_christoffel(x);
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        double s = 0;
        for (int m = 0; m < n; ++m) s += fc.a(i, m) * (Ghat.at(m, l, k) - Ghat.at(m, k, l));
        out.at(i, k, l) = s;
      }
  return out;
}

GammaVanishing gamma_vanishing_residuals(const NormalChart& chart, int transversal_samples) {
  const int n = chart.n_total();
  const int nt = chart.n_transverse();
  VecD zero(n, 0.0);
  Tensor3 G0 = chart.frame_christoffel(zero);
  double at_center = 0;
  for (double v : G0.a) at_center = std::max(at_center, std::fabs(v));

  double leafwise = 0;
  const double r = 0.8 * chart.r_transverse();
  const int ns = std::max(1, transversal_samples);
  std::vector<VecD> samples;
  if (nt == 1) {
    for (int s = 0; s < ns; ++s) {
      VecD x(n, 0.0);
      x[0] = -r + 2 * r * (s + 0.5) / ns;
      samples.push_back(x);
    }
  } else {
    for (int s = 0; s < ns; ++s) {
      VecD x(n, 0.0);
      double ang = 2 * 3.14159265358979323846 * s / ns;
      x[0] = r * std::cos(ang);
      x[1] = r * std::sin(ang);
      samples.push_back(x);
    }
  }
  for (const auto& x : samples) {
    Tensor3 G = chart.frame_christoffel(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = nt; k < n; ++k)
          leafwise = std::max(leafwise, std::fabs(G.at(i, j, k)));
  }
  return {at_center, leafwise};
}

namespace {

// Evaluates the frame Christoffels along the ray t -> scale(t) and returns
// the stencil jets per component.
struct RaySamples {
  std::array<Tensor3, 5> gamma;
};

RaySamples gamma_ray_samples(const NormalChart& chart, const VecD& x, bool leafwise_ray,
                             double h) {
  const int n = chart.n_total();
  const int nt = chart.n_transverse();
  RaySamples out;
  for (int s = 0; s < 5; ++s) {
    double t = 1.0 + (s - 2) * h;
    VecD xt(x);
    for (int i = 0; i < n; ++i) {
      bool is_leaf = i >= nt;
      if (leafwise_ray == is_leaf) xt[i] = t * x[i];
    }
    out.gamma[s] = chart.frame_christoffel(xt);
  }
  return out;
}

}  // namespace

std::optional<double> radial_identity_residual(const NormalChart& chart, RadialVariant v,
                                               const VecD& x, bool integral_form) {
  const int n = chart.n_total();
  const int nt = chart.n_transverse();
  double tnorm = 0, lnorm = 0;
  for (int i = 0; i < nt; ++i) tnorm += x[i] * x[i];
  for (int i = nt; i < n; ++i) lnorm += x[i] * x[i];

  if (v == RadialVariant::plain_all_four) {
    // non-underlined version: same identities on the plain Christoffels
    bool transverse_ray = lnorm < 1e-20;
    if ((transverse_ray ? tnorm : lnorm) < 1e-20) return std::nullopt;
    const double h = chart.config().ray_step;
    double worst = 0;
    std::array<Tensor3, 5> G;
    for (int s = 0; s < 5; ++s) {
      double t = 1.0 + (s - 2) * h;
      VecD xt(x);
      for (int i = 0; i < n; ++i) {
        bool is_leaf = i >= nt;
        if ((!transverse_ray) == is_leaf) xt[i] = t * x[i];
      }
      G[s] = chart.chart_adapted_christoffel(xt);
    }
    Tensor4 R = chart.chart_adapted_curvature(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          std::array<double, 5> phi;
          for (int s = 0; s < 5; ++s) phi[s] = G[s].at(i, j, k);
          RayJet jet = ray_jet(phi, h);
          double rhs = 0;
          if (transverse_ray)
            for (int l = 0; l < nt; ++l) rhs += R.at(i, j, l, k) * x[l];
          else
            for (int l = nt; l < n; ++l) rhs += R.at(i, j, l, k) * x[l];
          bool keeps_gamma = transverse_ray ? (k < nt) : (k >= nt);
          double lhs = keeps_gamma ? jet.d1 + jet.value : jet.d1;
          worst = std::max(worst, std::fabs(lhs - rhs));
        }
    return worst;
  }

  const bool transverse_ray = v == RadialVariant::underlined_transverse_k_le ||
                              v == RadialVariant::underlined_transverse_k_gt;
  const bool k_le = v == RadialVariant::underlined_transverse_k_le ||
                    v == RadialVariant::underlined_leafwise_k_le;
  if (transverse_ray && lnorm > 1e-16)
    throw InvalidInput("radial_identity_residual: transverse variants require x'' = 0");
  if ((transverse_ray ? tnorm : lnorm) < 1e-20) return std::nullopt;

  double worst = 0;
  if (!integral_form) {
    const double h = chart.config().ray_step;
    RaySamples rs = gamma_ray_samples(chart, x, !transverse_ray, h);
    Tensor4 R = chart.frame_curvature(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          if (k_le != (k < nt)) continue;
          std::array<double, 5> phi;
          for (int s = 0; s < 5; ++s) phi[s] = rs.gamma[s].at(i, j, k);
          RayJet jet = ray_jet(phi, h);
          double rhs = 0;
          if (transverse_ray)
            for (int l = 0; l < nt; ++l) rhs += R.at(i, j, l, k) * x[l];
          else
            for (int l = nt; l < n; ++l) rhs += R.at(i, j, l, k) * x[l];
          // Gamma term present when the ray scaling acts on the dx^k factor
          bool keeps_gamma = transverse_ray ? k_le : !k_le;
          double lhs = keeps_gamma ? jet.d1 + jet.value : jet.d1;
          worst = std::max(worst, std::fabs(lhs - rhs));
        }
    return worst;
  }

  // integral form: quadrature of curvature coefficients along the ray
  auto curvature_flat = [&](double tau) {
    VecD xt(x);
    for (int i = 0; i < n; ++i) {
      bool is_leaf = i >= nt;
      if (transverse_ray != is_leaf) xt[i] = tau * x[i];
    }
    Tensor4 R = chart.frame_curvature(xt);
    return R.a;
  };
  bool weight_tau = transverse_ray ? k_le : !k_le;
  auto weighted = [&](double tau) {
    VecD f = curvature_flat(tau);
    if (weight_tau)
      for (double& c : f) c *= tau;
    return f;
  };
  VecD integral = adaptive_simpson(weighted, 0.0, 1.0, chart.config().quad_tol);
  Tensor4 I(n);
  I.a = integral;
  Tensor3 Gx = chart.frame_christoffel(x);
  Tensor3 Gbase(n);
  if (!transverse_ray && k_le) {
    VecD x0(x);
    for (int i = nt; i < n; ++i) x0[i] = 0.0;
    Gbase = chart.frame_christoffel(x0);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (k_le != (k < nt)) continue;
        double rhs = 0;
        if (transverse_ray)
          for (int l = 0; l < nt; ++l) rhs += I.at(i, j, l, k) * x[l];
        else
          for (int l = nt; l < n; ++l) rhs += I.at(i, j, l, k) * x[l];
        if (!transverse_ray && k_le) rhs += Gbase.at(i, j, k);
        worst = std::max(worst, std::fabs(Gx.at(i, j, k) - rhs));
      }
  return worst;
}

Tensor4 F_tensor(const NormalChart& chart, const VecD& x, int route) {
  const int n = chart.n_total();
  const double h = chart.config().fd_step;
  Tensor3 Ghat = chart.chart_adapted_christoffel(x);
  Tensor3 Tu = chart.frame_torsion(x);
  Tensor3 That = torsion_from_christoffel(Ghat);

  // (T0^{ul i})_{kj;l}: covariant derivative of the frame-component 2-forms
  Tensor4 DT(n);  // DT.at(i,k,j,l) = (T0^{ul i})_{kj;l}
  if (route == 0) {
    std::vector<Tensor3> dT(n);
    for (int l = 0; l < n; ++l) {
      VecD xp(x), xm(x);
      xp[l] += h;
      xm[l] -= h;
      Tensor3 Tp = chart.frame_torsion(xp);
      Tensor3 Tm = chart.frame_torsion(xm);
      dT[l] = Tensor3(n);
      for (size_t q = 0; q < Tp.a.size(); ++q) dT[l].a[q] = (Tp.a[q] - Tm.a[q]) / (2 * h);
    }
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            double s = dT[l].at(i, k, j);
            for (int al = 0; al < n; ++al)
              s -= Ghat.at(al, k, l) * Tu.at(i, al, j) + Ghat.at(al, j, l) * Tu.at(i, k, al);
            DT.at(i, k, j, l) = s;
          }
  } else {
    // full frame covariant derivative minus the frame-index correction
    std::vector<Tensor3> dThat(n);
    for (int l = 0; l < n; ++l) {
      VecD xp(x), xm(x);
      xp[l] += h;
      xm[l] -= h;
      Tensor3 Gp = chart.chart_adapted_christoffel(xp);
      Tensor3 Gm = chart.chart_adapted_christoffel(xm);
      Tensor3 Tp = torsion_from_christoffel(Gp);
      Tensor3 Tm = torsion_from_christoffel(Gm);
      dThat[l] = Tensor3(n);
      for (size_t q = 0; q < Tp.a.size(); ++q)
        dThat[l].a[q] = (Tp.a[q] - Tm.a[q]) / (2 * h);
    }
    NormalChart::FrameCoeffs fc = chart.frame_coefficients(x);
    Tensor3 Gframe = chart.frame_christoffel(x);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) {
            // (nabla0 That)^q_{kj;l} with the upper-index correction
            double s = 0;
            for (int q = 0; q < n; ++q) {
              double cov = dThat[l].at(q, k, j);
              for (int m = 0; m < n; ++m) {
                cov += Ghat.at(q, m, l) * That.at(m, k, j);
                cov -= Ghat.at(m, k, l) * That.at(q, m, j);
                cov -= Ghat.at(m, j, l) * That.at(q, k, m);
              }
              s += fc.a(i, q) * cov;
            }
            for (int m = 0; m < n; ++m) s -= Tu.at(m, k, j) * Gframe.at(i, m, l);
            DT.at(i, k, j, l) = s;
          }
  }

  Tensor4 F(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = DT.at(i, k, j, l) - DT.at(i, k, l, j);
          for (int m = 0; m < n; ++m) {
            s += Ghat.at(m, k, l) * Tu.at(i, m, j) - Ghat.at(m, k, j) * Tu.at(i, m, l);
            s += That.at(m, l, j) * Tu.at(i, k, m);
          }
          F.at(i, j, k, l) = s;
        }
  return F;
}

std::optional<double> frame_ode_residual(const NormalChart& chart, FrameOdeVariant v,
                                         const VecD& x, bool integral_form) {
  const int n = chart.n_total();
  const int nt = chart.n_transverse();
  const bool transverse_ray =
      v == FrameOdeVariant::transverse_hh || v == FrameOdeVariant::transverse_vh ||
      v == FrameOdeVariant::transverse_hv || v == FrameOdeVariant::transverse_vv;
  const bool i_horizontal =
      v == FrameOdeVariant::transverse_hh || v == FrameOdeVariant::transverse_hv ||
      v == FrameOdeVariant::leafwise_hh || v == FrameOdeVariant::leafwise_hv;
  const bool j_horizontal =
      v == FrameOdeVariant::transverse_hh || v == FrameOdeVariant::transverse_vh ||
      v == FrameOdeVariant::leafwise_hh || v == FrameOdeVariant::leafwise_vh;
  if (nt == n && (!i_horizontal || !j_horizontal)) return std::nullopt;

  double tnorm = 0, lnorm = 0;
  for (int i = 0; i < nt; ++i) tnorm += x[i] * x[i];
  for (int i = nt; i < n; ++i) lnorm += x[i] * x[i];
  if (transverse_ray && lnorm > 1e-16)
    throw InvalidInput("frame_ode_residual: transverse variants require x'' = 0");
  if ((transverse_ray ? tnorm : lnorm) < 1e-20) return std::nullopt;

  // sign of the first-order radial term: +R' iff j <= n' (transverse cases),
  // +R'' iff j > n' (leafwise cases)
  const bool plus = transverse_ray ? j_horizontal : !j_horizontal;
  // curvature term present iff i <= n' (transverse cases), i > n' (leafwise)
  const bool with_R = transverse_ray ? i_horizontal : !i_horizontal;
  // torsion term only in the transverse cases with j <= n'
  const bool with_T = transverse_ray && plus;

  const int k_lo = transverse_ray ? 0 : nt;
  const int k_hi = transverse_ray ? nt : n;

  auto ray_point = [&](double t) {
    VecD xt(x);
    for (int i = 0; i < n; ++i) {
      bool is_leaf = i >= nt;
      if (transverse_ray != is_leaf) xt[i] = t * x[i];
    }
    return xt;
  };

  double worst = 0;
  if (!integral_form) {
    const double h = chart.config().ray_step;
    std::array<MatD, 5> a_ray;
    for (int s = 0; s < 5; ++s)
      a_ray[s] = chart.frame_coefficients(ray_point(1.0 + (s - 2) * h)).a;
    Tensor4 Rf = chart.frame_curvature(x);
    Tensor4 F = F_tensor(chart, x, 0);
    Tensor3 Tu = chart.frame_torsion(x);
    for (int i = 0; i < n; ++i) {
      if (i_horizontal != (i < nt)) continue;
      for (int j = 0; j < n; ++j) {
        if (j_horizontal != (j < nt)) continue;
        std::array<double, 5> phi;
        for (int s = 0; s < 5; ++s) phi[s] = a_ray[s](i, j);
        RayJet jet = ray_jet(phi, h);
        double lhs = plus ? jet.d2 + 2 * jet.d1 : jet.d2;
        double rhs = 0;
        for (int k = k_lo; k < k_hi; ++k) {
          for (int l = k_lo; l < k_hi; ++l) {
            double coef = F.at(i, j, k, l);
            if (with_R) coef += Rf.at(i, k, l, j);  // R0^{ul i}_{ul k, l, j}
            rhs += coef * x[l] * x[k];
          }
          if (with_T) rhs += Tu.at(i, k, j) * x[k];
        }
        worst = std::max(worst, std::fabs(lhs - rhs));
      }
    }
    return worst;
  }

  // integral form: xi'(1, x) against the Cor-style first integral
  const double h = chart.config().ray_step;
  std::array<MatD, 5> a_ray;
  for (int s = 0; s < 5; ++s)
    a_ray[s] = chart.frame_coefficients(ray_point(1.0 + (s - 2) * h)).a;
  std::array<MatD, 5> a_zero;
  const bool needs_zero = !plus;  // cases carrying the xi'(0,x) term
  if (needs_zero)
    for (int s = 0; s < 5; ++s)
      a_zero[s] = chart.frame_coefficients(ray_point((s - 2) * h)).a;

  auto integrand = [&](double u) {
    VecD xt = ray_point(u);
    Tensor4 F = F_tensor(chart, xt, 0);
    VecD flat(F.a);
    if (with_R) {
      Tensor4 Rf = chart.frame_curvature(xt);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
              flat[((static_cast<size_t>(i) * n + j) * n + k) * n + l] +=
                  Rf.at(i, k, l, j);
    }
    // torsion block appended after the rank-4 block
    if (with_T) {
      Tensor3 Tu = chart.frame_torsion(xt);
      flat.insert(flat.end(), Tu.a.begin(), Tu.a.end());
    }
    const double w2 = plus ? u * u : 1.0;
    const double w1 = plus ? u : 1.0;
    size_t rank4 = static_cast<size_t>(n) * n * n * n;
    for (size_t q = 0; q < flat.size(); ++q) flat[q] *= q < rank4 ? w2 : w1;
    return flat;
  };
  VecD I = adaptive_simpson(integrand, 0.0, 1.0, std::max(chart.config().quad_tol, 1e-7), 8);

  for (int i = 0; i < n; ++i) {
    if (i_horizontal != (i < nt)) continue;
    for (int j = 0; j < n; ++j) {
      if (j_horizontal != (j < nt)) continue;
      std::array<double, 5> phi;
      for (int s = 0; s < 5; ++s) phi[s] = a_ray[s](i, j);
      double lhs = ray_jet(phi, h).d1;
      double rhs = 0;
      if (needs_zero) {
        std::array<double, 5> phi0;
        for (int s = 0; s < 5; ++s) phi0[s] = a_zero[s](i, j);
        rhs += ray_jet(phi0, h).d1;
      }
      size_t rank4 = static_cast<size_t>(n) * n * n * n;
      for (int k = k_lo; k < k_hi; ++k) {
        for (int l = k_lo; l < k_hi; ++l)
          rhs += I[((static_cast<size_t>(i) * n + j) * n + k) * n + l] * x[l] * x[k];
        if (with_T)
          rhs += I[rank4 + (static_cast<size_t>(i) * n + k) * n + j] * x[k];
      }
      worst = std::max(worst, std::fabs(lhs - rhs));
    }
  }
  return worst;
}

double coordinate_jacobi_residual(const NormalChart& chart, const VecD& xt, const VecD& xl,
                                  int i, double h) {
  const MetricField& M = chart.ambient();
  const int n = chart.n_total();
  const int nt = chart.n_transverse();
  if (i >= nt) throw InvalidInput("coordinate_jacobi_residual: i must be transverse");

  auto leaf_curve = [&](const VecD& xprime) {
    VecD x(n, 0.0);
    for (int q = 0; q < nt; ++q) x[q] = xprime[q];
    MatD fr = chart.frame(x);
    VecD q0 = chart.forward(x);
    VecD xlfull(n, 0.0);
    for (int q = nt; q < n; ++q) xlfull[q] = xl[q - nt];
    VecD w = mat_vec(fr, xlfull);
    CurveSolution c = integrate_geodesic(M, ConnectionKind::adapted, Point(q0), w, 1.0,
                                         chart.config().geo_step);
    if (c.boundary_exit)
      throw BoundaryExit("coordinate_jacobi_residual: leafwise geodesic left the chart");
    return c;
  };

  VecD xp(xt), xm(xt);
  xp[i] += h;
  xm[i] -= h;
  CurveSolution gamma = leaf_curve(xt);
  CurveSolution cp = leaf_curve(xp);
  CurveSolution cm = leaf_curve(xm);

  const int nn = gamma.n_nodes();
  std::vector<VecD> X(nn, VecD(n, 0.0));
  for (int k = 0; k < nn; ++k)
    for (int q = 0; q < n; ++q) X[k][q] = (cp.x[k][q] - cm.x[k][q]) / (2 * h);

  // initial conditions extracted from the FD field
  MatD basis0 = adapted_orthonormal_basis(M, gamma.start_x());
  std::vector<MatD> frames = transport_frame(M, ConnectionKind::adapted, gamma, basis0);
  auto comps = [&](int k) {
    MatD g = M.eval_metric(gamma.x[k]);
    return to_frame_comps(g, frames[k], X[k]);
  };
  VecD c0 = comps(0), c1 = comps(1), c2 = comps(2);
  const double dt = gamma.t[1] - gamma.t[0];
  VecD cdot(n);
  for (int q = 0; q < n; ++q) cdot[q] = (-3 * c0[q] + 4 * c1[q] - c2[q]) / (2 * dt);
  VecD nabla = mat_vec(basis0, cdot);

  Tensor3 tor = torsion_from_christoffel(christoffel_adapted<double>(M, gamma.start_x()));
  VecD tgx(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int q = 0; q < n; ++q)
        tgx[q] += tor.at(q, a, b) * gamma.v.front()[a] * X[0][b];
  VecD Y0 = vsub(nabla, tgx);
  MatD P0 = M.vertical_projector(gamma.start_x());
  Y0 = mat_vec(P0, Y0);

  JacobiSolution sol = solve_adapted_jacobi(M, gamma, X[0], Y0);
  double worst = 0;
  for (int k = 0; k < nn; ++k)
    worst = std::max(worst, norm_inf(vsub(sol.X_chart(k), X[k])));
  return worst;
}

double structure_equation_residual(const NormalChart& chart, const VecD& x) {
  const int n = chart.n_total();
  const double h = chart.config().fd_step;
  std::vector<MatD> da(n);
  for (int k = 0; k < n; ++k) {
    VecD xp(x), xm(x);
    xp[k] += h;
    xm[k] -= h;
    MatD ap = chart.frame_coefficients(xp).a;
    MatD am = chart.frame_coefficients(xm).a;
    da[k] = MatD(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) da[k](i, j) = (ap(i, j) - am(i, j)) / (2 * h);
  }
  MatD a = chart.frame_coefficients(x).a;
  Tensor3 Gf = chart.frame_christoffel(x);
  Tensor3 Tu = chart.frame_torsion(x);
  double worst = 0;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        double r = da[k](i, j) - da[j](i, k) - Tu.at(i, k, j);
        for (int l = 0; l < n; ++l)
          r += Gf.at(i, l, k) * a(l, j) - Gf.at(i, l, j) * a(l, k);
        worst = std::max(worst, std::fabs(r));
      }
  return worst;
}

RadialNormalization radial_normalization_residual(const NormalChart& chart, const VecD& x) {
  const int n = chart.n_total();
  const int nt = chart.n_transverse();
  double lnorm = 0;
  for (int i = nt; i < n; ++i) lnorm += x[i] * x[i];
  MatD a = chart.frame_coefficients(x).a;
  Tensor3 Gf = chart.frame_christoffel(x);

  double theta_res = 0, conn_res = 0;
  // theta''(R'') = x'' and theta'(R'') = 0 hold on all of U
  for (int i = 0; i < n; ++i) {
    double s = 0;
    for (int j = nt; j < n; ++j) s += a(i, j) * x[j];
    double expect = i >= nt ? x[i] : 0.0;
    theta_res = std::max(theta_res, std::fabs(s - expect));
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int k = nt; k < n; ++k) s += Gf.at(i, j, k) * x[k];
      conn_res = std::max(conn_res, std::fabs(s));
    }
  if (lnorm < 1e-16) {
    // on the transversal additionally theta'(R') = x', theta''(R') = 0,
    // and the connection form annihilates R'
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < nt; ++j) s += a(i, j) * x[j];
      double expect = i < nt ? x[i] : 0.0;
      theta_res = std::max(theta_res, std::fabs(s - expect));
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int k = 0; k < nt; ++k) s += Gf.at(i, j, k) * x[k];
        conn_res = std::max(conn_res, std::fabs(s));
      }
  }
  return {theta_res, conn_res};
}

}  // namespace foliab
