#include "foliab/metric.hpp"

namespace foliab {

namespace {

template <int M, class F>
double dual_diff_fixed(const F& f, const std::vector<int>& dirs, const VecD& x) {
  using S = typename detail::NestedScalar<M>::type;
  const int n = static_cast<int>(x.size());
  std::vector<S> xs(n);
  for (int k = 0; k < n; ++k)
    xs[k] = detail::seed_coordinate<M>(x[k], dirs.data(), k);
  S r = f(xs);
  return detail::extract_derivative<M>(r);
}

template <class F>
double dual_diff(const F& f, const std::vector<int>& dirs, const VecD& x) {
  switch (dirs.size()) {
    case 0: { std::vector<double> xs(x); return f(xs); }
    case 1: return dual_diff_fixed<1>(f, dirs, x);
    case 2: return dual_diff_fixed<2>(f, dirs, x);
    case 3: return dual_diff_fixed<3>(f, dirs, x);
    case 4: return dual_diff_fixed<4>(f, dirs, x);
    case 5: return dual_diff_fixed<5>(f, dirs, x);
    case 6: return dual_diff_fixed<6>(f, dirs, x);
    default:
      throw OrderExceeded("differentiate: dual mode supports order <= " +
                          std::to_string(kMaxDiffOrder));
  }
}

double fd_diff_rec(const std::function<double(const VecD&)>& f,
                   std::vector<int>& dirs, size_t k, const VecD& x, double h) {
  if (k == dirs.size()) return f(x);
  VecD xp(x), xm(x);
  xp[dirs[k]] += h;
  xm[dirs[k]] -= h;
  return (fd_diff_rec(f, dirs, k + 1, xp, h) - fd_diff_rec(f, dirs, k + 1, xm, h)) /
         (2.0 * h);
}

}  // namespace

double differentiate(const Expr& f, const MultiIndex& I, const VecD& x,
                     const DifferentiationConfig& cfg) {
  const int m = I.order();
  if (m > cfg.max_order || m > kMaxDiffOrder)
    throw OrderExceeded("differentiate: order " + std::to_string(m) +
                        " exceeds configured maximum");
  if (cfg.mode == DiffMode::finite_difference) {
    auto fn = [&](const VecD& q) { return f.eval<double>(q); };
    return differentiate(std::function<double(const VecD&)>(fn), I, x, cfg);
  }
  auto dirs = I.directions();
  return dual_diff([&](const auto& xs) { return f.eval(xs); }, dirs, x);
}

double differentiate(const std::function<double(const VecD&)>& f, const MultiIndex& I,
                     const VecD& x, const DifferentiationConfig& cfg) {
  const int m = I.order();
  if (m > cfg.max_order || m > kMaxDiffOrder)
    throw OrderExceeded("differentiate: order " + std::to_string(m) +
                        " exceeds configured maximum");
  auto dirs = I.directions();
  double h = detail::fd_step_for(cfg.fd_step, m);
  return fd_diff_rec(f, dirs, 0, x, h);
}

MatD MetricField::eval_metric(const VecD& x) const {
  require_inside(x);
  MatD g = eval<double>(x);
  const int n = g.rows;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = 0.5 * (g(i, j) + g(j, i));
      g(i, j) = g(j, i) = s;
    }
  for (double v : g.a)
    if (!std::isfinite(v))
      throw DegenerateMetric("metric '" + name_ + "': non-finite coefficient");
  return g;
}

MatD MetricField::inverse_metric(const VecD& x) const {
  MatD g = eval_metric(x);
  MatD gi;
  try {
    gi = mat_inverse(g);
  } catch (const std::runtime_error&) {
    throw DegenerateMetric("metric '" + name_ + "': singular at sample point");
  }
  double ng = 0, ngi = 0;
  for (double v : g.a) ng = std::max(ng, std::fabs(v));
  for (double v : gi.a) ngi = std::max(ngi, std::fabs(v));
  if (ng * ngi > 1e12)
    throw DegenerateMetric("metric '" + name_ + "': condition number above cap");
  return gi;
}

double MetricField::d_metric_entry(int i, int j, const MultiIndex& I, const VecD& x) const {
  if (!exprs_.empty() && cfg_.mode == DiffMode::dual)
    return differentiate(exprs_[static_cast<size_t>(i) * spec_.n_total() + j], I, x, cfg_);
  auto fn = [&, i, j](const VecD& q) { return eval_double_raw(q)(i, j); };
  return differentiate(std::function<double(const VecD&)>(fn), I, x, cfg_);
}

std::pair<TangentVector, TangentVector> MetricField::split_tangent(const TangentVector& v) const {
  require_inside(v.base.coords);
  MatD P = vertical_projector(v.base.coords);
  VecD vert = mat_vec(P, v.components);
  VecD horiz = vsub(v.components, vert);
  return {TangentVector(v.base, vert), TangentVector(v.base, horiz)};
}

void MetricField::validate_samples(int n_samples, unsigned seed) const {
  std::mt19937_64 rng(seed);
  const int n = spec_.n_total();
  std::vector<std::uniform_real_distribution<double>> dist;
  for (int i = 0; i < n; ++i)
    dist.emplace_back(domain_.lo[i] + 1e-9, domain_.hi[i] - 1e-9);
  for (int s = 0; s < n_samples; ++s) {
    VecD x(n);
    for (int i = 0; i < n; ++i) x[i] = dist[i](rng);
    MatD g = eval_metric(x);
    VecD ev = sym_eigenvalues(g);
    for (double e : ev)
      if (e <= 0)
        throw DegenerateMetric("metric '" + name_ +
                               "': not positive definite at a sample point");
  }
}

}  // namespace foliab
