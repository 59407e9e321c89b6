#pragma once

#include <functional>
#include <optional>
#include <random>
#include <utility>

#include "foliab/expr.hpp"
#include "foliab/foliation.hpp"

namespace foliab {

enum class DiffMode { dual, finite_difference };

struct DifferentiationConfig {
  DiffMode mode = DiffMode::dual;
  double fd_step = 1e-5;   // base step; scaled up with derivative order
  int max_order = 6;
};

constexpr int kMaxDiffOrder = 6;

namespace detail {

template <class S> struct DualDepth { static constexpr int value = 0; };
template <class T> struct DualDepth<Dual<T>> { static constexpr int value = 1 + DualDepth<T>::value; };

template <int M> struct NestedScalar { using type = Dual<typename NestedScalar<M - 1>::type>; };
template <> struct NestedScalar<0> { using type = double; };

template <int M>
typename NestedScalar<M>::type seed_coordinate(double x, const int* dirs, int k) {
  if constexpr (M == 0) {
    (void)dirs; (void)k;
    return x;
  } else {
    using Inner = typename NestedScalar<M - 1>::type;
    Inner d = dirs[0] == k ? lift_scalar<Inner>(1.0) : lift_scalar<Inner>(0.0);
    return {seed_coordinate<M - 1>(x, dirs + 1, k), d};
  }
}

template <int M, class S>
double extract_derivative(const S& v) {
  if constexpr (M == 0) return v;
  else return extract_derivative<M - 1>(v.d);
}

// FD step tuned to nesting depth: noise grows like eps/h^depth.
inline double fd_step_for(double base, int total_order) {
  double h = std::pow(1e-16, 1.0 / (total_order + 2));
  return std::max(base, h);
}

// Evaluate a double-valued vector function at nested-dual points by recursive
// central differences in the seeded directions.
template <class S>
struct FDLift {
  template <class F>
  static std::vector<S> eval(const F& f, const std::vector<S>& x, double h) {
    static_assert(std::is_same_v<S, double>);
    (void)h;
    return f(x);
  }
};

template <class T>
struct FDLift<Dual<T>> {
  template <class F>
  static std::vector<Dual<T>> eval(const F& f, const std::vector<Dual<T>>& x, double h) {
    const size_t n = x.size();
    std::vector<T> a(n), plus(n), minus(n);
    bool seeded = false;
    for (size_t i = 0; i < n; ++i) {
      a[i] = x[i].v;
      plus[i] = x[i].v + h * x[i].d;
      minus[i] = x[i].v - h * x[i].d;
      if (scalar_value(x[i].d) != 0.0) seeded = true;
    }
    std::vector<T> fv = FDLift<T>::eval(f, a, h);
    std::vector<Dual<T>> out(fv.size());
    if (!seeded) {
      for (size_t i = 0; i < fv.size(); ++i) out[i] = {fv[i], lift_scalar<T>(0.0)};
      return out;
    }
    std::vector<T> fp = FDLift<T>::eval(f, plus, h);
    std::vector<T> fm = FDLift<T>::eval(f, minus, h);
    for (size_t i = 0; i < fv.size(); ++i)
      out[i] = {fv[i], (fp[i] - fm[i]) / (2.0 * h)};
    return out;
  }
};

}  // namespace detail

// Scalar field with exact derivatives of any order via nested duals, or
// second-order central differences for double-only callables.
double differentiate(const Expr& f, const MultiIndex& I, const VecD& x,
                     const DifferentiationConfig& cfg);
double differentiate(const std::function<double(const VecD&)>& f, const MultiIndex& I,
                     const VecD& x, const DifferentiationConfig& cfg);

// Smooth map chart coordinates -> symmetric positive-definite matrix, with the
// differentiation engine attached. Backed either by coefficient expressions
// (dual-capable) or by an arbitrary numeric callable (FD only).
class MetricField {
 public:
  using NumericFn = std::function<MatD(const VecD&)>;

  MetricField() = default;

  MetricField(FoliationSpec spec, Box domain, std::vector<Expr> entries,
              DifferentiationConfig cfg = {}, std::string name = "")
      : spec_(spec), domain_(std::move(domain)), exprs_(std::move(entries)),
        cfg_(cfg), name_(std::move(name)) {
    const size_t n = static_cast<size_t>(spec_.n_total());
    if (exprs_.size() != n * n)
      throw InvalidInput("MetricField: need n*n coefficient expressions");
  }

  MetricField(FoliationSpec spec, Box domain, NumericFn fn,
              DifferentiationConfig cfg = {}, std::string name = "")
      : spec_(spec), domain_(std::move(domain)), numeric_(std::move(fn)),
        cfg_(cfg), name_(std::move(name)) {
    cfg_.mode = DiffMode::finite_difference;
  }

  const FoliationSpec& spec() const { return spec_; }
  const Box& domain() const { return domain_; }
  const DifferentiationConfig& diff_config() const { return cfg_; }
  DifferentiationConfig& diff_config() { return cfg_; }
  const std::string& name() const { return name_; }
  bool expr_backed() const { return !exprs_.empty(); }
  const std::vector<Expr>& entries() const { return exprs_; }

  void require_inside(const VecD& x) const {
    if (!domain_.contains(x))
      throw PointOutsideDomain("point outside chart domain of metric '" + name_ + "'");
  }

  // Raw coefficient evaluation at a generic scalar point.
  template <class S>
  MatT<S> eval(const std::vector<S>& x) const {
    const int n = spec_.n_total();
    MatT<S> g(n, n);
    if (!exprs_.empty() &&
        (cfg_.mode == DiffMode::dual || std::is_same_v<S, double>)) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          g(i, j) = exprs_[static_cast<size_t>(i) * n + j].template eval<S>(x);
      return g;
    }
    // FD lift of the double-valued path (numeric backing, or FD mode forced)
    auto flat = [this, n](const VecD& q) {
      MatD m = eval_double_raw(q);
      return m.a;
    };
    double h = detail::fd_step_for(cfg_.fd_step, detail::DualDepth<S>::value);
    auto vals = detail::FDLift<S>::eval(flat, x, h);
    g.a = std::move(vals);
    return g;
  }

  // Symmetrized coefficients g_ij(p); checks the domain.
  MatD eval_metric(const VecD& x) const;

  // (g^ij) = (g_ij)^{-1}; throws DegenerateMetric past the condition cap.
  MatD inverse_metric(const VecD& x) const;

  // Derivative of one metric entry, honoring the configured mode.
  double d_metric_entry(int i, int j, const MultiIndex& I, const VecD& x) const;

  // Orthogonal projection onto the leafwise (vertical) subbundle, as a matrix
  // acting on chart components. Rows <= n' vanish; the transverse columns carry
  // the leafwise-block-inverse corrections.
  template <class S>
  MatT<S> vertical_projector(const std::vector<S>& x) const {
    const int nt = spec_.n_transverse, nl = spec_.n_leafwise, n = spec_.n_total();
    MatT<S> g = eval(x);
    MatT<S> D(nl, nl);
    for (int a = 0; a < nl; ++a)
      for (int b = 0; b < nl; ++b) D(a, b) = g(nt + a, nt + b);
    LU<S> lu(std::move(D));
    MatT<S> P(n, n);
    for (int a = 0; a < nl; ++a) P(nt + a, nt + a) = lift_scalar<S>(1.0);
    std::vector<S> rhs(nl);
    for (int i = 0; i < nt; ++i) {
      for (int a = 0; a < nl; ++a) rhs[a] = g(nt + a, i);
      auto c = lu.solve(rhs);
      for (int a = 0; a < nl; ++a) P(nt + a, i) = c[a];
    }
    return P;
  }

  std::pair<TangentVector, TangentVector> split_tangent(const TangentVector& v) const;

  // Sampled SPD + coefficient sanity check; throws on failure.
  void validate_samples(int n_samples, unsigned seed) const;

 private:
  MatD eval_double_raw(const VecD& x) const {
    if (numeric_) return numeric_(x);
    const int n = spec_.n_total();
    MatD g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        g(i, j) = exprs_[static_cast<size_t>(i) * n + j].eval<double>(x);
    return g;
  }

  FoliationSpec spec_;
  Box domain_;
  std::vector<Expr> exprs_;  // row-major n*n, empty when numeric-backed
  NumericFn numeric_;
  DifferentiationConfig cfg_;
  std::string name_;
};

}  // namespace foliab
