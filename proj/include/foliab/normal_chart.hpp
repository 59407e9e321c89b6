#pragma once

#include <map>
#include <mutex>
#include <optional>

#include "foliab/jacobi.hpp"

namespace foliab {

struct NormalChartConfig {
  double r_transverse = 0.3;
  double r_leafwise = 0.3;
  double geo_step = 5e-3;   // step for the chart's geodesic/transport solves
  double fd_step = 1e-4;    // FD step for Jacobians and chart-side derivatives
  double ray_step = 1e-2;   // step of the 5-point stencils along radial rays
  double quad_tol = 1e-8;   // adaptive Simpson tolerance
  int max_halvings = 3;
};

// Normal foliation chart at a point: a horizontal geodesic, parallel transport
// of the vertical part, then a leafwise geodesic. Chart coordinates are
// (x', x'') in the adapted orthonormal basis chosen at the center.
class NormalChart {
 public:
  NormalChart(const MetricField& M, Point center, NormalChartConfig cfg = {});

  NormalChart(const NormalChart&) = delete;
  NormalChart& operator=(const NormalChart&) = delete;

  const MetricField& ambient() const { return M_; }
  const Point& center() const { return center_; }
  const NormalChartConfig& config() const { return cfg_; }
  double r_transverse() const { return cfg_.r_transverse; }
  double r_leafwise() const { return cfg_.r_leafwise; }
  const MatD& center_basis() const { return basis_; }
  const Box& chart_box() const { return box_; }

  int n_total() const { return M_.spec().n_total(); }
  int n_transverse() const { return M_.spec().n_transverse; }

  // Chart coordinates -> ambient coordinates.
  VecD forward(const VecD& x) const;
  // Parallel orthonormal frame s_1..s_n at chart coordinates x, ambient comps.
  MatD frame(const VecD& x) const;
  // FD Jacobian of forward.
  MatD jacobian(const VecD& x) const;

  // theta^i = a^i_j dx^j and its inverse b = a^{-1}.
  struct FrameCoeffs { MatD a, b; };
  FrameCoeffs frame_coefficients(const VecD& x) const;

  // Chart metric via the frame product a^T a.
  MatD metric_in_chart(const VecD& x) const;
  // Chart metric via the Jacobian pullback J^T g(F(x)) J (independent route).
  MatD metric_pullback(const VecD& x) const;

  // Damped Newton inversion seeded at the origin; nullopt when the iteration
  // leaves the chart box or fails to converge.
  std::optional<VecD> inverse(const VecD& ambient, double tol = 1e-10,
                              int max_iter = 40) const;

  // The pulled-back metric as a numeric MetricField on the chart box.
  const MetricField& chart_metric() const { return chart_metric_; }

  // Plain and frame-indexed adapted Christoffels / curvature / torsion of the
  // chart metric at chart coordinates x.
  Tensor3 chart_adapted_christoffel(const VecD& x) const;
  Tensor3 frame_christoffel(const VecD& x) const;   // Gamma0^{ul i}_{ul j, k}
  Tensor4 chart_adapted_curvature(const VecD& x) const;
  Tensor4 frame_curvature(const VecD& x) const;     // R0^{ul i}_{ul j, k, l}
  Tensor3 frame_torsion(const VecD& x) const;       // T0^{ul i}_{k l}

 private:
  const MetricField& M_;
  Point center_;
  NormalChartConfig cfg_;
  MatD basis_;
  Box box_;
  MetricField chart_metric_;

  struct Solve { VecD point; MatD frame; };
  Solve solve_at(const VecD& x) const;

  mutable std::mutex memo_mu_;
  mutable std::map<VecD, Solve> memo_;
};

// max |Gamma0^{ul i}_{ul j k}| at the origin, and over the transversal for
// leafwise k; both vanish by construction of the frame.
struct GammaVanishing { double at_center; double leafwise_on_transversal; };
GammaVanishing gamma_vanishing_residuals(const NormalChart& chart, int transversal_samples);

enum class RadialVariant {
  underlined_transverse_k_le,
  underlined_transverse_k_gt,
  underlined_leafwise_k_le,
  underlined_leafwise_k_gt,
  plain_all_four,
};

// Residual of the radial Christoffel/curvature identities at x, in the
// differential form (radial-derivative stencils) or the integral form
// (quadrature along the ray). nullopt on a degenerate ray.
std::optional<double> radial_identity_residual(const NormalChart& chart, RadialVariant v,
                                               const VecD& x, bool integral_form);

// F^i_{jkl} assembled from chart Christoffels and frame torsion components.
// route selects one of two independent assemblies of the covariant-derivative
// terms; they must agree.
Tensor4 F_tensor(const NormalChart& chart, const VecD& x, int route = 0);

enum class FrameOdeVariant {
  transverse_hh, transverse_vh, transverse_hv, transverse_vv,  // R' cases by (i,j) block
  leafwise_hh, leafwise_vh, leafwise_hv, leafwise_vv,          // R'' cases
};

// Residual of the second-order radial equations on a^i_j (differential form)
// or of their first-integral forms (integral mode). nullopt on a degenerate
// ray or when the variant's block is empty.
std::optional<double> frame_ode_residual(const NormalChart& chart, FrameOdeVariant v,
                                         const VecD& x, bool integral_form);

// Distance between the coordinate field d'_i along the leafwise ray and the
// adapted Jacobi solution with matching initial conditions; h is the FD step
// in the transverse coordinate.
double coordinate_jacobi_residual(const NormalChart& chart, const VecD& xt, const VecD& xl,
                                  int i, double h);

// d theta^i + theta^{ul i}_{ul j} wedge theta^j - T0^{ul i} at x, max over
// components.
double structure_equation_residual(const NormalChart& chart, const VecD& x);

// theta'(R') = x' / theta''(R'') = x'' normalization and connection-form
// annihilation residuals.
struct RadialNormalization {
  double theta_radial;       // coframe applied to the radial fields
  double connection_form;    // theta^{ul i}_{ul j} applied to the radial fields
};
RadialNormalization radial_normalization_residual(const NormalChart& chart, const VecD& x);

}  // namespace foliab
