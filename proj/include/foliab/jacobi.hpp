#pragma once

#include "foliab/geodesic.hpp"

namespace foliab {

// Solution of the adapted Jacobi system along a leafwise geodesic, integrated
// in a parallel adapted orthonormal frame. Y is the vertical companion
// Y = nabla0_{gdot} X - T0(gdot, X).
struct JacobiSolution {
  CurveSolution gamma;
  std::vector<MatD> frames;        // parallel adapted frame, columns e_1..e_n
  std::vector<VecD> X_frame;       // frame components per node
  std::vector<VecD> Y_frame;
  std::vector<VecD> gdot_frame;    // frame components of gdot per node
  double speed = 0;                // |gdot|_g, constant along the curve
  double C_const = 0;              // growth constant
  bool y0_projected = false;       // initial Y was re-projected to vertical

  int n_nodes() const { return static_cast<int>(gamma.t.size()); }
  VecD X_chart(int node) const { return mat_vec(frames[node], X_frame[node]); }
  VecD Y_chart(int node) const { return mat_vec(frames[node], Y_frame[node]); }
};

// Unique adapted Jacobi field with X(a) = X0 and vertical companion Y(a) = Y0.
// gamma must be a leafwise adapted geodesic; Y0 must be vertical (it is
// projected, and rejected when grossly non-vertical).
JacobiSolution solve_adapted_jacobi(const MetricField& M, const CurveSolution& gamma,
                                    const VecD& X0, const VecD& Y0);

// Central finite difference of the leafwise geodesic variation
// f(t,s) = exp0_{xi(s)}((t-a)(V(s) + s W(s))); returns chart components per
// gamma node.
std::vector<VecD> variation_field(const MetricField& M, const CurveSolution& gamma,
                                  const VecD& X0, const VecD& Y0, double h);

// e^{C(b-a)} (|X(a)|^2 + |Y(a)|^2) - (|X(b)|^2 + |Y(b)|^2); nonnegative when
// the growth bound holds.
double growth_bound_margin(const JacobiSolution& sol);

// Subtracts the gdot-multiples so that (Y*, gdot) = 0: X* = X - c (t-a) gdot,
// Y* = Y - c gdot with c = (Y(a), gdot(a)) / |gdot|^2.
JacobiSolution normalize_jacobi(const JacobiSolution& sol);

// Transport a whole basis along a stored curve (column-wise).
std::vector<MatD> transport_frame(const MetricField& M, ConnectionKind kind,
                                  const CurveSolution& curve, const MatD& frame0);

}  // namespace foliab
