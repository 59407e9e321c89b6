#pragma once

#include "foliab/connections.hpp"
#include "foliab/fixtures.hpp"

namespace foliab {

// Discretized geodesic with cubic Hermite interpolation between nodes.
struct CurveSolution {
  ConnectionKind kind = ConnectionKind::levi_civita;
  std::vector<double> t;
  std::vector<VecD> x;    // positions
  std::vector<VecD> v;    // velocities
  std::vector<VecD> acc;  // accelerations (= -Gamma v v), Hermite slopes for v
  bool boundary_exit = false;
  double t_end_requested = 0;

  int n_nodes() const { return static_cast<int>(t.size()); }
  double t_start() const { return t.front(); }
  double t_end() const { return t.back(); }
  const VecD& start_x() const { return x.front(); }
  const VecD& end_x() const { return x.back(); }

  VecD eval_x(double tt) const;
  VecD eval_v(double tt) const;

  // Same trace traversed backwards (velocities negated, time reparametrized
  // to start at 0).
  CurveSolution reversed() const;
};

struct TransportSolution {
  std::vector<double> t;
  std::vector<VecD> vectors;
};

// Fixed-step RK4 integration of the geodesic equation of the chosen
// connection. Integration halts at the chart boundary with the boundary_exit
// flag set (no extrapolation).
CurveSolution integrate_geodesic(const MetricField& M, ConnectionKind kind, const Point& p,
                                 const VecD& v, double t_end, double step);

// Geodesic plus parallel frame along it, integrated as one system. frame0
// columns are the vectors to transport.
struct CurveWithFrame {
  CurveSolution curve;
  std::vector<MatD> frames;
};
CurveWithFrame integrate_geodesic_with_frame(const MetricField& M, ConnectionKind kind,
                                             const Point& p, const VecD& v, double t_end,
                                             double step, const MatD& frame0);

// Parallel transport of v0 along a stored curve (RK4 against the curve's
// Hermite interpolant).
TransportSolution parallel_transport(const MetricField& M, ConnectionKind kind,
                                     const CurveSolution& curve, const VecD& v0);

// Endpoint of the adapted geodesic with initial velocity v after unit time.
// Throws BoundaryExit if the trajectory leaves the chart.
Point adapted_exp(const MetricField& M, const Point& p, const VecD& v, double step = 1e-3);

// | pi(exp0_p v) - cexp_{pi(p)}(pi_* v) | for a fixture with a declared
// distinguished submersion; both sides integrated independently.
double submersion_commutation_residual(const FixtureDef& fix, const MetricField& M,
                                       const Point& p, const VecD& v, double step = 1e-3);

// Whether exp0(E) and exp0(F) land on the same plaque (equal submersion
// values within tol).
bool plaque_criterion_check(const FixtureDef& fix, const MetricField& M, const Point& p,
                            const VecD& E, const VecD& F, double tol = 1e-6,
                            double step = 1e-3);

// Geodesic of a bare (unfoliated) metric; used for transverse models and
// induced leaf metrics.
CurveSolution integrate_base_geodesic(const MetricField& base, const VecD& x0, const VecD& v0,
                                      double t_end, double step);

}  // namespace foliab
