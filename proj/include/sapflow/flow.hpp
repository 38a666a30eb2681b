#pragma once

#include "sapflow/curve.hpp"
#include "sapflow/solver_config.hpp"

namespace sapflow {

/// Largest steady flow a segment can carry from a fixed base potential,
/// together with the potential that realizes it.
struct SegmentCapacity {
  double argmax_potential = 0.0;
  double max_flow = 0.0;
  double base_potential = 0.0;
};

/// Flow through a segment: (x - x_base) * K(x). Negative when x < x_base.
/// Requires x_base >= 0 and x >= 0.
double flow(const VulnerabilityCurve& curve, double x_base, double x);

/// Maximizes flow(curve, x_base, .) over x >= x_base. Closed forms where
/// they exist (linear curves; Weibull from base 0), bracketed bisection on
/// the stationarity residual otherwise.
///
/// Requires a curve passing validate() and K(x_base) > 0; throws
/// CurveValidityError / NoPositiveFlowError.
SegmentCapacity capacity(const VulnerabilityCurve& curve, double x_base,
                         const SolverConfig& cfg = {});

/// Smallest x >= x_base with flow(curve, x_base, x) = target, i.e. the
/// root on the rising branch. target = 0 returns x_base. Targets beyond
/// the capacity throw InfeasibleTargetError; within cfg.tol_f of the
/// capacity they clamp to the argmax.
double solve_rising(const VulnerabilityCurve& curve, double x_base,
                    double target, const SolverConfig& cfg = {});

namespace detail {

/// Bisection fallback behind capacity(); exposed so the closed forms can
/// be cross-checked against it.
SegmentCapacity capacity_by_bisection(const VulnerabilityCurve& curve,
                                      double x_base, const SolverConfig& cfg);

}  // namespace detail

}  // namespace sapflow
