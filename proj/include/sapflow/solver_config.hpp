#pragma once

#include "sapflow/curve.hpp"

namespace sapflow {

/// Shared numeric knobs for the flow solvers. Bisection routines run until
/// the bracket collapses in double precision or max_iter steps, whichever
/// comes first, so results are at least as tight as the tolerances below.
struct SolverConfig {
  /// Potential tolerance, MPa.
  double tol_x = 1e-10;
  /// Relative flow tolerance.
  double tol_f = 1e-12;
  /// Density of scan and oracle grids.
  int grid_points = 1000;
  /// Cap on bisection steps.
  int max_iter = 200;
  /// Cutoff fraction for upper_support.
  double flow_floor = kDefaultFlowFloor;

  /// Throws ConstructionError unless all fields are positive and
  /// grid_points >= 10.
  void validate() const;
};

}  // namespace sapflow
