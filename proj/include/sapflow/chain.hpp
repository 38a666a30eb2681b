#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sapflow/curve.hpp"
#include "sapflow/flow.hpp"
#include "sapflow/solver_config.hpp"

namespace sapflow {

struct Segment {
  std::string name;
  VulnerabilityCurve curve;
};

/// A series chain of conducting segments drawing water from a reservoir at
/// a fixed soil potential. Segment 1 is attached to the reservoir; segment
/// n ends at the evaporating surface.
class PlantChain {
public:
  /// Requires soil_potential >= 0 and at least one segment.
  PlantChain(double soil_potential, std::vector<Segment> segments);

  double soil_potential() const noexcept { return soil_potential_; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return segments_.size(); }

  /// Solver preconditions that go beyond construction: every curve passes
  /// validate() and every segment conducts at the soil potential. Returns
  /// one message per violation; empty means solvable.
  std::vector<std::string> check() const;

  /// Throws CurveValidityError or NoPositiveFlowError on the first class
  /// of violation reported by check().
  void require_solvable() const;

private:
  double soil_potential_;
  std::vector<Segment> segments_;
};

enum class SolutionCase { non_bottleneck, bottleneck };

/// Optimal steady state of a chain: node potentials, the common flow, and
/// which segment limits it.
///
/// Invariants: potentials are nondecreasing from the soil potential; every
/// segment carries the same flow; bottleneck_index is 1-based and the case
/// is non_bottleneck exactly when it is 1.
struct OptimalSolution {
  std::vector<double> potentials;
  double flow = 0.0;
  SolutionCase solution_case = SolutionCase::bottleneck;
  int bottleneck_index = 0;
  /// Capacity of each segment in isolation from its realized base.
  std::vector<SegmentCapacity> capacities;
  /// Capacity of segment 1 alone from the soil potential.
  double isolated_first_capacity = 0.0;
};

/// Outcome of pushing a trial flow through the chain left to right.
struct FeasibilityResult {
  bool feasible = false;
  /// Smallest rising-branch roots, one per segment completed.
  std::vector<double> potentials;
  /// 1-based index of the segment that could not carry the flow; 0 when
  /// feasible.
  int failing_index = 0;
};

/// Exact optimum for a two-segment chain. Decides between the interior
/// maximum (first segment at capacity, second on its rising branch) and
/// the boundary case where the second segment is the bottleneck, found by
/// a stationarity scan with bisection on each sign change.
OptimalSolution two_segment_solve(const PlantChain& chain,
                                  const SolverConfig& cfg = {});

/// Can every segment carry flow phi? Propagates the smallest rising-branch
/// root left to right. Feasibility is monotone: any flow below a feasible
/// one is feasible.
FeasibilityResult is_feasible(const PlantChain& chain, double phi,
                              const SolverConfig& cfg = {});

/// Optimum for a chain of any length: bisection on the flow against
/// is_feasible, then a polish pass that pins the limiting segment to its
/// exact capacity. Agrees with two_segment_solve on n = 2.
OptimalSolution multi_segment_solve(const PlantChain& chain,
                                    const SolverConfig& cfg = {});

/// Independent check solver: dense-grid dynamic program over per-level
/// potential grids with zoom refinement, no calculus. Supports n <= 4.
/// Accuracy is limited by cfg.grid_points.
OptimalSolution oracle_grid(const PlantChain& chain,
                            const SolverConfig& cfg = {});

/// Classifies a solution: the first segment running at its isolated
/// capacity within tolerance. Index 1 means the chain as a whole is not
/// throttled downstream. Throws NoStationarySegmentError when no segment
/// qualifies.
std::pair<SolutionCase, int> detect_bottleneck(const OptimalSolution& solution,
                                               const PlantChain& chain,
                                               const SolverConfig& cfg = {});

}  // namespace sapflow
