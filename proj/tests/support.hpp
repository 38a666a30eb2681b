#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sapflow/chain.hpp"
#include "sapflow/errors.hpp"

// Shared fixtures: the four study chains, independently computed expected
// values, and a deterministic random chain generator for property tests.
namespace fixtures {

inline sapflow::PlantChain h_annuus() {
  return {0.0,
          {{"stem", sapflow::VulnerabilityCurve::weibull(11.9, 3.34, 1.69)},
           {"leaf", sapflow::VulnerabilityCurve::linear(0.4, 1.64)}}};
}

inline sapflow::PlantChain a_rubrum() {
  return {0.0,
          {{"stem", sapflow::VulnerabilityCurve::weibull(25.29, 4.22, 4.67)},
           {"leaf", sapflow::VulnerabilityCurve::weibull(29.2, 1.76, 10.24)}}};
}

inline sapflow::PlantChain l_tulipifera() {
  return {0.0,
          {{"stem", sapflow::VulnerabilityCurve::weibull(4.27, 3.26, 4.46)},
           {"leaf", sapflow::VulnerabilityCurve::weibull(9.8, 1.29, 4.91)}}};
}

inline sapflow::PlantChain p_virginiana() {
  return {0.0,
          {{"stem", sapflow::VulnerabilityCurve::weibull(1.07, 4.59, 4.11)},
           {"leaf", sapflow::VulnerabilityCurve::weibull(32.8, 0.95, 2.15)}}};
}

/// A chain whose second segment is so conductive that the first segment's
/// isolated maximum survives unchanged.
inline sapflow::PlantChain wide_leaf() {
  return {0.0,
          {{"stem", sapflow::VulnerabilityCurve::weibull(25.29, 4.22, 4.67)},
           {"leaf", sapflow::VulnerabilityCurve::linear(1000.0, 100.0)}}};
}

/// Expected optima, frozen from a 40-digit arbitrary precision run of the
/// same stationarity conditions.
struct Expected {
  double x1;
  double x2;
  double flow;
};

inline constexpr Expected kHAnnuus{0.0135558557242072, 0.826777927862104,
                                   0.161300033807867};
inline constexpr Expected kARubrum{0.731061138856345, 1.49715588397925,
                                   18.4833922517521};
inline constexpr Expected kLTulipifera{0.652115144328161, 1.11564887229754,
                                       2.78240586751261};
inline constexpr Expected kPVirginiana{1.06010964689398, 1.35406525925874,
                                       1.13157353530097};
inline constexpr Expected kWideLeaf{3.03381977950091, 3.0977355464859,
                                    61.9358255512884};

struct ExpectedCapacity {
  double argmax;
  double max_flow;
};

// First-segment capacities from base 0.
inline constexpr ExpectedCapacity kHAnnuusStem{2.44851214709, 16.12390538};
inline constexpr ExpectedCapacity kARubrumStem{3.0338197795, 61.9358255513};
inline constexpr ExpectedCapacity kLTulipiferaStem{2.33145385722,
                                                   7.95571570264};
inline constexpr ExpectedCapacity kPVirginianaStem{3.25431392264,
                                                   2.73008057396};

// A. rubrum leaf from base 0.73.
inline constexpr ExpectedCapacity kARubrumLeafFrom073{1.49697072961559,
                                                      18.5089971990368};
inline constexpr double kARubrumLeafRising1848 = 1.47881487524573;

// upper_support at the default flow floor.
inline constexpr double kARubrumStemSupport = 8.174606521;
inline constexpr double kHAnnuusStemSupport = 21.62502012;
inline constexpr double kPVirginianaStemSupport = 9.744051474;
inline constexpr double kARubrumLeafSupport = 2.373180405;

/// Deterministic uniform generator. Avoids std::uniform_real_distribution
/// so the draw sequence is identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint32_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) {
    const double u = eng_() * (1.0 / 4294967296.0);
    return lo + (hi - lo) * u;
  }

  int pick(int n) { return static_cast<int>(eng_() % n); }

private:
  std::mt19937 eng_;
};

inline sapflow::VulnerabilityCurve random_curve(Rng& rng) {
  if (rng.uniform(0.0, 1.0) < 0.8) {
    return sapflow::VulnerabilityCurve::weibull(rng.uniform(0.1, 50.0),
                                                rng.uniform(0.5, 6.0),
                                                rng.uniform(1.0, 12.0));
  }
  // Linear cutoffs start at 1.0 so the soil potential (at most 0.5) never
  // lands on a dead curve.
  return sapflow::VulnerabilityCurve::linear(rng.uniform(0.1, 50.0),
                                             rng.uniform(1.0, 6.0));
}

inline sapflow::PlantChain random_chain(Rng& rng, int n) {
  std::vector<sapflow::Segment> segments;
  segments.reserve(n);
  for (int i = 0; i < n; ++i) {
    segments.push_back(
        {"seg" + std::to_string(i + 1), random_curve(rng)});
  }
  return {rng.uniform(0.0, 0.5), std::move(segments)};
}

struct SolvedChain {
  sapflow::PlantChain chain;
  sapflow::OptimalSolution solution;
};

/// Draws chains until `count` of them solve to a meaningful flow. Chains
/// whose downstream segments are dead at the realized potentials collapse
/// to flow 0 and are skipped.
inline std::vector<SolvedChain> solved_sample(std::uint32_t seed, int count,
                                              int max_segments,
                                              const sapflow::SolverConfig& cfg,
                                              int fixed_segments = 0) {
  Rng rng(seed);
  std::vector<SolvedChain> out;
  int guard = 0;
  while (static_cast<int>(out.size()) < count && ++guard < 20000) {
    const int n =
        fixed_segments > 0 ? fixed_segments : 2 + rng.pick(max_segments - 1);
    sapflow::PlantChain chain = random_chain(rng, n);
    try {
      sapflow::OptimalSolution sol = sapflow::multi_segment_solve(chain, cfg);
      if (sol.flow >= 1e-6) {
        out.push_back(SolvedChain{std::move(chain), std::move(sol)});
      }
    } catch (const sapflow::Error&) {
    }
  }
  return out;
}

}  // namespace fixtures
