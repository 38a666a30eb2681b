#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sapflow/chain.hpp"

namespace sapflow {

/// A bundled species: its chain plus the measured midday potentials
/// (stem, leaf) in MPa where available.
struct SpeciesRecord {
  std::string key;
  std::string display_name;
  PlantChain chain;
  std::string units_note;
  std::optional<std::pair<double, double>> reference_midday;
};

/// Chain description document:
///   {"soil_potential": x0,
///    "segments": [{"name": ..., "curve": {"type": "weibull"|"linear",
///                  "k_max": ..., "p": ..., "nu": ...}}, ...]}
/// Throws ParseError with field and segment context on any violation.
PlantChain parse_chain_config(const std::string& text);
std::string serialize_chain_config(const PlantChain& chain);

/// Solution document with fields potentials, flow, case, bottleneck_index,
/// capacities (argmax / max_flow pairs) and isolated_first_capacity.
/// Numbers survive a round trip to at least 15 significant digits.
std::string serialize_solution(const OptimalSolution& solution,
                               const PlantChain& chain);
OptimalSolution parse_solution(const std::string& text,
                               const PlantChain& chain);

/// The four bundled species, in fixed order: h_annuus, a_rubrum,
/// l_tulipifera, p_virginiana.
const std::vector<SpeciesRecord>& bundled_species();

struct RectangleRow {
  std::string segment;
  double psi = 0.0;
  double conductance = 0.0;
  /// "curve" for sampled curve points, "rectangle" for solution corners.
  std::string kind;
};

struct RectangleExport {
  std::vector<RectangleRow> rows;
};

/// Plot-ready data: each curve sampled on a shared potential range plus
/// the inscribed flow rectangle of each segment, corners in the order
/// (base, 0), (x, 0), (x, K(x)), (base, K(x)).
RectangleExport export_rectangles(const PlantChain& chain,
                                  const OptimalSolution& solution,
                                  int samples);

/// CSV with header segment,psi,K,kind. Numbers use the shortest
/// representation that round-trips exactly.
std::string rectangles_to_csv(const RectangleExport& data);

/// Shortest decimal representation that parses back to exactly the same
/// double. Used for machine-readable output.
std::string format_number(double value);

}  // namespace sapflow
