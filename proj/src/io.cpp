#include "sapflow/io.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "sapflow/errors.hpp"

namespace sapflow {

using ordered_json = nlohmann::ordered_json;

namespace {

double num_field(const ordered_json& obj, const char* key,
                 const std::string& ctx) {
  if (!obj.contains(key)) {
    throw ParseError(ctx + ": missing field '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    throw ParseError(ctx + ": field '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::string string_field(const ordered_json& obj, const char* key,
                         const std::string& ctx) {
  if (!obj.contains(key)) {
    throw ParseError(ctx + ": missing field '" + key + "'");
  }
  const auto& v = obj.at(key);
  if (!v.is_string()) {
    throw ParseError(ctx + ": field '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

VulnerabilityCurve parse_curve(const ordered_json& jc, const std::string& ctx) {
  if (!jc.is_object()) throw ParseError(ctx + ": 'curve' must be an object");
  const std::string type = string_field(jc, "type", ctx);
  try {
    if (type == "weibull") {
      return VulnerabilityCurve::weibull(num_field(jc, "k_max", ctx),
                                         num_field(jc, "p", ctx),
                                         num_field(jc, "nu", ctx));
    }
    if (type == "linear") {
      return VulnerabilityCurve::linear(num_field(jc, "k_max", ctx),
                                        num_field(jc, "p", ctx));
    }
  } catch (const ConstructionError& e) {
    throw ParseError(ctx + ": " + e.what());
  }
  throw ParseError(ctx + ": unknown curve type '" + type + "'");
}

ordered_json curve_to_json(const VulnerabilityCurve& c) {
  ordered_json jc;
  if (c.family() == CurveFamily::weibull) {
    jc["type"] = "weibull";
    jc["k_max"] = c.k_max();
    jc["p"] = c.p();
    jc["nu"] = c.nu();
  } else {
    jc["type"] = "linear";
    jc["k_max"] = c.k_max();
    jc["p"] = c.p();
  }
  return jc;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_number(double value) {
  return ordered_json(value).dump();
}

PlantChain parse_chain_config(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("chain config: ") + e.what());
  }
  if (!j.is_object()) {
    throw ParseError("chain config: top level must be an object");
  }
  const double x0 = num_field(j, "soil_potential", "chain config");
  if (!j.contains("segments") || !j.at("segments").is_array()) {
    throw ParseError("chain config: 'segments' must be an array");
  }
  const auto& arr = j.at("segments");
  if (arr.empty()) {
    throw ParseError("chain config: at least one segment required");
  }
  std::vector<Segment> segments;
  segments.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& js = arr[i];
    std::string ctx = "segment " + std::to_string(i + 1);
    if (!js.is_object()) throw ParseError(ctx + ": must be an object");
    const std::string name = string_field(js, "name", ctx);
    ctx = "segment '" + name + "' (" + std::to_string(i + 1) + ")";
    if (!js.contains("curve")) {
      throw ParseError(ctx + ": missing field 'curve'");
    }
    segments.push_back(Segment{name, parse_curve(js.at("curve"), ctx)});
  }
  try {
    return PlantChain(x0, std::move(segments));
  } catch (const ConstructionError& e) {
    throw ParseError(std::string("chain config: ") + e.what());
  }
}

std::string serialize_chain_config(const PlantChain& chain) {
  ordered_json j;
  j["soil_potential"] = chain.soil_potential();
  j["segments"] = ordered_json::array();
  for (const Segment& seg : chain.segments()) {
    ordered_json js;
    js["name"] = seg.name;
    js["curve"] = curve_to_json(seg.curve);
    j["segments"].push_back(std::move(js));
  }
  return j.dump(2);
}

std::string serialize_solution(const OptimalSolution& solution,
                               const PlantChain& chain) {
  if (solution.potentials.size() != chain.size() ||
      solution.capacities.size() != chain.size()) {
    throw DomainError("solution does not match the chain's segment count");
  }
  ordered_json j;
  j["potentials"] = solution.potentials;
  j["flow"] = solution.flow;
  j["case"] = solution.solution_case == SolutionCase::bottleneck
                  ? "bottleneck"
                  : "non_bottleneck";
  j["bottleneck_index"] = solution.bottleneck_index;
  j["capacities"] = ordered_json::array();
  for (const SegmentCapacity& cap : solution.capacities) {
    ordered_json jc;
    jc["argmax"] = cap.argmax_potential;
    jc["max_flow"] = cap.max_flow;
    j["capacities"].push_back(std::move(jc));
  }
  j["isolated_first_capacity"] = solution.isolated_first_capacity;
  return j.dump(2);
}

OptimalSolution parse_solution(const std::string& text,
                               const PlantChain& chain) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("solution: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("solution: top level must be an object");
  OptimalSolution sol;
  if (!j.contains("potentials") || !j.at("potentials").is_array()) {
    throw ParseError("solution: 'potentials' must be an array");
  }
  for (const auto& v : j.at("potentials")) {
    if (!v.is_number()) {
      throw ParseError("solution: 'potentials' entries must be numbers");
    }
    sol.potentials.push_back(v.get<double>());
  }
  if (sol.potentials.size() != chain.size()) {
    throw ParseError("solution: potential count does not match the chain");
  }
  sol.flow = num_field(j, "flow", "solution");
  const std::string c = string_field(j, "case", "solution");
  if (c == "bottleneck") {
    sol.solution_case = SolutionCase::bottleneck;
  } else if (c == "non_bottleneck") {
    sol.solution_case = SolutionCase::non_bottleneck;
  } else {
    throw ParseError("solution: unknown case '" + c + "'");
  }
  if (!j.contains("bottleneck_index") ||
      !j.at("bottleneck_index").is_number_integer()) {
    throw ParseError("solution: 'bottleneck_index' must be an integer");
  }
  sol.bottleneck_index = j.at("bottleneck_index").get<int>();
  if (!j.contains("capacities") || !j.at("capacities").is_array()) {
    throw ParseError("solution: 'capacities' must be an array");
  }
  std::size_t i = 0;
  for (const auto& jc : j.at("capacities")) {
    const std::string ctx = "solution capacity " + std::to_string(i + 1);
    if (!jc.is_object()) throw ParseError(ctx + ": must be an object");
    SegmentCapacity cap;
    cap.argmax_potential = num_field(jc, "argmax", ctx);
    cap.max_flow = num_field(jc, "max_flow", ctx);
    cap.base_potential =
        i == 0 ? chain.soil_potential() : sol.potentials[i - 1];
    sol.capacities.push_back(cap);
    ++i;
  }
  if (sol.capacities.size() != chain.size()) {
    throw ParseError("solution: capacity count does not match the chain");
  }
  sol.isolated_first_capacity =
      num_field(j, "isolated_first_capacity", "solution");
  return sol;
}

const std::vector<SpeciesRecord>& bundled_species() {
  static const std::vector<SpeciesRecord> species = [] {
    std::vector<SpeciesRecord> out;
    out.push_back(SpeciesRecord{
        "h_annuus",
        "H. annuus",
        PlantChain(0.0,
                   {Segment{"stem", VulnerabilityCurve::weibull(11.9, 3.34,
                                                                1.69)},
                    Segment{"leaf", VulnerabilityCurve::linear(0.4, 1.64)}}),
        "bulk conductances, mmol s^-1 MPa^-1; the source's reported optimum "
        "is inconsistent with these curve parameters, so computed values are "
        "authoritative",
        std::nullopt});
    out.push_back(SpeciesRecord{
        "a_rubrum",
        "A. rubrum",
        PlantChain(0.0,
                   {Segment{"stem", VulnerabilityCurve::weibull(25.29, 4.22,
                                                                4.67)},
                    Segment{"leaf", VulnerabilityCurve::weibull(29.2, 1.76,
                                                                10.24)}}),
        "conductances per unit leaf area, mmol m^-2 s^-1 MPa^-1",
        std::make_pair(0.73, 1.53)});
    out.push_back(SpeciesRecord{
        "l_tulipifera",
        "L. tulipifera",
        PlantChain(0.0,
                   {Segment{"stem", VulnerabilityCurve::weibull(4.27, 3.26,
                                                                4.46)},
                    Segment{"leaf", VulnerabilityCurve::weibull(9.8, 1.29,
                                                                4.91)}}),
        "conductances per unit leaf area, mmol m^-2 s^-1 MPa^-1",
        std::make_pair(0.65, 1.17)});
    out.push_back(SpeciesRecord{
        "p_virginiana",
        "P. virginiana",
        PlantChain(0.0,
                   {Segment{"stem", VulnerabilityCurve::weibull(1.07, 4.59,
                                                                4.11)},
                    Segment{"leaf", VulnerabilityCurve::weibull(32.8, 0.95,
                                                                2.15)}}),
        "conductances per unit leaf area, mmol m^-2 s^-1 MPa^-1",
        std::make_pair(0.98, 1.56)});
    return out;
  }();
  return species;
}

RectangleExport export_rectangles(const PlantChain& chain,
                                  const OptimalSolution& solution,
                                  int samples) {
  if (samples < 2) {
    throw DomainError("rectangle export needs at least 2 curve samples");
  }
  if (solution.potentials.size() != chain.size()) {
    throw DomainError("solution does not match the chain's segment count");
  }
  // Shared potential axis: wide enough to show each curve down to 1% of
  // its k_max and every solution rectangle with a margin.
  double range = 1.05 * solution.potentials.back();
  for (const Segment& seg : chain.segments()) {
    const VulnerabilityCurve& c = seg.curve;
    const double cutoff =
        c.family() == CurveFamily::linear
            ? c.p()
            : c.p() * std::pow(std::log(100.0), 1.0 / c.nu());
    range = std::max(range, cutoff);
  }
  RectangleExport data;
  double base = chain.soil_potential();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const Segment& seg = chain.segments()[i];
    for (int s = 0; s < samples; ++s) {
      const double psi = range * s / (samples - 1);
      data.rows.push_back(
          RectangleRow{seg.name, psi, seg.curve.evaluate(psi), "curve"});
    }
    const double x = solution.potentials[i];
    const double k = seg.curve.evaluate(x);
    data.rows.push_back(RectangleRow{seg.name, base, 0.0, "rectangle"});
    data.rows.push_back(RectangleRow{seg.name, x, 0.0, "rectangle"});
    data.rows.push_back(RectangleRow{seg.name, x, k, "rectangle"});
    data.rows.push_back(RectangleRow{seg.name, base, k, "rectangle"});
    base = x;
  }
  return data;
}

std::string rectangles_to_csv(const RectangleExport& data) {
  std::ostringstream out;
  out << "segment,psi,K,kind\n";
  for (const RectangleRow& row : data.rows) {
    out << csv_field(row.segment) << ',' << format_number(row.psi) << ','
        << format_number(row.conductance) << ',' << row.kind << '\n';
  }
  return out.str();
}

}  // namespace sapflow
