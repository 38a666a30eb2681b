#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sapflow/chain.hpp"
#include "sapflow/errors.hpp"
#include "sapflow/io.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

/// The two engines must agree to this relative tolerance before `both`
/// runs and `reproduce` report success.
constexpr double kEngineAgreement = 1e-6;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw sapflow::ParseError("cannot read config file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Display rounding for tables; machine formats keep full precision.
std::string fixed2(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.2f", value);
  return buffer;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) {
    return field;
  }
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') {
      quoted += '"';
    }
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

const char* case_label(sapflow::SolutionCase solution_case) {
  return solution_case == sapflow::SolutionCase::bottleneck ? "bottleneck"
                                                            : "non_bottleneck";
}

const char* family_label(const sapflow::VulnerabilityCurve& curve) {
  return curve.family() == sapflow::CurveFamily::weibull ? "weibull" : "linear";
}

std::string curve_text(const sapflow::VulnerabilityCurve& curve) {
  using sapflow::format_number;
  std::string text = family_label(curve);
  text += "(k_max " + format_number(curve.k_max());
  text += ", p " + format_number(curve.p());
  if (curve.family() == sapflow::CurveFamily::weibull) {
    text += ", nu " + format_number(curve.nu());
  }
  return text + ")";
}

/// Column-aligned text output; numeric columns are right-aligned.
struct TextTable {
  std::vector<std::string> header;
  std::vector<bool> numeric;
  std::vector<std::vector<std::string>> rows;

  void print() const {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      width[c] = header[c].size();
    }
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    }
    print_row(header, width);
    for (const auto& row : rows) {
      print_row(row, width);
    }
  }

 private:
  void print_row(const std::vector<std::string>& row,
                 const std::vector<std::size_t>& width) const {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::string cell = row[c];
      const std::size_t pad = width[c] - cell.size();
      if (numeric[c]) {
        cell.insert(0, pad, ' ');
      } else {
        cell.append(pad, ' ');
      }
      if (c > 0) {
        line += "  ";
      }
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') {
      line.pop_back();
    }
    line += '\n';
    std::fputs(line.c_str(), stdout);
  }
};

/// The algebraic engine is exact only for two segments; everything else
/// goes through the feasibility bisection.
sapflow::OptimalSolution run_engine(const sapflow::PlantChain& chain,
                                    const sapflow::SolverConfig& cfg,
                                    bool algebraic) {
  if (algebraic && chain.size() == 2) {
    return sapflow::two_segment_solve(chain, cfg);
  }
  return sapflow::multi_segment_solve(chain, cfg);
}

double engine_deviation(const sapflow::OptimalSolution& a,
                        const sapflow::OptimalSolution& b) {
  double dev = std::abs(a.flow - b.flow) / std::max(1.0, std::abs(b.flow));
  for (std::size_t i = 0; i < a.potentials.size(); ++i) {
    dev = std::max(dev, std::abs(a.potentials[i] - b.potentials[i]) /
                            std::max(1.0, std::abs(b.potentials[i])));
  }
  return dev;
}

int cmd_solve(const std::string& config_path, const std::string& format,
              const std::string& method, const sapflow::SolverConfig& cfg) {
  const sapflow::PlantChain chain =
      sapflow::parse_chain_config(read_file(config_path));

  struct EngineRun {
    std::string method;
    sapflow::OptimalSolution solution;
  };
  std::vector<EngineRun> runs;
  if (method == "both") {
    runs.push_back({"algebraic", run_engine(chain, cfg, true)});
    runs.push_back({"bisection", run_engine(chain, cfg, false)});
  } else {
    runs.push_back({method, run_engine(chain, cfg, method == "algebraic")});
  }
  const bool both = runs.size() == 2;
  const double deviation =
      both ? engine_deviation(runs[0].solution, runs[1].solution) : 0.0;

  if (format == "json") {
    if (both) {
      ordered_json doc;
      for (const EngineRun& run : runs) {
        doc[run.method] = ordered_json::parse(
            sapflow::serialize_solution(run.solution, chain));
      }
      doc["max_relative_deviation"] = deviation;
      std::fputs((doc.dump(2) + "\n").c_str(), stdout);
    } else {
      std::fputs(
          (sapflow::serialize_solution(runs[0].solution, chain) + "\n").c_str(),
          stdout);
    }
  } else if (format == "csv") {
    std::string line = "method";
    for (const auto& seg : chain.segments()) {
      line += "," + csv_quote("psi_" + seg.name);
    }
    line += ",flow,first_capacity,case,bottleneck_index";
    if (both) {
      line += ",max_relative_deviation";
    }
    line += '\n';
    for (const EngineRun& run : runs) {
      line += run.method;
      for (double x : run.solution.potentials) {
        line += "," + sapflow::format_number(x);
      }
      line += "," + sapflow::format_number(run.solution.flow);
      line += "," + sapflow::format_number(run.solution.isolated_first_capacity);
      line += std::string(",") + case_label(run.solution.solution_case);
      line += "," + std::to_string(run.solution.bottleneck_index);
      if (both) {
        line += "," + sapflow::format_number(deviation);
      }
      line += '\n';
    }
    std::fputs(line.c_str(), stdout);
  } else {
    TextTable table;
    table.header = {"method"};
    table.numeric = {false};
    for (const auto& seg : chain.segments()) {
      table.header.push_back(seg.name);
      table.numeric.push_back(true);
    }
    for (const char* name : {"flow", "first_capacity"}) {
      table.header.push_back(name);
      table.numeric.push_back(true);
    }
    table.header.push_back("case");
    table.numeric.push_back(false);
    table.header.push_back("bottleneck");
    table.numeric.push_back(true);
    for (const EngineRun& run : runs) {
      std::vector<std::string> row = {run.method};
      for (double x : run.solution.potentials) {
        row.push_back(fixed2(x));
      }
      row.push_back(fixed2(run.solution.flow));
      row.push_back(fixed2(run.solution.isolated_first_capacity));
      row.push_back(case_label(run.solution.solution_case));
      row.push_back(std::to_string(run.solution.bottleneck_index));
      table.rows.push_back(std::move(row));
    }
    table.print();
    if (both) {
      std::printf("max relative deviation %s\n",
                  sapflow::format_number(deviation).c_str());
    }
  }

  if (both && deviation > kEngineAgreement) {
    std::fprintf(stderr,
                 "engines disagree: max relative deviation %.3g exceeds %.1g\n",
                 deviation, kEngineAgreement);
    return kFailure;
  }
  return kOk;
}

int cmd_reproduce(const std::string& format, const sapflow::SolverConfig& cfg) {
  struct Row {
    const sapflow::SpeciesRecord* rec;
    sapflow::OptimalSolution solution;
    double engine_dev;
  };
  std::vector<Row> rows;
  for (const sapflow::SpeciesRecord& rec : sapflow::bundled_species()) {
    Row row{&rec, sapflow::two_segment_solve(rec.chain, cfg), 0.0};
    row.engine_dev = engine_deviation(
        row.solution, sapflow::multi_segment_solve(rec.chain, cfg));
    rows.push_back(std::move(row));
  }

  std::vector<std::string> notes;
  for (const Row& row : rows) {
    if (std::find(notes.begin(), notes.end(), row.rec->units_note) ==
        notes.end()) {
      notes.push_back(row.rec->units_note);
    }
  }
  auto marker_of = [&notes](const std::string& note) {
    const auto it = std::find(notes.begin(), notes.end(), note);
    return std::string(static_cast<std::size_t>(it - notes.begin()) + 1, '*');
  };

  if (format == "json") {
    ordered_json doc = ordered_json::array();
    for (const Row& row : rows) {
      ordered_json entry;
      entry["key"] = row.rec->key;
      entry["species"] = row.rec->display_name;
      entry["psi_stem"] = row.solution.potentials[0];
      entry["psi_leaf"] = row.solution.potentials[1];
      entry["flow"] = row.solution.flow;
      entry["stem_capacity"] = row.solution.isolated_first_capacity;
      if (row.rec->reference_midday) {
        entry["midday"] = {{"stem", row.rec->reference_midday->first},
                           {"leaf", row.rec->reference_midday->second}};
        entry["deviation"] = {
            {"stem", std::abs(row.solution.potentials[0] -
                              row.rec->reference_midday->first)},
            {"leaf", std::abs(row.solution.potentials[1] -
                              row.rec->reference_midday->second)}};
      } else {
        entry["midday"] = nullptr;
        entry["deviation"] = nullptr;
      }
      entry["engine_deviation"] = row.engine_dev;
      entry["note"] = row.rec->units_note;
      doc.push_back(std::move(entry));
    }
    std::fputs((doc.dump(2) + "\n").c_str(), stdout);
  } else if (format == "csv") {
    std::string out =
        "species,psi_stem,psi_leaf,flow,stem_capacity,midday_stem,"
        "midday_leaf,dev_stem,dev_leaf,note\n";
    for (const Row& row : rows) {
      out += csv_quote(row.rec->display_name);
      out += "," + sapflow::format_number(row.solution.potentials[0]);
      out += "," + sapflow::format_number(row.solution.potentials[1]);
      out += "," + sapflow::format_number(row.solution.flow);
      out += "," + sapflow::format_number(row.solution.isolated_first_capacity);
      if (row.rec->reference_midday) {
        const auto& [stem, leaf] = *row.rec->reference_midday;
        out += "," + sapflow::format_number(stem);
        out += "," + sapflow::format_number(leaf);
        out += "," +
               sapflow::format_number(std::abs(row.solution.potentials[0] - stem));
        out += "," +
               sapflow::format_number(std::abs(row.solution.potentials[1] - leaf));
      } else {
        out += ",,,,";
      }
      out += "," + csv_quote(row.rec->units_note) + "\n";
    }
    std::fputs(out.c_str(), stdout);
  } else {
    TextTable table;
    table.header = {"species",       "psi_stem",    "psi_leaf",
                    "flow",          "stem_capacity", "midday_stem",
                    "midday_leaf",   "dev_stem",    "dev_leaf"};
    table.numeric = {false, true, true, true, true, true, true, true, true};
    for (const Row& row : rows) {
      std::vector<std::string> cells = {
          row.rec->display_name + marker_of(row.rec->units_note),
          fixed2(row.solution.potentials[0]),
          fixed2(row.solution.potentials[1]),
          fixed2(row.solution.flow),
          fixed2(row.solution.isolated_first_capacity)};
      if (row.rec->reference_midday) {
        const auto& [stem, leaf] = *row.rec->reference_midday;
        cells.push_back(fixed2(stem));
        cells.push_back(fixed2(leaf));
        cells.push_back(fixed2(std::abs(row.solution.potentials[0] - stem)));
        cells.push_back(fixed2(std::abs(row.solution.potentials[1] - leaf)));
      } else {
        cells.insert(cells.end(), 4, "-");
      }
      table.rows.push_back(std::move(cells));
    }
    table.print();
    std::fputs("\n", stdout);
    for (std::size_t i = 0; i < notes.size(); ++i) {
      std::printf("%s %s\n", std::string(i + 1, '*').c_str(),
                  notes[i].c_str());
    }
  }

  for (const Row& row : rows) {
    if (row.engine_dev > kEngineAgreement) {
      std::fprintf(stderr,
                   "engine cross-check failed for %s: deviation %.3g\n",
                   row.rec->key.c_str(), row.engine_dev);
      return kFailure;
    }
  }
  return kOk;
}

int cmd_validate(const std::string& config_path, const std::string& format) {
  const sapflow::PlantChain chain =
      sapflow::parse_chain_config(read_file(config_path));
  const std::vector<std::string> issues = chain.check();

  struct Report {
    const sapflow::Segment* seg;
    sapflow::CurveValidity validity;
    bool conducting;
  };
  std::vector<Report> reports;
  for (const sapflow::Segment& seg : chain.segments()) {
    reports.push_back({&seg, seg.curve.validate(),
                       seg.curve.evaluate(chain.soil_potential()) > 0.0});
  }

  if (format == "json") {
    ordered_json doc;
    doc["soil_potential"] = chain.soil_potential();
    doc["segments"] = ordered_json::array();
    for (const Report& r : reports) {
      doc["segments"].push_back(
          {{"name", r.seg->name},
           {"family", family_label(r.seg->curve)},
           {"is_positive_decreasing", r.validity.is_positive_decreasing},
           {"tail_vanishes", r.validity.tail_vanishes},
           {"log_reciprocal_convex", r.validity.log_reciprocal_convex},
           {"overall_valid", r.validity.overall_valid},
           {"conducting", r.conducting}});
    }
    doc["issues"] = issues;
    doc["ok"] = issues.empty();
    std::fputs((doc.dump(2) + "\n").c_str(), stdout);
  } else {
    TextTable table;
    table.header = {"segment",       "family",       "positive_decreasing",
                    "tail_vanishes", "log_convex",   "valid",
                    "conducting"};
    table.numeric = std::vector<bool>(table.header.size(), false);
    auto yes = [](bool flag) { return std::string(flag ? "yes" : "no"); };
    for (const Report& r : reports) {
      table.rows.push_back({r.seg->name, family_label(r.seg->curve),
                            yes(r.validity.is_positive_decreasing),
                            yes(r.validity.tail_vanishes),
                            yes(r.validity.log_reciprocal_convex),
                            yes(r.validity.overall_valid), yes(r.conducting)});
    }
    table.print();
    if (!issues.empty()) {
      std::fputs("\n", stdout);
      for (const std::string& issue : issues) {
        std::printf("issue: %s\n", issue.c_str());
      }
    }
  }

  if (!issues.empty()) {
    std::fprintf(stderr, "validation failed: %zu issue%s\n", issues.size(),
                 issues.size() == 1 ? "" : "s");
    return kFailure;
  }
  return kOk;
}

int cmd_sweep(const std::string& config_path, double from, double to, int steps,
              const sapflow::SolverConfig& cfg) {
  const sapflow::PlantChain base =
      sapflow::parse_chain_config(read_file(config_path));
  const std::size_t n = base.size();

  std::string header = "soil_potential";
  for (const auto& seg : base.segments()) {
    header += "," + csv_quote("psi_" + seg.name);
  }
  header += ",flow,bottleneck_index,status\n";
  std::fputs(header.c_str(), stdout);

  int solved = 0;
  for (int i = 0; i < steps; ++i) {
    const double x0 = from + (to - from) * i / (steps - 1);
    std::string line = sapflow::format_number(x0);
    try {
      const sapflow::PlantChain chain(x0, base.segments());
      const sapflow::OptimalSolution sol =
          sapflow::multi_segment_solve(chain, cfg);
      for (double x : sol.potentials) {
        line += "," + sapflow::format_number(x);
      }
      line += "," + sapflow::format_number(sol.flow);
      line += "," + std::to_string(sol.bottleneck_index);
      line += ",ok";
      ++solved;
    } catch (const sapflow::Error&) {
      line += std::string(n + 2, ',') + ",infeasible";
    }
    line += '\n';
    std::fputs(line.c_str(), stdout);
  }
  return solved > 0 ? kOk : kFailure;
}

int cmd_export(const std::string& config_path, const std::string& out_path,
               int samples, const sapflow::SolverConfig& cfg) {
  const sapflow::PlantChain chain =
      sapflow::parse_chain_config(read_file(config_path));
  const sapflow::OptimalSolution solution =
      sapflow::multi_segment_solve(chain, cfg);
  const sapflow::RectangleExport data =
      sapflow::export_rectangles(chain, solution, samples);

  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::fprintf(stderr, "cannot open '%s' for writing\n", out_path.c_str());
    return kFailure;
  }
  out << sapflow::rectangles_to_csv(data);
  out.flush();
  if (!out) {
    std::fprintf(stderr, "write to '%s' failed\n", out_path.c_str());
    return kFailure;
  }

  std::printf("wrote %s (%zu rows)\n", out_path.c_str(), data.rows.size());
  const sapflow::Segment& limiting =
      chain.segments()[static_cast<std::size_t>(solution.bottleneck_index - 1)];
  std::printf("flow %s, case %s, segment %d (%s) at capacity\n",
              fixed2(solution.flow).c_str(),
              case_label(solution.solution_case), solution.bottleneck_index,
              limiting.name.c_str());
  return kOk;
}

int cmd_species(const std::string& format) {
  const std::vector<sapflow::SpeciesRecord>& species =
      sapflow::bundled_species();

  if (format == "json") {
    ordered_json doc = ordered_json::array();
    for (const sapflow::SpeciesRecord& rec : species) {
      ordered_json entry;
      entry["key"] = rec.key;
      entry["species"] = rec.display_name;
      entry["config"] =
          ordered_json::parse(sapflow::serialize_chain_config(rec.chain));
      if (rec.reference_midday) {
        entry["reference_midday"] = {{"stem", rec.reference_midday->first},
                                     {"leaf", rec.reference_midday->second}};
      } else {
        entry["reference_midday"] = nullptr;
      }
      entry["note"] = rec.units_note;
      doc.push_back(std::move(entry));
    }
    std::fputs((doc.dump(2) + "\n").c_str(), stdout);
  } else if (format == "csv") {
    std::string out = "key,species,soil_potential,segment,type,k_max,p,nu\n";
    for (const sapflow::SpeciesRecord& rec : species) {
      for (const auto& seg : rec.chain.segments()) {
        const auto& c = seg.curve;
        out += rec.key;
        out += "," + csv_quote(rec.display_name);
        out += "," + sapflow::format_number(rec.chain.soil_potential());
        out += "," + csv_quote(seg.name);
        out += std::string(",") + family_label(c);
        out += "," + sapflow::format_number(c.k_max());
        out += "," + sapflow::format_number(c.p());
        out += c.family() == sapflow::CurveFamily::weibull
                   ? "," + sapflow::format_number(c.nu())
                   : std::string(",");
        out += '\n';
      }
    }
    std::fputs(out.c_str(), stdout);
  } else {
    TextTable table;
    table.header = {"key", "species", "soil", "segment", "curve"};
    table.numeric = {false, false, true, false, false};
    for (const sapflow::SpeciesRecord& rec : species) {
      for (const auto& seg : rec.chain.segments()) {
        table.rows.push_back(
            {rec.key, rec.display_name,
             sapflow::format_number(rec.chain.soil_potential()), seg.name,
             curve_text(seg.curve)});
      }
    }
    table.print();
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Optimal steady water flow through a chain of plant segments with "
      "vulnerability curves"};
  app.require_subcommand(1);

  sapflow::SolverConfig cfg;
  std::string format = "table";
  app.add_option("--tol-x", cfg.tol_x, "Potential tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--tol-f", cfg.tol_f, "Flow tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--grid", cfg.grid_points, "Points for grid-based checks")
      ->check(CLI::Range(10, 1000000))
      ->capture_default_str();
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();

  std::string solve_config;
  std::string method = "bisection";
  CLI::App* solve =
      app.add_subcommand("solve", "Solve a chain config for its optimal flow");
  solve->fallthrough();
  solve->add_option("--config", solve_config, "Chain config JSON")->required();
  solve->add_option("--method", method, "Solver engine")
      ->check(CLI::IsMember({"algebraic", "bisection", "both"}))
      ->capture_default_str();

  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "Recompute the bundled species optima with both engines");
  reproduce->fallthrough();

  std::string validate_config;
  CLI::App* validate = app.add_subcommand(
      "validate", "Check a chain config against the solver preconditions");
  validate->fallthrough();
  validate->add_option("--config", validate_config, "Chain config JSON")
      ->required();

  std::string sweep_config;
  std::string sweep_param = "soil_potential";
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  int sweep_steps = 0;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Re-solve a chain config across a range of soil potentials");
  sweep->fallthrough();
  sweep->add_option("--config", sweep_config, "Chain config JSON")->required();
  sweep->add_option("--param", sweep_param, "Swept parameter")
      ->check(CLI::IsMember({"soil_potential"}))
      ->capture_default_str();
  sweep->add_option("--from", sweep_from, "First value")
      ->required()
      ->check(CLI::NonNegativeNumber);
  sweep->add_option("--to", sweep_to, "Last value")
      ->required()
      ->check(CLI::NonNegativeNumber);
  sweep->add_option("--steps", sweep_steps, "Number of rows")
      ->required()
      ->check(CLI::Range(2, 1000000));

  std::string export_config;
  std::string export_out;
  int export_samples = 500;
  CLI::App* exporter = app.add_subcommand(
      "export", "Write curve and flow-rectangle plot data as CSV");
  exporter->fallthrough();
  exporter->add_option("--config", export_config, "Chain config JSON")
      ->required();
  exporter->add_option("--out", export_out, "Output CSV path")->required();
  exporter->add_option("--samples", export_samples, "Curve samples per segment")
      ->check(CLI::Range(2, 10000000))
      ->capture_default_str();

  CLI::App* species =
      app.add_subcommand("species", "List the bundled species data");
  species->fallthrough();
  bool species_list = false;
  species->add_flag("--list", species_list, "List keys, curves, and units");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    cfg.validate();
  } catch (const sapflow::Error& e) {
    std::fprintf(stderr, "invalid solver configuration: %s\n", e.what());
    return kUsage;
  }

  try {
    if (solve->parsed()) {
      return cmd_solve(solve_config, format, method, cfg);
    }
    if (reproduce->parsed()) {
      return cmd_reproduce(format, cfg);
    }
    if (validate->parsed()) {
      return cmd_validate(validate_config, format);
    }
    if (sweep->parsed()) {
      if (!(sweep_from < sweep_to)) {
        std::fprintf(stderr, "--from must be smaller than --to\n");
        return kUsage;
      }
      return cmd_sweep(sweep_config, sweep_from, sweep_to, sweep_steps, cfg);
    }
    if (exporter->parsed()) {
      return cmd_export(export_config, export_out, export_samples, cfg);
    }
    if (species->parsed()) {
      return cmd_species(format);
    }
  } catch (const sapflow::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
