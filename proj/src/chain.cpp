#include "sapflow/chain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>

#include "sapflow/detail/bisect.hpp"
#include "sapflow/errors.hpp"

namespace sapflow {

namespace {

constexpr double kHuge = 1e100;

std::string segment_label(const Segment& seg, std::size_t index) {
  std::ostringstream out;
  out << "segment '" << seg.name << "' (" << (index + 1) << ")";
  return out.str();
}

std::vector<SegmentCapacity> realized_capacities(const PlantChain& chain,
                                                 const std::vector<double>& pots,
                                                 const SolverConfig& cfg) {
  std::vector<SegmentCapacity> caps;
  caps.reserve(chain.size());
  double base = chain.soil_potential();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    caps.push_back(capacity(chain.segments()[i].curve, base, cfg));
    base = pots[i];
  }
  return caps;
}

/// First segment whose isolated capacity matches the flow within the
/// threshold; -1 when none does.
int first_at_capacity(const std::vector<SegmentCapacity>& caps,
                      double flow_value, double threshold) {
  for (std::size_t i = 0; i < caps.size(); ++i) {
    if (caps[i].max_flow - flow_value <= threshold) {
      return static_cast<int>(i) + 1;
    }
  }
  return -1;
}

int tightest_segment(const std::vector<SegmentCapacity>& caps) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < caps.size(); ++i) {
    if (caps[i].max_flow < caps[k].max_flow) k = i;
  }
  return static_cast<int>(k) + 1;
}

OptimalSolution assemble(const PlantChain& chain, std::vector<double> pots,
                         double flow_value, const SolverConfig& cfg,
                         double classify_threshold) {
  OptimalSolution sol;
  sol.capacities = realized_capacities(chain, pots, cfg);
  sol.potentials = std::move(pots);
  sol.flow = flow_value;
  sol.isolated_first_capacity = sol.capacities.front().max_flow;
  int k = first_at_capacity(sol.capacities, flow_value,
                            classify_threshold * std::max(1.0, flow_value));
  if (k < 0) k = tightest_segment(sol.capacities);
  sol.bottleneck_index = k;
  sol.solution_case =
      k == 1 ? SolutionCase::non_bottleneck : SolutionCase::bottleneck;
  return sol;
}

}  // namespace

PlantChain::PlantChain(double soil_potential, std::vector<Segment> segments)
    : soil_potential_(soil_potential), segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw ConstructionError("chain: at least one segment required");
  }
  if (!(std::isfinite(soil_potential_) && soil_potential_ >= 0.0)) {
    std::ostringstream msg;
    msg << "chain: soil potential must be finite and >= 0, got "
        << soil_potential_;
    throw ConstructionError(msg.str());
  }
}

std::vector<std::string> PlantChain::check() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const CurveValidity v = segments_[i].curve.validate();
    if (!v.overall_valid) {
      std::string msg = segment_label(segments_[i], i) + ": invalid curve";
      for (const std::string& m : v.messages) {
        msg += "; ";
        msg += m;
      }
      out.push_back(msg);
    }
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (!(segments_[i].curve.evaluate(soil_potential_) > 0.0)) {
      out.push_back(segment_label(segments_[i], i) +
                    ": zero conductance at the soil potential");
    }
  }
  return out;
}

void PlantChain::require_solvable() const {
  std::string validity;
  std::string conductance;
  for (const std::string& m : check()) {
    std::string& target =
        m.find("invalid curve") != std::string::npos ? validity : conductance;
    if (!target.empty()) target += "; ";
    target += m;
  }
  if (!validity.empty()) throw CurveValidityError(validity);
  if (!conductance.empty()) throw NoPositiveFlowError(conductance);
}

OptimalSolution two_segment_solve(const PlantChain& chain,
                                  const SolverConfig& cfg) {
  cfg.validate();
  if (chain.size() != 2) {
    throw UnsupportedChainSizeError(
        "two_segment_solve requires exactly 2 segments");
  }
  chain.require_solvable();
  const double x0 = chain.soil_potential();
  const VulnerabilityCurve& f = chain.segments()[0].curve;
  const VulnerabilityCurve& g = chain.segments()[1].curve;
  const double classify_threshold = std::sqrt(cfg.tol_f);

  const SegmentCapacity cap1 = capacity(f, x0, cfg);
  const double x1_ideal = cap1.argmax_potential;

  // If the second segment can relay the first segment's full capacity, the
  // optimum keeps segment 1 at its maximum and no scan is needed.
  if (g.evaluate(x1_ideal) > 0.0) {
    const SegmentCapacity cap2 = capacity(g, x1_ideal, cfg);
    if (cap1.max_flow <= cap2.max_flow) {
      const double x2 = solve_rising(g, x1_ideal, cap1.max_flow, cfg);
      return assemble(chain, {x1_ideal, x2}, cap1.max_flow, cfg,
                      classify_threshold);
    }
  }

  // Second segment is the bottleneck. At a stationary point the first
  // segment's flow equals the rectangle of the second, with
  // x1 = x2 + g(x2)/g'(x2). Scan that residual in x2 and bisect each sign
  // change. Below the soil node the residual is continued linearly, which
  // keeps it negative and root-free there.
  const auto x1_of = [&](double x2) {
    return x2 + g.evaluate(x2) / g.derivative(x2);
  };
  const auto residual = [&](double x2) {
    const double gv = g.evaluate(x2);
    // Past the representable tail the rectangle vanishes while the first
    // segment's flow does not, so the residual is positive there.
    if (gv == 0.0) return kHuge;
    const double x1 = x2 + gv / g.derivative(x2);
    const double rect = (x2 - x1) * gv;
    const double lhs = (x1 - x0) * f.evaluate(std::max(x1, x0));
    const double r = lhs - rect;
    return r > -kHuge ? r : -kHuge;
  };

  double scan_hi;
  if (g.evaluate(x1_ideal) > 0.0) {
    scan_hi = capacity(g, x1_ideal, cfg).argmax_potential;
  } else {
    // Linear curve already dead at x1_ideal; stay inside its support.
    scan_hi = g.p();
  }
  if (g.family() == CurveFamily::linear) {
    scan_hi = std::min(scan_hi, g.p() * (1.0 - 1e-12));
  }
  const double scan_lo = x0 + cfg.tol_x;
  if (!(scan_hi > scan_lo)) {
    throw NoRootFoundError("stationarity scan window is empty");
  }

  std::vector<double> roots;
  const int steps = cfg.grid_points;
  double prev_x = scan_lo;
  double prev_r = residual(scan_lo);
  if (prev_r == 0.0) roots.push_back(scan_lo);
  for (int i = 1; i <= steps; ++i) {
    const double x = scan_lo + (scan_hi - scan_lo) * i / steps;
    const double r = residual(x);
    if (r == 0.0) {
      roots.push_back(x);
    } else if (prev_r != 0.0 && (r > 0.0) != (prev_r > 0.0)) {
      roots.push_back(
          detail::bisect_sign_change(residual, prev_x, x, cfg.max_iter));
    }
    prev_x = x;
    prev_r = r;
  }
  if (roots.empty()) {
    throw NoRootFoundError(
        "stationarity scan found no sign change for the bottleneck case");
  }

  // Highest common flow wins; ties go to the smallest leaf potential,
  // which the ascending scan order provides.
  double best_flow = -1.0;
  double best_x1 = x0;
  double best_x2 = scan_lo;
  for (const double x2 : roots) {
    double x1 = x1_of(x2);
    if (x1 < x0) {
      if (x0 - x1 > 1e-9 * (1.0 + x0)) continue;
      x1 = x0;
    }
    const double fl = (x2 - x1) * g.evaluate(x2);
    if (fl > best_flow + cfg.tol_f * std::max(1.0, std::abs(best_flow))) {
      best_flow = fl;
      best_x1 = x1;
      best_x2 = x2;
    }
  }
  if (best_flow < 0.0) {
    throw NoRootFoundError("no stationary point maps into the chain domain");
  }
  return assemble(chain, {best_x1, best_x2}, best_flow, cfg,
                  classify_threshold);
}

FeasibilityResult is_feasible(const PlantChain& chain, double phi,
                              const SolverConfig& cfg) {
  cfg.validate();
  chain.require_solvable();
  if (!(phi >= 0.0)) {
    std::ostringstream msg;
    msg << "trial flow must be >= 0, got " << phi;
    throw DomainError(msg.str());
  }
  FeasibilityResult result;
  double base = chain.soil_potential();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (phi == 0.0) {
      result.potentials.push_back(base);
      continue;
    }
    try {
      base = solve_rising(chain.segments()[i].curve, base, phi, cfg);
    } catch (const InfeasibleTargetError&) {
      result.failing_index = static_cast<int>(i) + 1;
      return result;
    } catch (const NoPositiveFlowError&) {
      result.failing_index = static_cast<int>(i) + 1;
      return result;
    }
    result.potentials.push_back(base);
  }
  result.feasible = true;
  return result;
}

OptimalSolution multi_segment_solve(const PlantChain& chain,
                                    const SolverConfig& cfg) {
  cfg.validate();
  chain.require_solvable();
  const int n = static_cast<int>(chain.size());
  const double x0 = chain.soil_potential();
  const auto& segs = chain.segments();
  const double classify_threshold = std::sqrt(cfg.tol_f);

  const SegmentCapacity cap1 = capacity(segs[0].curve, x0, cfg);
  if (n == 1) {
    return assemble(chain, {cap1.argmax_potential}, cap1.max_flow, cfg,
                    classify_threshold);
  }

  // The flow can never exceed the first segment's isolated capacity, and
  // feasibility is monotone below it.
  const double hi0 = cap1.max_flow;
  const double scale = std::max(1.0, hi0);
  const FeasibilityResult top = is_feasible(chain, hi0, cfg);
  if (top.feasible) {
    return assemble(chain, top.potentials, hi0, cfg, classify_threshold);
  }

  double lo = 0.0;
  double hi = hi0;
  std::vector<double> pots(n, x0);
  for (int it = 0;
       it < cfg.max_iter && (hi - lo) > cfg.tol_f * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    FeasibilityResult r = is_feasible(chain, mid, cfg);
    if (r.feasible) {
      lo = mid;
      pots = std::move(r.potentials);
    } else {
      hi = mid;
    }
  }
  double flow_value = lo;

  // Identify the limiting segment at the feasible end, then polish: the
  // optimum solves cap_k(base_k(phi)) = phi, a strictly decreasing
  // residual, so one more bisection pins flow and potentials to machine
  // precision instead of the sqrt-accuracy the phi bracket alone gives.
  int k = 1;
  {
    double best_slack = std::numeric_limits<double>::infinity();
    double base = x0;
    for (int i = 0; i < n; ++i) {
      const double slack =
          capacity(segs[i].curve, base, cfg).max_flow - flow_value;
      if (slack < best_slack) {
        best_slack = slack;
        k = i + 1;
      }
      base = pots[i];
    }
  }
  const auto upstream = [&](double phi, std::vector<double>* out) {
    double b = x0;
    for (int i = 0; i + 1 < k; ++i) {
      b = solve_rising(segs[i].curve, b, phi, cfg);
      if (out) (*out)[i] = b;
    }
    return b;
  };
  const auto polish_residual = [&](double phi) {
    try {
      const double b = upstream(phi, nullptr);
      return capacity(segs[k - 1].curve, b, cfg).max_flow - phi;
    } catch (const Error&) {
      return -kHuge;
    }
  };
  try {
    if (polish_residual(lo) >= 0.0 && polish_residual(hi) < 0.0) {
      const double phi_star =
          detail::bisect_sign_change(polish_residual, lo, hi, cfg.max_iter);
      std::vector<double> refined(n);
      double b = upstream(phi_star, &refined);
      const SegmentCapacity cap_k = capacity(segs[k - 1].curve, b, cfg);
      refined[k - 1] = cap_k.argmax_potential;
      const double phi_final = cap_k.max_flow;
      b = cap_k.argmax_potential;
      for (int i = k; i < n; ++i) {
        b = solve_rising(segs[i].curve, b, phi_final, cfg);
        refined[i] = b;
      }
      if (phi_final >= lo - cfg.tol_f * scale &&
          phi_final <= hi + cfg.tol_f * scale) {
        pots = std::move(refined);
        flow_value = phi_final;
      }
    }
  } catch (const Error&) {
    // keep the unpolished bracket solution
  }
  return assemble(chain, pots, flow_value, cfg, classify_threshold);
}

OptimalSolution oracle_grid(const PlantChain& chain, const SolverConfig& cfg) {
  cfg.validate();
  chain.require_solvable();
  const int n = static_cast<int>(chain.size());
  if (n > 4) {
    throw UnsupportedChainSizeError("oracle_grid supports at most 4 segments");
  }
  const double x0 = chain.soil_potential();
  const auto& segs = chain.segments();
  const int G = cfg.grid_points;

  // Per-level windows. The optimum of level s lies below its curve's
  // upper support, and never more than one capacity-bracket width above
  // the level below.
  std::vector<double> lo(n, x0);
  std::vector<double> hi(n);
  std::vector<double> hi_cap(n);
  {
    double reach = x0;
    for (int s = 0; s < n; ++s) {
      const VulnerabilityCurve& c = segs[s].curve;
      const double width = c.family() == CurveFamily::linear
                               ? c.p()
                               : c.p() * std::pow(c.nu(), -1.0 / c.nu());
      reach += width;
      hi_cap[s] = std::max(c.upper_support(cfg.flow_floor), reach);
      hi[s] = hi_cap[s];
    }
  }

  std::vector<std::vector<double>> grid(n);
  std::vector<std::vector<double>> kval(n);
  std::vector<double> best_pots(n, x0);
  double best_flow = 0.0;

  for (int pass = 0; pass < 4; ++pass) {
    for (int s = 0; s < n; ++s) {
      grid[s].resize(G);
      kval[s].resize(G);
      for (int j = 0; j < G; ++j) {
        grid[s][j] = lo[s] + (hi[s] - lo[s]) * j / (G - 1);
        kval[s][j] = segs[s].curve.evaluate(grid[s][j]);
      }
    }

    // value[s][j]: best bottleneck flow of segments s..n-1 when the base
    // sits at grid[s-1][j]; choice[s][j] is the winning index in grid[s].
    // Adjacent levels share index space, so no interpolation is needed.
    std::vector<std::vector<double>> value(n);
    std::vector<std::vector<int>> choice(n);
    for (int s = n - 1; s >= 1; --s) {
      value[s].assign(G, 0.0);
      choice[s].assign(G, -1);
      for (int j = 0; j < G; ++j) {
        const double base = grid[s - 1][j];
        double best = 0.0;
        int arg = -1;
        for (int t = 0; t < G; ++t) {
          const double x = grid[s][t];
          if (x <= base) continue;
          double fl = (x - base) * kval[s][t];
          if (s + 1 < n) fl = std::min(fl, value[s + 1][t]);
          if (fl > best) {
            best = fl;
            arg = t;
          }
        }
        value[s][j] = best;
        choice[s][j] = arg;
      }
    }
    double best0 = 0.0;
    int arg0 = -1;
    for (int t = 0; t < G; ++t) {
      const double x = grid[0][t];
      if (x <= x0) continue;
      double fl = (x - x0) * kval[0][t];
      if (n > 1) fl = std::min(fl, value[1][t]);
      if (fl > best0) {
        best0 = fl;
        arg0 = t;
      }
    }

    std::vector<int> idx(n, -1);
    idx[0] = arg0;
    for (int s = 1; s < n; ++s) {
      idx[s] = idx[s - 1] >= 0 ? choice[s][idx[s - 1]] : -1;
    }
    double prev = x0;
    for (int s = 0; s < n; ++s) {
      best_pots[s] = idx[s] >= 0 ? grid[s][idx[s]] : prev;
      prev = best_pots[s];
    }
    best_flow = best0;

    // Zoom each window onto the incumbent. A level's conditional optimum
    // drifts with the grid error of every level above it, so the margin
    // accumulates the upstream steps instead of using the level's own step
    // alone. An incumbent pinned to a window edge means the optimum fell
    // outside; re-open that side by a full window width.
    double h_cum = 0.0;
    for (int s = 0; s < n; ++s) {
      const double width = hi[s] - lo[s];
      h_cum += width / (G - 1);
      double nlo = best_pots[s] - 3 * h_cum;
      double nhi = best_pots[s] + 3 * h_cum;
      if (idx[s] <= 1) nlo = lo[s] - width;
      if (idx[s] >= G - 2) nhi = hi[s] + width;
      nlo = std::max(x0, nlo);
      nhi = std::min(hi_cap[s], nhi);
      if (!(nhi > nlo)) nhi = nlo + std::max(1e-12, 1e-12 * std::abs(nlo));
      lo[s] = nlo;
      hi[s] = nhi;
    }
  }

  const double classify_threshold =
      std::max(std::sqrt(cfg.tol_f), 10.0 / G);
  return assemble(chain, best_pots, best_flow, cfg, classify_threshold);
}

std::pair<SolutionCase, int> detect_bottleneck(const OptimalSolution& solution,
                                               const PlantChain& chain,
                                               const SolverConfig& cfg) {
  cfg.validate();
  chain.require_solvable();
  if (solution.potentials.size() != chain.size()) {
    throw DomainError("solution and chain disagree on the segment count");
  }
  const std::vector<SegmentCapacity> caps =
      realized_capacities(chain, solution.potentials, cfg);
  const int k = first_at_capacity(
      caps, solution.flow,
      std::sqrt(cfg.tol_f) * std::max(1.0, solution.flow));
  if (k < 0) {
    throw NoStationarySegmentError(
        "no segment runs at its isolated capacity within tolerance");
  }
  return {k == 1 ? SolutionCase::non_bottleneck : SolutionCase::bottleneck, k};
}

}  // namespace sapflow
