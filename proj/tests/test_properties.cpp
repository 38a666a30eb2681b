#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sapflow/chain.hpp"
#include "sapflow/errors.hpp"
#include "sapflow/io.hpp"
#include "support.hpp"

using fixtures::SolvedChain;
using sapflow::OptimalSolution;
using sapflow::PlantChain;
using sapflow::Segment;
using sapflow::SolutionCase;
using sapflow::SolverConfig;
using sapflow::VulnerabilityCurve;

namespace {

SolverConfig property_config() {
  SolverConfig cfg;
  cfg.grid_points = 400;  // speeds up the oracle suite; zoom keeps accuracy
  return cfg;
}

const std::vector<SolvedChain>& sample() {
  static const std::vector<SolvedChain> chains =
      fixtures::solved_sample(20240817u, 120, 4, property_config());
  return chains;
}

const std::vector<SolvedChain>& pair_sample() {
  static const std::vector<SolvedChain> chains =
      fixtures::solved_sample(777001u, 110, 2, property_config(), 2);
  return chains;
}

}  // namespace

TEST_CASE("sample sizes") {
  REQUIRE(sample().size() >= 100);
  REQUIRE(pair_sample().size() >= 100);
}

TEST_CASE("property: every segment carries the common flow") {
  const SolverConfig cfg = property_config();
  for (const SolvedChain& sc : sample()) {
    double base = sc.chain.soil_potential();
    for (std::size_t i = 0; i < sc.chain.size(); ++i) {
      const double f = sapflow::flow(sc.chain.segments()[i].curve, base,
                                     sc.solution.potentials[i]);
      CHECK(std::abs(f - sc.solution.flow) <=
            cfg.tol_f * std::max(1.0, sc.solution.flow));
      base = sc.solution.potentials[i];
    }
  }
}

TEST_CASE("property: the limiting segment is stationary") {
  for (const SolvedChain& sc : sample()) {
    const int k = sc.solution.bottleneck_index;
    REQUIRE(k >= 1);
    REQUIRE(k <= static_cast<int>(sc.chain.size()));
    const double base =
        k == 1 ? sc.chain.soil_potential() : sc.solution.potentials[k - 2];
    const auto& curve = sc.chain.segments()[k - 1].curve;
    const double x = sc.solution.potentials[k - 1];
    const double resid = curve.evaluate(x) + curve.derivative(x) * (x - base);
    CHECK(std::abs(resid) < 1e-6 * curve.evaluate(x));
  }
}

TEST_CASE("property: potentials increase along the chain") {
  for (const SolvedChain& sc : sample()) {
    double prev = sc.chain.soil_potential();
    for (const double x : sc.solution.potentials) {
      CHECK(x > prev);
      prev = x;
    }
  }
}

TEST_CASE("property: flow never exceeds any isolated capacity") {
  for (const SolvedChain& sc : sample()) {
    CHECK(sc.solution.flow <=
          sc.solution.isolated_first_capacity *
              (1.0 + 1e-9));
    for (const auto& cap : sc.solution.capacities) {
      CHECK(sc.solution.flow <= cap.max_flow * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("property: conductance rescaling moves flow, not potentials") {
  const SolverConfig cfg = property_config();
  fixtures::Rng rng(90125u);
  for (const SolvedChain& sc : sample()) {
    const double c = rng.uniform(0.1, 10.0);
    std::vector<Segment> scaled;
    for (const Segment& seg : sc.chain.segments()) {
      const auto& cv = seg.curve;
      scaled.push_back(
          {seg.name,
           cv.family() == sapflow::CurveFamily::weibull
               ? VulnerabilityCurve::weibull(c * cv.k_max(), cv.p(), cv.nu())
               : VulnerabilityCurve::linear(c * cv.k_max(), cv.p())});
    }
    const PlantChain chain2(sc.chain.soil_potential(), std::move(scaled));
    const OptimalSolution sol2 = sapflow::multi_segment_solve(chain2, cfg);
    for (std::size_t i = 0; i < sc.chain.size(); ++i) {
      CHECK(std::abs(sol2.potentials[i] - sc.solution.potentials[i]) <= 1e-8);
    }
    CHECK(sol2.flow ==
          doctest::Approx(c * sc.solution.flow).epsilon(1e-9));
    CHECK(sol2.bottleneck_index == sc.solution.bottleneck_index);
  }
}

TEST_CASE("property: the two solvers agree on two-segment chains") {
  const SolverConfig cfg = property_config();
  for (const SolvedChain& sc : pair_sample()) {
    const OptimalSolution direct = sapflow::two_segment_solve(sc.chain, cfg);
    CHECK(std::abs(direct.flow - sc.solution.flow) <=
          1e-6 * std::max(1.0, sc.solution.flow));
    CHECK(std::abs(direct.potentials[0] - sc.solution.potentials[0]) <= 1e-4);
    CHECK(std::abs(direct.potentials[1] - sc.solution.potentials[1]) <= 1e-4);
    CHECK(direct.bottleneck_index == sc.solution.bottleneck_index);
    CHECK(direct.solution_case == sc.solution.solution_case);
  }
}

TEST_CASE("property: the grid oracle reproduces the solver flow") {
  const SolverConfig cfg = property_config();
  for (const SolvedChain& sc : sample()) {
    const OptimalSolution grid = sapflow::oracle_grid(sc.chain, cfg);
    CHECK(std::abs(grid.flow - sc.solution.flow) <=
          2.0 / cfg.grid_points * std::max(1.0, sc.solution.flow));
  }
}

TEST_CASE("property: feasibility is monotone in the trial flow") {
  const SolverConfig cfg = property_config();
  fixtures::Rng rng(55501u);
  for (const SolvedChain& sc : sample()) {
    const double top = sc.solution.isolated_first_capacity * 1.5;
    bool seen_infeasible = false;
    double phi = 0.0;
    for (int j = 0; j < 8; ++j) {
      phi += rng.uniform(0.0, top / 8);
      const bool ok = sapflow::is_feasible(sc.chain, phi, cfg).feasible;
      if (seen_infeasible) CHECK_FALSE(ok);
      if (!ok) seen_infeasible = true;
    }
    // the optimum itself sits on the boundary
    CHECK(sapflow::is_feasible(sc.chain, sc.solution.flow * (1.0 - 1e-9), cfg)
              .feasible);
    CHECK_FALSE(
        sapflow::is_feasible(sc.chain, sc.solution.flow * (1.0 + 1e-6) + 1e-9,
                             cfg)
            .feasible);
  }
}

TEST_CASE("property: solution documents survive a round trip") {
  for (const SolvedChain& sc : sample()) {
    const std::string text =
        sapflow::serialize_solution(sc.solution, sc.chain);
    const OptimalSolution back = sapflow::parse_solution(text, sc.chain);
    for (std::size_t i = 0; i < sc.chain.size(); ++i) {
      CHECK(back.potentials[i] == sc.solution.potentials[i]);
      CHECK(back.capacities[i].argmax_potential ==
            sc.solution.capacities[i].argmax_potential);
      CHECK(back.capacities[i].max_flow == sc.solution.capacities[i].max_flow);
    }
    CHECK(back.flow == sc.solution.flow);
    CHECK(back.isolated_first_capacity == sc.solution.isolated_first_capacity);
    CHECK(sapflow::serialize_solution(back, sc.chain) == text);
  }
}

TEST_CASE("property: exported rectangles carry the flow as area") {
  for (const SolvedChain& sc : sample()) {
    const auto data = sapflow::export_rectangles(sc.chain, sc.solution, 2);
    const std::size_t per = 2 + 4;
    REQUIRE(data.rows.size() == per * sc.chain.size());
    for (std::size_t i = 0; i < sc.chain.size(); ++i) {
      const auto& lo = data.rows[per * i + 2];
      const auto& hi = data.rows[per * i + 3];
      const auto& top = data.rows[per * i + 4];
      const double area = (hi.psi - lo.psi) * top.conductance;
      CHECK(std::abs(area - sc.solution.flow) <=
            1e-9 * std::max(1.0, sc.solution.flow));
    }
  }
}
