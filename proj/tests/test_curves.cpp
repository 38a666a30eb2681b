#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "sapflow/curve.hpp"
#include "sapflow/errors.hpp"
#include "support.hpp"

using sapflow::CurveFamily;
using sapflow::CurveValidity;
using sapflow::VulnerabilityCurve;

TEST_CASE("construction rejects non-positive parameters") {
  CHECK_THROWS_AS(VulnerabilityCurve::weibull(0.0, 1.0, 2.0),
                  sapflow::ConstructionError);
  CHECK_THROWS_AS(VulnerabilityCurve::weibull(-2.0, 1.0, 2.0),
                  sapflow::ConstructionError);
  CHECK_THROWS_AS(VulnerabilityCurve::weibull(1.0, 0.0, 2.0),
                  sapflow::ConstructionError);
  CHECK_THROWS_AS(VulnerabilityCurve::weibull(1.0, 1.0, -1.0),
                  sapflow::ConstructionError);
  CHECK_THROWS_AS(VulnerabilityCurve::weibull(1.0, 1.0, 0.0),
                  sapflow::ConstructionError);
  CHECK_THROWS_AS(
      VulnerabilityCurve::weibull(std::nan(""), 1.0, 2.0),
      sapflow::ConstructionError);
  CHECK_THROWS_AS(VulnerabilityCurve::linear(1.0, 0.0),
                  sapflow::ConstructionError);
  CHECK_THROWS_AS(VulnerabilityCurve::linear(0.0, 1.0),
                  sapflow::ConstructionError);
  CHECK_NOTHROW(VulnerabilityCurve::weibull(11.9, 3.34, 1.69));
  CHECK_NOTHROW(VulnerabilityCurve::linear(0.4, 1.64));
}

TEST_CASE("weibull evaluation") {
  const auto c = VulnerabilityCurve::weibull(2.0, 1.0, 2.0);
  CHECK(c.family() == CurveFamily::weibull);
  CHECK(c.evaluate(0.0) == 2.0);
  // K(0.5) = 2 e^(-1/4), K(1) = 2/e
  CHECK(c.evaluate(0.5) ==
        doctest::Approx(1.55760156614281).epsilon(1e-13));
  CHECK(c.evaluate(1.0) ==
        doctest::Approx(0.735758882342885).epsilon(1e-13));
  CHECK(c.evaluate(40.0) == 0.0);  // underflow, not NaN

  const auto h = VulnerabilityCurve::weibull(11.9, 3.34, 1.69);
  CHECK(h.evaluate(0.0) == 11.9);
  CHECK(h.evaluate(3.34) == doctest::Approx(11.9 / std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("linear evaluation clamps at the cutoff") {
  const auto c = VulnerabilityCurve::linear(0.4, 1.64);
  CHECK(c.evaluate(0.0) == 0.4);
  CHECK(c.evaluate(0.82) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(c.evaluate(1.64) == 0.0);
  CHECK(c.evaluate(5.0) == 0.0);
  CHECK(c.evaluate(1.6399) > 0.0);
}

TEST_CASE("evaluation outside the domain") {
  const auto c = VulnerabilityCurve::weibull(1.0, 1.0, 2.0);
  CHECK_THROWS_AS(c.evaluate(-0.1), sapflow::DomainError);
  CHECK_THROWS_AS(c.evaluate(std::nan("")), sapflow::DomainError);
  CHECK_THROWS_AS(c.derivative(-1.0), sapflow::DomainError);
}

TEST_CASE("derivative closed values") {
  const auto c = VulnerabilityCurve::weibull(2.0, 1.0, 2.0);
  // K'(x) = -4 x e^(-x^2)
  CHECK(c.derivative(0.5) ==
        doctest::Approx(-1.55760156614281).epsilon(1e-13));
  CHECK(c.derivative(0.0) == 0.0);

  const auto e = VulnerabilityCurve::weibull(2.0, 1.0, 1.0);
  CHECK(e.derivative(0.0) == doctest::Approx(-2.0).epsilon(1e-14));

  const auto s = VulnerabilityCurve::weibull(2.0, 1.0, 0.5);
  CHECK_THROWS_AS(s.derivative(0.0), sapflow::SingularityError);
  CHECK(s.derivative(0.25) ==
        doctest::Approx(-1.21306131942527).epsilon(1e-13));

  const auto l = VulnerabilityCurve::linear(0.4, 1.64);
  CHECK(l.derivative(0.5) == doctest::Approx(-0.4 / 1.64).epsilon(1e-14));
  CHECK(l.derivative(1.64) == 0.0);
  CHECK(l.derivative(3.0) == 0.0);
}

TEST_CASE("derivative stays finite deep in the tail") {
  const auto c = VulnerabilityCurve::weibull(50.0, 0.5, 12.0);
  CHECK(c.derivative(50.0) == 0.0);
  CHECK(std::isfinite(c.derivative(5.0)));
  const auto d = VulnerabilityCurve::weibull(1.0, 3.0, 1.5);
  for (double x : {1e-8, 1e-3, 0.1, 1.0, 10.0, 100.0, 1e4}) {
    CHECK(std::isfinite(d.derivative(x)));
    CHECK(d.derivative(x) <= 0.0);
  }
}

TEST_CASE("derivative matches a central difference") {
  const VulnerabilityCurve curves[] = {
      VulnerabilityCurve::weibull(11.9, 3.34, 1.69),
      VulnerabilityCurve::weibull(29.2, 1.76, 10.24),
      VulnerabilityCurve::weibull(1.07, 4.59, 4.11),
      VulnerabilityCurve::linear(0.4, 1.64),
  };
  for (const auto& c : curves) {
    for (double x : {0.2, 0.7, 1.3, 2.9}) {
      if (c.family() == CurveFamily::linear && x >= c.p()) continue;
      const double h = 1e-6 * (1.0 + x);
      const double fd = (c.evaluate(x + h) - c.evaluate(x - h)) / (2.0 * h);
      const double an = c.derivative(x);
      CHECK(an == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("validation flags") {
  const CurveValidity ok = VulnerabilityCurve::weibull(1.0, 1.0, 1.0).validate();
  CHECK(ok.is_positive_decreasing);
  CHECK(ok.tail_vanishes);
  CHECK(ok.log_reciprocal_convex);
  CHECK(ok.overall_valid);
  CHECK(ok.messages.empty());

  CHECK(VulnerabilityCurve::weibull(1.0, 1.0, 4.5).validate().overall_valid);
  CHECK(VulnerabilityCurve::linear(1.0, 1.0).validate().overall_valid);

  const CurveValidity bad =
      VulnerabilityCurve::weibull(1.0, 1.0, 0.5).validate();
  CHECK(bad.is_positive_decreasing);
  CHECK(bad.tail_vanishes);
  CHECK_FALSE(bad.log_reciprocal_convex);
  CHECK_FALSE(bad.overall_valid);
  REQUIRE(bad.messages.size() == 1);
  CHECK(bad.messages[0].find("log-convexity") != std::string::npos);
  CHECK(bad.messages[0].find("nu") != std::string::npos);
}

TEST_CASE("upper support for linear curves is the cutoff") {
  CHECK(VulnerabilityCurve::linear(0.4, 1.64).upper_support() == 1.64);
  CHECK(VulnerabilityCurve::linear(3.0, 2.5).upper_support(1e-3) == 2.5);
}

TEST_CASE("upper support frozen values") {
  const auto ar_stem = VulnerabilityCurve::weibull(25.29, 4.22, 4.67);
  const auto ha_stem = VulnerabilityCurve::weibull(11.9, 3.34, 1.69);
  const auto pv_stem = VulnerabilityCurve::weibull(1.07, 4.59, 4.11);
  const auto ar_leaf = VulnerabilityCurve::weibull(29.2, 1.76, 10.24);
  CHECK(ar_stem.upper_support() ==
        doctest::Approx(fixtures::kARubrumStemSupport).epsilon(1e-8));
  CHECK(ha_stem.upper_support() ==
        doctest::Approx(fixtures::kHAnnuusStemSupport).epsilon(1e-8));
  CHECK(pv_stem.upper_support() ==
        doctest::Approx(fixtures::kPVirginianaStemSupport).epsilon(1e-8));
  CHECK(ar_leaf.upper_support() ==
        doctest::Approx(fixtures::kARubrumLeafSupport).epsilon(1e-8));
}

TEST_CASE("upper support bounds the free flow") {
  for (double nu : {1.0, 1.69, 4.67, 10.24}) {
    const auto c = VulnerabilityCurve::weibull(7.3, 2.1, nu);
    const double x_star = 2.1 * std::pow(nu, -1.0 / nu);
    const double peak = x_star * c.evaluate(x_star);
    for (double floor_value : {1e-9, 1e-6, 1e-3}) {
      const double u = c.upper_support(floor_value);
      CHECK(u > x_star);
      CHECK(u * c.evaluate(u) <= floor_value * peak * (1.0 + 1e-9));
      CHECK(0.999 * u * c.evaluate(0.999 * u) >=
            floor_value * peak * (1.0 - 1e-2));
    }
  }
}

TEST_CASE("upper support rejects bad floors") {
  const auto c = VulnerabilityCurve::weibull(1.0, 1.0, 2.0);
  CHECK_THROWS_AS(c.upper_support(0.0), sapflow::DomainError);
  CHECK_THROWS_AS(c.upper_support(1.0), sapflow::DomainError);
  CHECK_THROWS_AS(c.upper_support(-0.5), sapflow::DomainError);
  CHECK_THROWS_AS(c.upper_support(std::nan("")), sapflow::DomainError);
}
