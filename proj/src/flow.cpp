#include "sapflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sapflow/detail/bisect.hpp"
#include "sapflow/errors.hpp"

namespace sapflow {

namespace {

void require_valid(const VulnerabilityCurve& curve) {
  const CurveValidity v = curve.validate();
  if (v.overall_valid) return;
  std::string msg = "curve fails solver preconditions";
  for (const std::string& m : v.messages) {
    msg += "; ";
    msg += m;
  }
  throw CurveValidityError(msg);
}

double require_conducting(const VulnerabilityCurve& curve, double x_base) {
  const double k = curve.evaluate(x_base);
  if (!(k > 0.0)) {
    std::ostringstream msg;
    msg << "conductance is zero at base potential " << x_base
        << "; no positive flow possible";
    throw NoPositiveFlowError(msg.str());
  }
  return k;
}

}  // namespace

void SolverConfig::validate() const {
  const bool ok = std::isfinite(tol_x) && tol_x > 0.0 &&
                  std::isfinite(tol_f) && tol_f > 0.0 && grid_points >= 10 &&
                  max_iter > 0 && std::isfinite(flow_floor) &&
                  flow_floor > 0.0 && flow_floor < 1.0;
  if (!ok) {
    throw ConstructionError(
        "solver config: tolerances and iteration caps must be positive, "
        "grid_points >= 10, flow_floor in (0, 1)");
  }
}

double flow(const VulnerabilityCurve& curve, double x_base, double x) {
  if (!(x_base >= 0.0)) {
    std::ostringstream msg;
    msg << "base potential must be >= 0, got " << x_base;
    throw DomainError(msg.str());
  }
  return (x - x_base) * curve.evaluate(x);
}

namespace detail {

SegmentCapacity capacity_by_bisection(const VulnerabilityCurve& curve,
                                      double x_base, const SolverConfig& cfg) {
  // Stationarity residual r(x) = K(x) + K'(x)(x - x_base); r(x_base) > 0.
  // The stationary point sits within p * nu^(-1/nu) of the base for any
  // valid Weibull curve (within p for linear), so the bracket below always
  // spans a sign change.
  double width;
  if (curve.family() == CurveFamily::linear) {
    width = curve.p() - x_base;
  } else {
    width = curve.p() * std::pow(curve.nu(), -1.0 / curve.nu());
  }
  const double hi = x_base + width;
  const double root = bisect_sign_change(
      [&](double x) {
        // Beyond the representable tail K and K' both underflow to zero;
        // that region lies past the argmax, so count it as negative
        // instead of reporting a spurious exact root.
        const double k = curve.evaluate(x);
        if (k == 0.0) return -1.0;
        return k + curve.derivative(x) * (x - x_base);
      },
      x_base, hi, cfg.max_iter);
  SegmentCapacity cap;
  cap.argmax_potential = root;
  cap.max_flow = flow(curve, x_base, root);
  cap.base_potential = x_base;
  return cap;
}

}  // namespace detail

SegmentCapacity capacity(const VulnerabilityCurve& curve, double x_base,
                         const SolverConfig& cfg) {
  cfg.validate();
  require_valid(curve);
  require_conducting(curve, x_base);
  SegmentCapacity cap;
  cap.base_potential = x_base;
  if (curve.family() == CurveFamily::linear) {
    cap.argmax_potential = 0.5 * (x_base + curve.p());
  } else if (x_base == 0.0) {
    cap.argmax_potential = curve.p() * std::pow(curve.nu(), -1.0 / curve.nu());
  } else {
    return detail::capacity_by_bisection(curve, x_base, cfg);
  }
  cap.max_flow = flow(curve, x_base, cap.argmax_potential);
  return cap;
}

double solve_rising(const VulnerabilityCurve& curve, double x_base,
                    double target, const SolverConfig& cfg) {
  cfg.validate();
  if (!(target >= 0.0)) {
    std::ostringstream msg;
    msg << "flow target must be >= 0, got " << target;
    throw DomainError(msg.str());
  }
  const SegmentCapacity cap = capacity(curve, x_base, cfg);
  if (target == 0.0) return x_base;
  const double scale = std::max({1.0, cap.max_flow, target});
  if (target > cap.max_flow) {
    if (target <= cap.max_flow + cfg.tol_f * scale) return cap.argmax_potential;
    std::ostringstream msg;
    msg << "flow target " << target << " exceeds segment capacity "
        << cap.max_flow << " from base " << x_base;
    throw InfeasibleTargetError(msg.str());
  }
  // Flow rises from 0 at x_base to the capacity at the argmax, so the
  // smallest root lies in this bracket.
  return detail::bisect_sign_change(
      [&](double x) { return flow(curve, x_base, x) - target; }, x_base,
      cap.argmax_potential, cfg.max_iter);
}

}  // namespace sapflow
