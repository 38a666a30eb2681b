#pragma once

#include <string>
#include <vector>

namespace sapflow {

/// Default fraction of the free-flow maximum used to cut off the upper
/// support of a curve.
inline constexpr double kDefaultFlowFloor = 1e-9;

enum class CurveFamily { weibull, linear };

/// Diagnostic flags for the conditions a conductance curve must satisfy
/// before the flow solvers may rely on unimodality.
struct CurveValidity {
  bool is_positive_decreasing = false;
  bool tail_vanishes = false;
  bool log_reciprocal_convex = false;
  bool overall_valid = false;
  std::vector<std::string> messages;
};

/// Hydraulic conductance as a function of water potential psi >= 0 (MPa,
/// magnitude of tension).
///
/// Two families:
///   weibull: K(psi) = k_max * exp(-(psi/p)^nu)
///   linear:  K(psi) = k_max * (1 - psi/p) for psi < p, else 0
class VulnerabilityCurve {
public:
  static VulnerabilityCurve weibull(double k_max, double p, double nu);
  static VulnerabilityCurve linear(double k_max, double p);

  CurveFamily family() const noexcept { return family_; }
  double k_max() const noexcept { return k_max_; }
  double p() const noexcept { return p_; }
  /// Shape exponent; 0 for linear curves.
  double nu() const noexcept { return nu_; }

  /// K(psi). Requires psi >= 0.
  double evaluate(double psi) const;

  /// dK/dpsi. For the clamped region of a linear curve returns 0. Weibull
  /// curves with nu < 1 are singular at psi = 0.
  double derivative(double psi) const;

  CurveValidity validate() const;

  /// Smallest potential U such that psi * K(psi) <= flow_floor times its
  /// maximum for all psi >= U. Finite for both families; every flow
  /// maximum of interest lies below it. Requires 0 < flow_floor < 1.
  double upper_support(double flow_floor = kDefaultFlowFloor) const;

private:
  VulnerabilityCurve(CurveFamily family, double k_max, double p, double nu);

  CurveFamily family_;
  double k_max_;
  double p_;
  double nu_;
};

}  // namespace sapflow
