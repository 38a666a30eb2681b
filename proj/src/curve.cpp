#include "sapflow/curve.hpp"

#include <cmath>
#include <sstream>

#include "sapflow/detail/bisect.hpp"
#include "sapflow/errors.hpp"

namespace sapflow {

namespace {

void require_positive(double value, const char* field, const char* family) {
  if (!(std::isfinite(value) && value > 0.0)) {
    std::ostringstream msg;
    msg << family << " curve: " << field << " must be finite and > 0, got "
        << value;
    throw ConstructionError(msg.str());
  }
}

void require_potential(double psi) {
  if (!(psi >= 0.0)) {
    std::ostringstream msg;
    msg << "potential must be >= 0, got " << psi;
    throw DomainError(msg.str());
  }
}

}  // namespace

VulnerabilityCurve::VulnerabilityCurve(CurveFamily family, double k_max,
                                       double p, double nu)
    : family_(family), k_max_(k_max), p_(p), nu_(nu) {}

VulnerabilityCurve VulnerabilityCurve::weibull(double k_max, double p,
                                               double nu) {
  require_positive(k_max, "k_max", "weibull");
  require_positive(p, "p", "weibull");
  require_positive(nu, "nu", "weibull");
  return VulnerabilityCurve(CurveFamily::weibull, k_max, p, nu);
}

VulnerabilityCurve VulnerabilityCurve::linear(double k_max, double p) {
  require_positive(k_max, "k_max", "linear");
  require_positive(p, "p", "linear");
  return VulnerabilityCurve(CurveFamily::linear, k_max, p, 0.0);
}

double VulnerabilityCurve::evaluate(double psi) const {
  require_potential(psi);
  if (family_ == CurveFamily::linear) {
    return psi >= p_ ? 0.0 : k_max_ * (1.0 - psi / p_);
  }
  return k_max_ * std::exp(-std::pow(psi / p_, nu_));
}

double VulnerabilityCurve::derivative(double psi) const {
  require_potential(psi);
  if (family_ == CurveFamily::linear) {
    return psi >= p_ ? 0.0 : -k_max_ / p_;
  }
  if (psi == 0.0) {
    if (nu_ > 1.0) return 0.0;
    if (nu_ == 1.0) return -k_max_ / p_;
    throw SingularityError(
        "weibull derivative is singular at psi = 0 for nu < 1");
  }
  // exp-log form keeps the psi^(nu-1) factor and the tail together so the
  // product underflows cleanly instead of evaluating inf * 0.
  const double t = psi / p_;
  return -(nu_ / p_) * k_max_ *
         std::exp((nu_ - 1.0) * std::log(t) - std::pow(t, nu_));
}

CurveValidity VulnerabilityCurve::validate() const {
  CurveValidity v;
  v.is_positive_decreasing = true;
  v.tail_vanishes = true;
  if (family_ == CurveFamily::linear) {
    v.log_reciprocal_convex = true;
  } else {
    v.log_reciprocal_convex = nu_ >= 1.0;
    if (!v.log_reciprocal_convex) {
      std::ostringstream msg;
      msg << "log-convexity fails: nu = " << nu_
          << " < 1, so ln(1/K) is concave near 0 and flow need not be "
             "unimodal";
      v.messages.push_back(msg.str());
    }
  }
  v.overall_valid =
      v.is_positive_decreasing && v.tail_vanishes && v.log_reciprocal_convex;
  return v;
}

double VulnerabilityCurve::upper_support(double flow_floor) const {
  if (!(flow_floor > 0.0 && flow_floor < 1.0)) {
    std::ostringstream msg;
    msg << "flow_floor must lie in (0, 1), got " << flow_floor;
    throw DomainError(msg.str());
  }
  if (family_ == CurveFamily::linear) return p_;
  // Free flow psi * K(psi) peaks at p * nu^(-1/nu) and decreases beyond.
  const double x_star = p_ * std::pow(nu_, -1.0 / nu_);
  const double peak = x_star * evaluate(x_star);
  const double cut = flow_floor * peak;
  double hi = x_star;
  for (int i = 0; i < 500 && hi * evaluate(hi) > cut; ++i) hi *= 2.0;
  if (hi * evaluate(hi) > cut) return hi;  // clamp for extreme shallow tails
  const double root = detail::bisect_sign_change(
      [&](double x) { return x * evaluate(x) - cut; }, x_star, hi, 200);
  return root;
}

}  // namespace sapflow
