#pragma once

namespace sapflow::detail {

/// Bisection on a sign change of r over [lo, hi]. Assumes r(lo) and the
/// far end differ in sign (the far end is never evaluated). Runs until the
/// bracket collapses to adjacent doubles or max_iter midpoints have been
/// probed, then returns the bracket midpoint. An exact zero is returned
/// immediately.
template <class R>
double bisect_sign_change(R&& r, double lo, double hi, int max_iter) {
  double r_lo = r(lo);
  if (r_lo == 0.0) return lo;
  const bool lo_positive = r_lo > 0.0;
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double r_mid = r(mid);
    if (r_mid == 0.0) return mid;
    if ((r_mid > 0.0) == lo_positive) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace sapflow::detail
