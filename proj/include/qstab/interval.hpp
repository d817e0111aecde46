#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>

namespace qstab {

// Closed real interval [lo, hi]. Degenerate intervals (lo == hi) represent
// exact values.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) { assert(lo <= hi); }

  static Interval point(double x) { return {x, x}; }
  static Interval symmetric(double half_width) { return {-half_width, half_width}; }

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
};

inline double width(const Interval& y) { return y.hi - y.lo; }
inline double midpoint(const Interval& y) { return 0.5 * (y.lo + y.hi); }
inline bool contains(const Interval& y, double v) { return y.lo <= v && v <= y.hi; }
inline bool contains_zero(const Interval& y) { return y.lo <= 0.0 && 0.0 <= y.hi; }
inline double sup_abs(const Interval& y) { return std::max(std::abs(y.lo), std::abs(y.hi)); }
inline double inf_abs(const Interval& y) {
  return contains_zero(y) ? 0.0 : std::min(std::abs(y.lo), std::abs(y.hi));
}

// Exact product set {a*y : a in A, y in Y}. Both endpoints are attained by
// endpoint products, so min/max over the four candidates is exact.
inline Interval mul(const Interval& a, const Interval& y) {
  const double p1 = a.lo * y.lo;
  const double p2 = a.lo * y.hi;
  const double p3 = a.hi * y.lo;
  const double p4 = a.hi * y.hi;
  return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
}

inline Interval minkowski_sum(const Interval& x, const Interval& y) {
  return {x.lo + y.lo, x.hi + y.hi};
}

}  // namespace qstab
