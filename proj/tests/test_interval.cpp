#include <doctest.h>

#include "qstab/interval.hpp"
#include "test_helpers.hpp"

using namespace qstab;
using test::close;
using test::FailureLog;

namespace {

// Closed-form width of the product set, by case. The first case holds for
// any A when Y is symmetric about 0 (the only way the analysis produces a
// zero-containing Y), and for A not containing 0 with any Y containing 0.
double width_formula(const Interval& a, const Interval& y) {
  const double c = midpoint(a);
  const double e = 0.5 * width(a);
  if (contains_zero(y)) return (std::abs(c) + e) * width(y);
  if (!contains_zero(a)) return std::abs(c) * width(y) + e * std::abs(y.hi + y.lo);
  return 2.0 * e * sup_abs(y);
}

// Closed-form |midpoint| of the product set; the zero-containing-Y case
// additionally needs Y symmetric.
double abs_mid_formula(const Interval& a, const Interval& y) {
  const double c = midpoint(a);
  const double e = 0.5 * width(a);
  if (contains_zero(y)) return 0.0;
  if (!contains_zero(a))
    return 0.5 * ((std::abs(c) + e) * sup_abs(y) + (std::abs(c) - e) * inf_abs(y));
  return std::abs(c) * sup_abs(y);
}

}  // namespace

TEST_CASE("interval accessors") {
  CHECK(width({-0.5, 0.5}) == 1.0);
  CHECK(midpoint({-0.5, 0.5}) == 0.0);
  CHECK(contains({0.0, 1.0}, 1.0));      // boundary inclusive
  CHECK(contains({0.0, 1.0}, 0.0));
  CHECK(!contains({0.0, 1.0}, 1.0000001));
  CHECK(width(Interval::point(2.0)) == 0.0);
  CHECK(midpoint({1.0, 2.0}) == 1.5);
}

TEST_CASE("interval product examples") {
  CHECK(mul({1.0, 1.0}, {-0.3, 0.7}) == Interval{-0.3, 0.7});

  const Interval p = mul({2.5, 3.5}, {0.1, 0.2});
  CHECK(close(p.lo, 0.25));
  CHECK(close(p.hi, 0.7));
  CHECK(close(width(p), 0.45));
  CHECK(close(width(p), width_formula({2.5, 3.5}, {0.1, 0.2})));

  const Interval s = mul({-0.5, 0.5}, {0.2, 0.4});
  CHECK(close(s.lo, -0.2));
  CHECK(close(s.hi, 0.2));
  CHECK(close(width(s), 2.0 * 0.5 * 0.4));  // 2 eps max|Y|
}

TEST_CASE("minkowski sum") {
  CHECK(minkowski_sum({0.0, 0.0}, {-2.0, 5.0}) == Interval{-2.0, 5.0});
  CHECK(minkowski_sum({1.0, 2.0}, {-1.0, 1.0}) == Interval{0.0, 3.0});

  // Fold of pairwise sums matches the three-term sum and is order-free.
  CounterRng rng(11);
  FailureLog log;
  for (int trial = 0; trial < 1000; ++trial) {
    const Interval a = test::random_interval(rng);
    const Interval b = test::random_interval(rng);
    const Interval c = test::random_interval(rng);
    const Interval left = minkowski_sum(minkowski_sum(a, b), c);
    const Interval right = minkowski_sum(a, minkowski_sum(b, c));
    log.expect(close(left.lo, right.lo) && close(left.hi, right.hi), "associativity");
    for (int s = 0; s < 20; ++s) {
      const double x = rng.next_range(a.lo, a.hi) + rng.next_range(b.lo, b.hi) +
                       rng.next_range(c.lo, c.hi);
      log.expect(left.lo - 1e-12 <= x && x <= left.hi + 1e-12, "sample containment");
    }
  }
  INFO(log.first);
  CHECK(log.pass());
}

TEST_CASE("product set is exact and symmetric in its arguments") {
  CounterRng rng(22);
  FailureLog log;
  for (int trial = 0; trial < 100000; ++trial) {
    const Interval a = test::random_interval(rng);
    const Interval y = test::random_interval(rng);
    const Interval p = mul(a, y);
    const Interval q = mul(y, a);
    log.expect(p == q, "commutativity");
    log.expect(mul({1.0, 1.0}, y) == y, "identity factor");
    // Sampled products stay inside; endpoints come from endpoint products.
    for (int s = 0; s < (trial < 1000 ? 100 : 3); ++s) {
      const double v = rng.next_range(a.lo, a.hi) * rng.next_range(y.lo, y.hi);
      log.expect(p.lo - 1e-12 <= v && v <= p.hi + 1e-12, "sample containment");
    }
    const double products[] = {a.lo * y.lo, a.lo * y.hi, a.hi * y.lo, a.hi * y.hi};
    log.expect(std::count(std::begin(products), std::end(products), p.lo) > 0, "lo attained");
    log.expect(std::count(std::begin(products), std::end(products), p.hi) > 0, "hi attained");
  }
  INFO(log.first);
  CHECK(log.pass());
}

TEST_CASE("product width and midpoint match the closed forms") {
  CounterRng rng(33);
  FailureLog log;
  const double tol = 1e-12;
  for (int trial = 0; trial < 100000; ++trial) {
    const int branch = trial % 4;
    Interval a = test::random_interval(rng);
    Interval y;
    switch (branch) {
      case 0:  // Y symmetric about 0: both formulas, any A
        y = Interval::symmetric(rng.next_range(0.0, 3.0));
        break;
      case 1: {  // Y containing 0, A sign-definite: width formula only
        y = {-rng.next_range(0.0, 3.0), rng.next_range(0.0, 3.0)};
        const double mag = rng.next_range(0.1, 3.0);
        const double r = rng.next_range(0.0, 0.09);
        a = rng.bernoulli(0.5) ? Interval{mag - r, mag + r} : Interval{-mag - r, -mag + r};
        break;
      }
      default: {  // Y excluding 0
        const double lo = rng.next_range(0.05, 3.0);
        const double w = rng.next_range(0.0, 2.0);
        y = rng.bernoulli(0.5) ? Interval{lo, lo + w} : Interval{-lo - w, -lo};
        break;
      }
    }
    const Interval p = mul(a, y);
    log.expect(close(width(p), width_formula(a, y), tol), "width formula branch " +
                                                              std::to_string(branch));
    if (branch != 1)
      log.expect(close(std::abs(midpoint(p)), abs_mid_formula(a, y), tol),
                 "midpoint formula branch " + std::to_string(branch));
  }
  INFO(log.first);
  CHECK(log.pass());
}

TEST_CASE("degenerate point intervals reduce to scalar arithmetic") {
  const Interval p = mul(Interval::point(-2.0), Interval::point(3.0));
  CHECK(p == Interval::point(-6.0));
  CHECK(width(p) == 0.0);
  CHECK(mul(Interval::point(2.0), {1.0, 4.0}) == Interval{2.0, 8.0});
}
