#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hmk/error.hpp"
#include "hmk/harmonic.hpp"

using namespace hmk;

namespace {

RationalPoint pt(double x, double y) { return RationalPoint::from_doubles(x, y, 20); }

// L-shaped domain: [1/4,3/4]^2 minus the top-right quarter.
DyadicPolygon l_shape() {
  std::vector<DyadicCube> cubes{{3, 2, 2}, {3, 3, 2}, {3, 4, 2}, {3, 5, 2}, {3, 2, 3},
                                {3, 3, 3}, {3, 4, 3}, {3, 5, 3}, {3, 2, 4}, {3, 3, 4},
                                {3, 2, 5}, {3, 3, 5}};
  return DyadicPolygon::from_cubes(2, 3, cubes);
}

double brute_distance(const std::vector<Segment>& segs, Vec2 p) {
  double best = 1e300;
  for (const auto& s : segs) {
    const Vec2 q = closest_on_segment(s, p);
    best = std::min(best, std::hypot(q.x - p.x, q.y - p.y));
  }
  return best;
}

}  // namespace

TEST(SegmentIndex, MatchesBruteForce) {
  const auto p = l_shape();
  const auto index = polygon_boundary_index(p);
  const auto segs = polygon_outline(p);
  EXPECT_EQ(segs.size(), 6u);  // L-shape has six maximal sides
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int k = 0; k < 5000; ++k) {
    const Vec2 q{u(rng), u(rng)};
    Vec2 near;
    const double d = index->distance(q, &near);
    EXPECT_NEAR(d, brute_distance(segs, q), 1e-14);
    EXPECT_NEAR(std::hypot(near.x - q.x, near.y - q.y), d, 1e-14);
  }
}

TEST(Grid, ReproducesLinearFunctionsExactly) {
  PolygonSolver solver(l_shape());
  const auto x = pt(0.3125, 0.59375);
  for (int r : {4, 5, 7}) {
    const auto& w = solver.weights(x, r);
    EXPECT_NEAR(w.integrate([](double, double) { return 1.0; }), 1.0, 1e-12);
    EXPECT_NEAR(w.integrate([](double a, double) { return a; }), 0.3125, 1e-12);
    EXPECT_NEAR(w.integrate([](double, double b) { return b; }), 0.59375, 1e-12);
    for (double wk : w.weights) EXPECT_GE(wk, -1e-15);
  }
}

TEST(Grid, HarmonicPolynomialsWithinCertifiedError) {
  PolygonSolver solver(l_shape());
  const std::vector<std::pair<double, double>> points{{0.296875, 0.3125}, {0.703125, 0.28125}, {0.3125, 0.703125}, {0.484375, 0.53125}};
  auto g = [](double a, double b) { return a * a - b * b + 2 * a * b; };
  auto h = [](double a, double b) { return std::exp(2 * a) * std::cos(2 * b); };
  for (auto [a, b] : points) {
    for (auto f : {BoundaryData(g), BoundaryData(h)}) {
      const auto e = solver.integrate(pt(a, b), f, 1e-3);
      EXPECT_LE(std::abs(e.value - f(a, b)), e.error) << a << "," << b;
      EXPECT_LT(e.error, 1e-3);
    }
  }
}

TEST(Grid, MaximumPrinciple) {
  PolygonSolver solver(l_shape());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = u(rng), b = u(rng), c = u(rng);
    auto f = [=](double x, double y) { return std::sin(7 * a * x + 5 * b * y) + c * x * y; };
    double lo = 1e300, hi = -1e300;
    solver.system(6).solve_all(f, [&](double x, double y, double v, bool interior) {
      if (!interior) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      (void)x;
      (void)y;
    });
    solver.system(6).solve_all(f, [&](double, double, double v, bool interior) {
      if (interior) {
        EXPECT_GE(v, lo - 1e-12);
        EXPECT_LE(v, hi + 1e-12);
      }
    });
  }
}

TEST(Grid, RejectsBoundaryAndExteriorPoints) {
  PolygonSolver solver(l_shape());
  auto one = [](double, double) { return 1.0; };
  EXPECT_THROW(solver.integrate(pt(0.25, 0.5), one, 1e-2), Error);
  EXPECT_THROW(solver.integrate(pt(0.7, 0.7), one, 1e-2), Error);
  EXPECT_THROW(solver.integrate(pt(0.1, 0.1), one, 1e-2), Error);
}

TEST(Grid, ToleranceUnreachable) {
  GridOptions opts;
  opts.max_rank = 5;
  PolygonSolver solver(l_shape(), opts);
  try {
    solver.integrate(pt(0.3, 0.3), [](double a, double b) { return std::sin(40 * a * b); }, 1e-12);
    FAIL() << "expected ToleranceUnreachable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "ToleranceUnreachable");
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
}

TEST(Wos, CounterRngIsPure) {
  EXPECT_EQ(counter_uniform(1, 2, 3), counter_uniform(1, 2, 3));
  EXPECT_NE(counter_uniform(1, 2, 3), counter_uniform(1, 2, 4));
  EXPECT_NE(counter_uniform(1, 2, 3), counter_uniform(2, 2, 3));
  double s = 0;
  for (int k = 0; k < 100000; ++k) {
    const double u = counter_uniform(9, 0, static_cast<std::uint64_t>(k));
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
  }
  EXPECT_NEAR(s / 100000, 0.5, 0.005);
}

TEST(Wos, AgreesWithGridAndIsReproducible) {
  const auto p = l_shape();
  auto g = [](double a, double b) { return a * a - b * b; };
  const auto x = pt(0.35, 0.4);
  // Lipschitz constant of g on [0,1]^2 is at most 2 sqrt 2.
  const auto w1 = wos_estimate(p, x, g, 20000, 11, 2 * std::sqrt(2.0));
  const auto w2 = wos_estimate(p, x, g, 20000, 11, 2 * std::sqrt(2.0));
  EXPECT_EQ(w1.mean, w2.mean);
  const double exact = 0.35 * 0.35 - 0.4 * 0.4;
  EXPECT_LE(std::abs(w1.mean - exact), w1.radius);
  PolygonSolver solver(p);
  const auto e = solver.integrate(x, g, 1e-4);
  EXPECT_LE(std::abs(w1.mean - e.value), w1.radius + e.error);
}

TEST(Measure, SquareCenterSidesAreQuarters) {
  const auto sq = DyadicPolygon::rectangle(2, 1, 1, 3, 3);
  const auto sides = rectangle_sides(sq);
  ASSERT_EQ(sides.size(), 4u);
  EXPECT_EQ(sides[0].label, "bottom");
  const auto enc = exit_distribution(sq, pt(0.5, 0.5), sides, 8);
  double lo = 0, hi = 0;
  for (const auto& m : enc) {
    EXPECT_LE(m.lo, 0.25) << m.label;
    EXPECT_GE(m.hi, 0.25) << m.label;
    EXPECT_LT(m.hi - m.lo, std::ldexp(1.0, -7));
    lo += m.lo;
    hi += m.hi;
  }
  EXPECT_LE(lo, 1.0);
  EXPECT_GE(hi, 1.0);
}

TEST(Measure, OffCenterPointFavoursNearSide) {
  const auto sq = DyadicPolygon::rectangle(2, 1, 1, 3, 3);
  const auto enc = exit_distribution(sq, pt(0.5, 0.3), rectangle_sides(sq), 6);
  EXPECT_GT(enc[0].lo, enc[2].hi);  // bottom beats top
  EXPECT_NEAR(enc[1].lo, enc[3].lo, std::ldexp(1.0, -5));  // left/right symmetry
}

TEST(Measure, CertifiedWithinTwoToMinusN) {
  const auto p = l_shape();
  const auto f = TestFunction::cone(0.5, 0.5, 0, 1, 0.01);
  for (int n : {3, 6, 9}) {
    const auto e = harmonic_measure_polygon(p, pt(0.3, 0.4), f, n);
    EXPECT_LT(e.error, std::ldexp(1.0, -n));
    EXPECT_TRUE(e.cert.cross_checked);
  }
}

TEST(Measure, SubdomainMonotonicityForSubharmonicData) {
  // For subharmonic f the harmonic extension grows with the domain.
  const auto small = DyadicPolygon::rectangle(3, 2, 2, 6, 6);
  const auto big = DyadicPolygon::rectangle(3, 1, 1, 7, 7);
  const auto x = pt(0.45, 0.55);
  for (const auto& f : {TestFunction::cone(0.3, 0.7, 0, 1, 0.05), TestFunction::squared_distance(0.5, 0.5)}) {
    const auto a = harmonic_measure_polygon(small, x, f, 8);
    const auto b = harmonic_measure_polygon(big, x, f, 8);
    EXPECT_LE(a.value - a.error, b.value + b.error) << f.id();
    EXPECT_GE(a.value + a.error, f(0.45, 0.55)) << f.id();
  }
}

TEST(Correction, AgreesOutsideAndDominatesSubharmonicInside) {
  const auto p = l_shape();
  const auto f = TestFunction::squared_distance(0.4, 0.4);
  const auto hc = harmonic_correction(f, p);
  const auto out = hc(pt(0.875, 0.9375), 1e-3);
  EXPECT_EQ(out.value, f(0.875, 0.9375));
  EXPECT_EQ(out.error, 0.0);
  const auto on = hc(pt(0.25, 0.5), 1e-3);
  EXPECT_EQ(on.value, f(0.25, 0.5));
  for (auto [a, b] : {std::pair{0.3125, 0.3125}, {0.40625, 0.40625}, {0.59375, 0.3125}}) {
    const auto in = hc(pt(a, b), 1e-3);
    EXPECT_GE(in.value + in.error, f(a, b));
  }
}

TEST(Measure, MassNearIsZeroAwayFromBoundary) {
  const auto sq = DyadicPolygon::rectangle(2, 1, 1, 3, 3);
  PolygonMeasure mu(sq, pt(0.5, 0.5));
  DyadicBox far;
  far.lo[0] = far.lo[1] = Dyadic::from_parts(7, 4);
  far.hi[0] = far.hi[1] = Dyadic::from_parts(8, 4);
  EXPECT_EQ(mu.mass_near(far, Dyadic::from_parts(1, 5)), 0.0);
  DyadicBox corner;
  corner.lo[0] = corner.lo[1] = Dyadic::from_parts(1, 2);
  corner.hi[0] = corner.hi[1] = Dyadic::from_parts(1, 2);
  const double m = mu.mass_near(corner, Dyadic::from_parts(1, 3));
  EXPECT_GT(m, 0.0);
  EXPECT_LE(m, 1.0);
}

TEST(Dirichlet, SolvesToRequestedAccuracy) {
  const auto p = l_shape();
  auto g = [](double a, double b) { return std::exp(a) * std::sin(b); };
  const auto e = dirichlet_solve(p, g, pt(0.3, 0.55), 10);
  EXPECT_LT(e.error, std::ldexp(1.0, -10));
  EXPECT_NEAR(e.value, g(0.3, 0.55), std::ldexp(1.0, -10));
}
