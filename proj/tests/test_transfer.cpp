#include <gtest/gtest.h>

#include <cmath>

#include "hmk/error.hpp"
#include "hmk/harmonic.hpp"
#include "hmk/transfer.hpp"

using namespace hmk;

namespace {

RationalPoint pt(double x, double y) { return RationalPoint::from_doubles(x, y, 20); }

DyadicPolygon rect(int rank, std::int64_t i0, std::int64_t j0, std::int64_t i1, std::int64_t j1) {
  std::vector<DyadicCube> cubes;
  for (auto i = i0; i < i1; ++i)
    for (auto j = j0; j < j1; ++j) cubes.emplace_back(rank, i, j);
  return DyadicPolygon::from_cubes(2, rank, cubes);
}

DomainEnumeration single(const DyadicPolygon& p) {
  return DomainEnumeration::from_list(EnumerationKind::InteriorExhaustion, {p});
}

// Positive harmonic functions on the open unit square.
std::vector<std::function<double(Vec2)>> positive_harmonics() {
  std::vector<std::function<double(Vec2)>> out;
  for (double b : {0.0, 0.3, 0.5, 0.9}) {
    // Half-plane Poisson kernels with the pole on each side.
    out.push_back([b](Vec2 z) { return z.x / (z.x * z.x + (z.y - b) * (z.y - b)); });
    out.push_back([b](Vec2 z) { return (1 - z.y) / ((1 - z.y) * (1 - z.y) + (z.x - b) * (z.x - b)); });
  }
  out.push_back([](Vec2 z) { return std::log(4.0 / std::hypot(z.x - 1, z.y - 1)); });
  out.push_back([](Vec2 z) { return 1.0 + z.x - z.y; });
  return out;
}

double solve(const DyadicPolygon& p, const RationalPoint& x, const TestFunction& f, double tol,
             double* err) {
  PolygonSolver s(p);
  const Estimate e = s.integrate(x, f.evaluator(), tol);
  *err = e.error;
  return e.value;
}

}  // namespace

TEST(Beurling, ReferenceValues) {
  EXPECT_NEAR(beurling_bound(1, 0.25, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(beurling_bound(1, std::ldexp(1.0, -10), 0.5), 0.2, 1e-15);
  EXPECT_THROW(beurling_bound(1, 0.75, 0.5), Error);
  EXPECT_THROW(beurling_bound(1, 0.25, 0.0), Error);
  EXPECT_THROW(beurling_bound(0, 0.25, 0.5), Error);
  double prev = INFINITY;
  for (double d = 0.01; d < 2; d *= 1.5) {
    const double b = beurling_bound(1, 0.01, d);
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(Harnack, SamePointGivesOne) {
  const auto conn = find_connector(single(DyadicPolygon::unit_box(2)), PointOracle::of_doubles(0.5, 0.5),
                                   PointOracle::of_doubles(0.5, 0.5));
  const auto hb = harnack_chain(conn, conn.x0, conn.x0);
  EXPECT_EQ(hb.tau, 1.0);
  EXPECT_EQ(hb.exponent, 0u);
}

TEST(Harnack, BoundHoldsForPositiveHarmonicFunctions) {
  const auto conn = find_connector(single(DyadicPolygon::unit_box(2)),
                                   PointOracle::of_doubles(0.4, 0.45), PointOracle::of_doubles(0.6, 0.55));
  ASSERT_TRUE(conn.valid());
  const auto hb = harnack_chain(conn, conn.x0, conn.x);
  EXPECT_GT(hb.tau, 1.0);
  EXPECT_LE(hb.log2_tau(), hb.exponent * std::log2(kHarnackBase) + 1e-12);
  EXPECT_LE(hb.exponent, hb.worst_exponent);
  for (const auto& st : hb.steps) EXPECT_LE(st.factor, kHarnackBase);
  const Vec2 a{conn.x0.coord(0), conn.x0.coord(1)}, b{conn.x.coord(0), conn.x.coord(1)};
  for (const auto& u : positive_harmonics()) {
    const double r = u(a) / u(b);
    EXPECT_LE(r, hb.tau);
    EXPECT_GE(r, 1 / hb.tau);
  }
}

TEST(Harnack, RejectsPointsOffGamma) {
  const auto conn = find_connector(single(DyadicPolygon::unit_box(2)),
                                   PointOracle::of_doubles(0.4, 0.5), PointOracle::of_doubles(0.6, 0.5));
  EXPECT_THROW(harnack_chain(conn, conn.x0, pt(0.05, 0.05)), Error);
}

TEST(Connector, JoinsOverlappingPieces) {
  // L-shaped union of two overlapping rectangles.
  const auto a = rect(3, 0, 0, 8, 4), b = rect(3, 0, 0, 4, 8);
  const auto dom = DomainEnumeration::from_list(EnumerationKind::InteriorExhaustion, {b, a});
  const auto conn = find_connector(dom, PointOracle::of_doubles(0.8, 0.25), PointOracle::of_doubles(0.25, 0.8));
  std::string why;
  EXPECT_TRUE(conn.valid(&why)) << why;
  EXPECT_TRUE(conn.Q.subset_of(polygon_union(a, b)));
  EXPECT_TRUE(conn.on_gamma(conn.x0));
  EXPECT_TRUE(conn.on_gamma(conn.x));
  const auto hb = harnack_chain(conn, conn.x, conn.x0);
  EXPECT_GE(hb.exponent, 2u);
  const auto text = connector_manifest(conn, hb);
  EXPECT_NE(text.find("tau"), std::string::npos);
}

TEST(Connector, FailsWhenPointsAreSeparated) {
  const auto dom = DomainEnumeration::from_list(EnumerationKind::InteriorExhaustion,
                                                {rect(2, 0, 0, 1, 1), rect(2, 2, 2, 4, 4)});
  EXPECT_THROW(find_connector(dom, PointOracle::of_doubles(0.1, 0.1), PointOracle::of_doubles(0.8, 0.8)),
               Error);
}

TEST(Connector, ValidityDetectsClearanceViolation) {
  auto conn = find_connector(single(DyadicPolygon::unit_box(2)), PointOracle::of_doubles(0.5, 0.5),
                             PointOracle::of_doubles(0.5, 0.5));
  conn.gamma.push_back(DyadicCube(conn.ell, 0, 0));
  EXPECT_FALSE(conn.valid());
}

TEST(Compare, BoundDominatesDifferenceOfSolutions) {
  const auto inner = rect(3, 1, 1, 5, 7);
  const auto outer = rect(3, 0, 0, 8, 8);
  const auto f = TestFunction::cone(0.9, 0.2, -0.5, 0.8, 0.05);
  for (const auto& x : {pt(0.3, 0.4), pt(0.55, 0.5), pt(0.2, 0.8)}) {
    const auto cb = compare_subdomains(inner, outer, x, 1e-3);
    EXPECT_GT(cb.interface_faces, 0u);
    double e1 = 0, e2 = 0;
    const double v1 = solve(inner, x, f, 1e-4, &e1), v2 = solve(outer, x, f, 1e-4, &e2);
    EXPECT_LE(std::abs(v1 - v2), cb.bound + e1 + e2);
    EXPECT_LE(cb.bound, 2.0);
  }
}

TEST(Compare, SharedBoundaryIsNotInterface) {
  // Inner shares three sides with the unit box; only x = 1/2 is interface.
  const auto inner = rect(1, 0, 0, 1, 2);
  const auto outer = DyadicPolygon::unit_box(2);
  const double x = 0.125, y = 0.5;
  const auto cb = compare_subdomains(inner, outer, pt(x, y), 1e-3);
  EXPECT_EQ(cb.interface_faces, 2u);
  // Series for the harmonic measure of the side x = a of [0,a] x [0,b].
  const double a = 0.5, b = 1.0, pi = std::acos(-1.0);
  double side = 0;
  for (int k = 1; k < 400; k += 2)
    side += 4 / (k * pi) * std::sinh(k * pi * x / b) / std::sinh(k * pi * a / b) *
            std::sin(k * pi * y / b);
  EXPECT_GE(cb.bound, 2 * side);
  EXPECT_LE(cb.bound, 2 * side + 0.05);
}

TEST(Compare, IdenticalDomainsGiveZero) {
  const auto p = rect(3, 1, 1, 5, 7);
  const auto cb = compare_subdomains(p, p, pt(0.3, 0.4), 1e-3);
  EXPECT_EQ(cb.bound, 0.0);
  EXPECT_EQ(cb.interface_faces, 0u);
}

TEST(Compare, RejectsNonNested) {
  EXPECT_THROW(compare_subdomains(rect(2, 0, 0, 3, 3), rect(2, 1, 1, 4, 4), pt(0.4, 0.4), 1e-3),
               Error);
}

TEST(Transfer, AtTheBasePointMatchesDirectSolve) {
  const auto omega = rect(3, 1, 1, 7, 7);
  const auto x0 = PointOracle::of_doubles(0.5, 0.5);
  const auto conn = find_connector(single(omega), x0, x0);
  const PolygonMeasure mu0(omega, conn.x0);
  const auto f = TestFunction::cone(0.1, 0.1, 0.0, 0.5, 0.05);
  const int n = 1;
  const auto res = transfer_measure(mu0, conn, x0, f, n);
  EXPECT_EQ(res.tau, 1.0);
  EXPECT_EQ(res.k, n + 3);
  double err = 0;
  const double direct = solve(omega, conn.x0, f, 1e-4, &err);
  EXPECT_LE(std::abs(res.value - direct), std::ldexp(1.0, -n) + err);
  EXPECT_LT(res.boundary_mass, std::ldexp(1.0, -res.k - 1));
}

TEST(Transfer, MultiplyConnectedDomain) {
  // Square annulus: [1/8,7/8]^2 minus [3/8,5/8]^2.
  auto outer = rect(3, 1, 1, 7, 7);
  std::vector<DyadicCube> cubes;
  for (const auto& c : outer.cubes_at(3))
    if (!(c[0] >= 3 && c[0] < 5 && c[1] >= 3 && c[1] < 5)) cubes.push_back(c);
  const auto omega = DyadicPolygon::from_cubes(2, 3, cubes);
  const auto x0 = PointOracle::of_doubles(0.25, 0.25);
  const auto x = PointOracle::of_doubles(0.25 + 1.0 / 64, 0.25);
  const auto conn = find_connector(single(omega), x0, x);
  ASSERT_TRUE(conn.valid());
  const PolygonMeasure mu0(omega, conn.x0);
  const auto f = TestFunction::coordinate(0).scaled(0.5);
  const int n = 0;
  const auto res = transfer_measure(mu0, conn, x, f, n);
  EXPECT_GT(res.tau, 1.0);
  EXPECT_LE(res.harnack_term, std::ldexp(1.0, -n - 2));
  double err = 0;
  const double direct = solve(omega, conn.x, f, 1e-4, &err);
  EXPECT_LE(std::abs(res.value - direct), std::ldexp(1.0, -n) + err);
}
