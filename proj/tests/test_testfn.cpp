#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hmk/error.hpp"
#include "hmk/harmonic.hpp"
#include "hmk/testfn.hpp"

using namespace hmk;

namespace {

double sup_distance(const TestFunction::Eval& a, const TestFunction::Eval& b, int rank) {
  const int m = 1 << rank;
  double d = 0;
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) d = std::max(d, std::abs(a(1.0 * i / m, 1.0 * j / m) - b(1.0 * i / m, 1.0 * j / m)));
  return d;
}

}  // namespace

TEST(TestFunction, FactoriesSatisfyInvariants) {
  for (const auto& f : {TestFunction::constant(0.5), TestFunction::coordinate(0),
                        TestFunction::coordinate(1), TestFunction::cone(0.3, 0.6, 0.1, 0.5, 0.01),
                        TestFunction::squared_distance(0.2, 0.9)}) {
    const auto rep = probe_invariants(f, 6);
    EXPECT_TRUE(rep.ok) << f.id() << ": " << rep.failure;
    EXPECT_GE(rep.min_laplacian, -1e-8) << f.id();
  }
  EXPECT_THROW(TestFunction::coordinate(2), Error);
}

TEST(TestFunction, ProbeCatchesWrongGradient) {
  const TestFunction bad("bad", [](double x, double) { return x * x; },
                         [](double, double) { return Grad2{0, 0}; },
                         [](double, double) { return 2.0; }, 2, 1, true);
  EXPECT_FALSE(probe_invariants(bad).ok);
  const TestFunction concave("concave", [](double x, double) { return -x * x; },
                             [](double x, double) { return Grad2{-2 * x, 0}; },
                             [](double, double) { return -2.0; }, 2, 1, true);
  const auto rep = probe_invariants(concave);
  EXPECT_FALSE(rep.ok);
  EXPECT_NEAR(rep.min_laplacian, -2.0, 1e-6);
}

TEST(TestFunction, CombinatorsTrackBounds) {
  const auto f = TestFunction::cone(0.5, 0.5, 0, 1, 0.1).plus(TestFunction::coordinate(0).scaled(0.25));
  EXPECT_TRUE(f.subharmonic());
  EXPECT_DOUBLE_EQ(f.lip_bound(), 1.25);
  EXPECT_TRUE(probe_invariants(f).ok);
  EXPECT_FALSE(TestFunction::cone(0.5, 0.5, 0, 1, 0.1).scaled(-1).subharmonic());
}

TEST(Mollifier, ProfileHasUnitMass) {
  // Independent oracle: tensor midpoint rule on the unit disk.
  const int n = 1000;
  double s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = -1 + (i + 0.5) * 2.0 / n, y = -1 + (j + 0.5) * 2.0 / n;
      s += mollifier_profile(std::hypot(x, y));
    }
  EXPECT_NEAR(s * 4.0 / (n * n), 1.0, 1e-5);
  EXPECT_EQ(mollifier_profile(1.0), 0.0);
  EXPECT_GT(mollifier_profile(0.0), mollifier_profile(0.5));
}

TEST(Mollifier, ReproducesConstantsAndLinears) {
  auto one = [](double, double) { return 0.75; };
  auto lin = [](double x, double y) { return 0.5 * x - 0.25 * y; };
  for (int n : {2, 4}) {
    const auto c = mollify(one, n);
    const auto l = mollify(lin, n);
    const double e = std::ldexp(1.0, -n);
    for (double x : {e + 0.01, 0.5, 1 - e - 0.01})
      for (double y : {e + 0.02, 0.37, 1 - e - 0.03}) {
        EXPECT_NEAR(c(x, y), 0.75, 1e-14);
        EXPECT_NEAR(l(x, y), lin(x, y), 1e-9);
        const auto g = l.gradient(x, y);
        EXPECT_NEAR(g.x, 0.5, 1e-7);
        EXPECT_NEAR(g.y, -0.25, 1e-7);
        EXPECT_NEAR(l.laplacian(x, y), 0.0, 1e-4);
      }
  }
}

TEST(Mollifier, WithinTwoToMinusNOfLipschitzInput) {
  auto g = [](double x, double y) { return std::hypot(x - 0.4, y - 0.55); };
  for (int n : {1, 2, 3, 4}) {
    const auto f = mollify(g, n);
    EXPECT_LT(sup_distance(f.evaluator(), g, 6), std::ldexp(1.0, -n)) << n;
    EXPECT_LT(f.lip_bound(), 1.05);
    const auto rep = probe_invariants(f, 5);
    EXPECT_TRUE(rep.ok) << n << ": " << rep.failure;
    // Analytic Laplacian against a fine five-point stencil.
    for (double x : {0.2, 0.41, 0.8})
      EXPECT_NEAR(f.laplacian(x, 0.5), discrete_laplacian(f.evaluator(), x, 0.5, 1e-4),
                  1e-3 * (1 + std::abs(f.laplacian(x, 0.5))));
  }
}

TEST(Mollifier, BudgetIsEnforced) {
  MollifyOptions opts;
  opts.budget = 1000;
  try {
    mollify([](double, double) { return 0.0; }, 4, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "QuadratureBudgetExceeded");
    EXPECT_EQ(e.kind(), ErrorKind::Budget);
  }
}

TEST(Collar, PlateauSupportAndDerivatives) {
  EXPECT_EQ(collar(0.3, -1.5), 1.0);
  EXPECT_EQ(collar(1.49, 1.2), 1.0);
  EXPECT_EQ(collar(2.0, 0.0), 0.0);
  EXPECT_EQ(collar(0.0, -2.5), 0.0);
  const double h = 1e-5;
  for (double x : {-1.9, -1.7, 1.55, 1.8})
    for (double y : {-1.6, 0.0, 1.95}) {
      const auto g = collar_gradient(x, y);
      EXPECT_NEAR(g.x, (collar(x + h, y) - collar(x - h, y)) / (2 * h), 1e-6);
      EXPECT_NEAR(g.y, (collar(x, y + h) - collar(x, y - h)) / (2 * h), 1e-6);
      EXPECT_NEAR(collar_laplacian(x, y), discrete_laplacian(collar, x, y, 1e-4), 1e-4);
      EXPECT_GE(collar(x, y), 0.0);
      EXPECT_LE(collar(x, y), 1.0);
    }
}

TEST(GreenCube, SymmetricPositiveAndVanishingOnBoundary) {
  EXPECT_NEAR(green_cube(0.3, -0.2, 1.1, 0.4), green_cube(1.1, 0.4, 0.3, -0.2), 1e-12);
  EXPECT_GT(green_cube(1.9, 1.9, -1.9, -1.9), 0.0);
  EXPECT_LT(green_cube(1.999999, 0.0, 0.0, 0.0), 1e-5);
  EXPECT_THROW(green_cube(0, 0, 0, 0), Error);
  EXPECT_THROW(green_cube(2.5, 0, 0, 0), Error);
}

TEST(GreenCube, MatchesLogPlusHarmonicCorrection) {
  // G(x,y) = -log|x-y| / 2pi + H(x), H harmonic with H = log|x-y| / 2pi on
  // the boundary. H comes from the grid engine on the rescaled unit square.
  const auto box = DyadicPolygon::unit_box();
  PolygonSolver solver(box);
  const double pi = std::numbers::pi;
  struct Case {
    double x1, x2, y1, y2;
  };
  for (const Case c : {Case{0.5, 0.25, -0.75, 0.0}, Case{-1.0, 1.0, 1.0, -1.0}, Case{0.0, 0.0, 0.25, 0.5}}) {
    const double yx = (c.y1 + 2) / 4, yy = (c.y2 + 2) / 4;
    auto boundary = [=](double a, double b) { return std::log(std::hypot(a - yx, b - yy)) / (2 * pi); };
    const auto x = RationalPoint::from_doubles((c.x1 + 2) / 4, (c.x2 + 2) / 4, 10);
    const auto h = solver.integrate(x, boundary, 1e-5);
    const double oracle = -std::log(std::hypot(c.x1 - c.y1, c.x2 - c.y2) / 4) / (2 * pi) + h.value;
    EXPECT_NEAR(green_cube(c.x1, c.x2, c.y1, c.y2), oracle, 1e-5 + h.error);
  }
}

TEST(GreenCube, SameRowUsesOtherAxis) {
  // Points on a common horizontal line stress the expansion choice.
  const double a = green_cube(-0.5, 0.3, 0.5, 0.3);
  const double b = green_cube(0.3, -0.5, 0.3, 0.5);  // transposed
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_GT(a, 0.0);
}

TEST(SubharmonicParts, SplitsSmoothFunction) {
  const TestFunction f(
      "wave", [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); },
      [](double x, double y) { return Grad2{3 * std::cos(3 * x) * std::cos(2 * y), -2 * std::sin(3 * x) * std::sin(2 * y)}; },
      [](double x, double y) { return -13 * std::sin(3 * x) * std::cos(2 * y); }, 3.7, 1);
  const double tol = 1e-3;
  const auto parts = subharmonic_parts(f, tol);
  EXPECT_LE(parts.reconstruction_error, 2 * tol);
  for (const auto* g : {&parts.u_tilde, &parts.v_tilde}) {
    const auto rep = probe_invariants(*g, 6, 1e-8);
    EXPECT_TRUE(rep.ok) << g->id() << ": " << rep.failure;
    EXPECT_GE(rep.min_laplacian, -1e-8);
    EXPECT_LE(rep.max_abs, 1.0);
    EXPECT_LE(rep.max_gradient, 1.0);
    for (int i = 0; i <= 16; ++i)
      for (int j = 0; j <= 16; ++j) EXPECT_GT((*g)(i / 16.0, j / 16.0), 0.0);
  }
  // Laplacians follow the positive and negative parts of Delta f.
  for (double x : {0.2, 0.5, 0.8}) {
    const double d = f.laplacian(x, 0.4);
    const double lu = parts.scale * parts.u_tilde.laplacian(x, 0.4);
    const double lv = parts.scale * parts.v_tilde.laplacian(x, 0.4);
    EXPECT_NEAR(lu - lv, d, 1e-6 * (1 + std::abs(d)) + 0.05 * std::abs(d));
    EXPECT_GE(lu, -1e-9);
    EXPECT_GE(lv, -1e-9);
  }
}

TEST(SubharmonicParts, RejectsInconsistentLaplacian) {
  const TestFunction liar("liar", [](double x, double) { return x * x; },
                          [](double x, double) { return Grad2{2 * x, 0}; },
                          [](double, double) { return 50.0; }, 2, 1);
  try {
    subharmonic_parts(liar, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "NotC2");
  }
}

TEST(Net, MembersAreValidAndDense) {
  for (int n : {0, 1, 2}) {
    const auto net = lipschitz_subharmonic_net(n);
    ASSERT_FALSE(net.empty());
    for (std::size_t k = 0; k < net.size(); k += 37) {
      const auto rep = probe_invariants(net[k].f, 5);
      EXPECT_TRUE(rep.ok) << net[k].f.id();
      EXPECT_TRUE(net[k].f.subharmonic());
      EXPECT_LE(rep.max_abs, 1.0);
      EXPECT_LE(rep.max_gradient, 1.0);
    }
    // Distance to the center is 1-Lipschitz, subharmonic and at most 1 on the
    // square; some member approximates it to within 2^-(n+2) + delta.
    auto g = [](double x, double y) { return std::hypot(x - 0.5, y - 0.5); };
    double best = 1e9;
    for (const auto& m : net) best = std::min(best, sup_distance(m.f.evaluator(), g, 5));
    EXPECT_LE(best, std::ldexp(1.0, -n - 2) + std::ldexp(1.0, -n - 4)) << n;
  }
  EXPECT_THROW(lipschitz_subharmonic_net(5), Error);
}

TEST(Net, ManifestIsDeterministic) {
  const auto a = net_manifest(1, lipschitz_subharmonic_net(1));
  const auto b = net_manifest(1, lipschitz_subharmonic_net(1));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("# hmk net v1 n=1", 0), 0u);
}

TEST(Mollifier, IsLinear) {
  auto g1 = [](double x, double y) { return std::hypot(x - 0.2, y - 0.7); };
  auto g2 = [](double x, double y) { return std::abs(x - y) / 2; };
  auto mix = [&](double x, double y) { return 0.3 * g1(x, y) - 0.6 * g2(x, y); };
  const auto f1 = mollify(g1, 3), f2 = mollify(g2, 3), fm = mollify(mix, 3);
  for (int k = 0; k < 10; ++k) {
    const double x = 0.07 + 0.09 * k, y = 0.93 - 0.08 * k;
    EXPECT_NEAR(fm(x, y), 0.3 * f1(x, y) - 0.6 * f2(x, y), 1e-12);
  }
}

TEST(SubharmonicParts, MollifiedLipschitzInput) {
  auto g = [](double x, double y) { return 0.5 * std::abs(x - 0.4) + 0.5 * std::hypot(x - 0.7, y - 0.3); };
  const auto f = mollify(g, 3);
  const double tol = 1e-3;
  const auto parts = subharmonic_parts(f, tol);
  EXPECT_LE(parts.reconstruction_error, 2 * tol);
  for (const auto* p : {&parts.u_tilde, &parts.v_tilde}) {
    const auto rep = probe_invariants(*p, 6, 1e-8);
    EXPECT_GE(rep.min_laplacian, -1e-8);
    EXPECT_TRUE(rep.ok) << rep.failure;
  }
}

TEST(SubharmonicParts, HarmonicAndConvexInputs) {
  const double tol = 1e-3;
  // Harmonic input: S (u - v) stays harmonic where the collar is flat.
  const auto x = subharmonic_parts(TestFunction::coordinate(0), tol);
  auto diff = [&](double a, double b) { return x.scale * (x.u_tilde(a, b) - x.v_tilde(a, b)); };
  for (double a : {0.25, 0.5, 0.75}) EXPECT_NEAR(discrete_laplacian(diff, a, 0.5, 1.0 / 64), 0.0, 1e-6);
  // Convex input: Delta f = 4 > 0, so the v-part carries (almost) no Laplacian.
  const auto q = subharmonic_parts(TestFunction::squared_distance(0.5, 0.5), tol);
  for (double a : {0.25, 0.5, 0.75}) {
    EXPECT_NEAR(q.scale * q.u_tilde.laplacian(a, 0.4), 4.0, tol);
    EXPECT_NEAR(q.scale * q.v_tilde.laplacian(a, 0.4), 0.0, tol);
  }
}
