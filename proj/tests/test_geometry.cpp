#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "hmk/error.hpp"
#include "hmk/geometry.hpp"

using namespace hmk;

namespace {

// Brute-force raster: set of rank-r cube indices.
using Raster = std::set<std::pair<std::int64_t, std::int64_t>>;

Raster raster(const DyadicPolygon& p, int r) {
  Raster out;
  for (const auto& c : p.cubes_at(r)) out.insert({c[0], c[1]});
  return out;
}

bool raster_connected(const Raster& s) {
  if (s.empty()) return false;
  Raster seen{*s.begin()};
  std::vector<std::pair<std::int64_t, std::int64_t>> st{*s.begin()};
  while (!st.empty()) {
    auto [i, j] = st.back();
    st.pop_back();
    for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      std::pair<std::int64_t, std::int64_t> nb{i + di, j + dj};
      if (s.count(nb) && seen.insert(nb).second) st.push_back(nb);
    }
  }
  return seen.size() == s.size();
}

// Random connected polygon grown from a seed cube.
DyadicPolygon random_polygon(std::mt19937_64& rng, int r, int cells) {
  const std::int64_t side = std::int64_t{1} << r;
  std::uniform_int_distribution<std::int64_t> pick(0, side - 1);
  Raster s{{pick(rng), pick(rng)}};
  std::uniform_int_distribution<int> dir(0, 3);
  cells = static_cast<int>(std::min<std::int64_t>(cells, side * side));
  while (static_cast<int>(s.size()) < cells) {
    auto it = s.begin();
    std::advance(it, static_cast<long>(std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng)));
    auto [i, j] = *it;
    const int d = dir(rng);
    i += d == 0 ? 1 : d == 1 ? -1 : 0;
    j += d == 2 ? 1 : d == 3 ? -1 : 0;
    if (i >= 0 && j >= 0 && i < side && j < side) s.insert({i, j});
  }
  std::vector<DyadicCube> cubes;
  for (auto [i, j] : s) cubes.emplace_back(r, i, j);
  return DyadicPolygon::from_cubes(2, r, cubes);
}

PointLocation brute_locate(const Raster& s, int r, const RationalPoint& p) {
  // Rank-r cubes whose closure holds p.
  int inside = 0, total = 0;
  std::vector<std::int64_t> xs, ys;
  for (int l = 0; l < 2; ++l) {
    auto& v = l == 0 ? xs : ys;
    const auto f = p[l].floor_scaled(r);
    v.push_back(f);
    if (p[l].on_lattice(r)) v.push_back(f - 1);
  }
  for (auto i : xs)
    for (auto j : ys) {
      ++total;
      inside += s.count({i, j}) ? 1 : 0;
    }
  if (inside == total) return PointLocation::Interior;
  if (inside == 0) return PointLocation::Exterior;
  return PointLocation::Boundary;
}

double brute_boundary_distance(const Raster& s, int r, double x, double y) {
  const double h = std::ldexp(1.0, -r);
  const std::int64_t side = std::int64_t{1} << r;
  double best = 1e9;
  auto seg = [&](double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    double t = ((x - ax) * dx + (y - ay) * dy) / (dx * dx + dy * dy);
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, std::hypot(x - ax - t * dx, y - ay - t * dy));
  };
  for (std::int64_t i = -1; i <= side; ++i)
    for (std::int64_t j = -1; j <= side; ++j) {
      const bool in = s.count({i, j}) > 0;
      if (in != (s.count({i + 1, j}) > 0)) seg((i + 1) * h, j * h, (i + 1) * h, (j + 1) * h);
      if (in != (s.count({i, j + 1}) > 0)) seg(i * h, (j + 1) * h, (i + 1) * h, (j + 1) * h);
    }
  return best;
}

}  // namespace

TEST(DyadicCube, ParentChildren) {
  DyadicCube c(3, 5, 2);
  EXPECT_EQ(c.parent(), DyadicCube(2, 2, 1));
  EXPECT_EQ(c.ancestor(0), DyadicCube(0, 0, 0));
  const auto kids = c.children();
  ASSERT_EQ(kids.size(), 4u);
  EXPECT_EQ(kids.front(), DyadicCube(4, 10, 4));
  EXPECT_EQ(kids.back(), DyadicCube(4, 11, 5));
  for (const auto& k : kids) EXPECT_TRUE(c.contains(k));
}

TEST(DyadicPolygon, CanonicalLeavesMergeSiblings) {
  std::vector<DyadicCube> all;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) all.emplace_back(2, i, j);
  const auto p = DyadicPolygon::from_cubes(2, 2, all);
  ASSERT_EQ(p.leaves().size(), 1u);
  EXPECT_EQ(p.leaves()[0], DyadicCube(0, 0, 0));
  EXPECT_EQ(p.cube_count(), 16u);
  EXPECT_EQ(p, DyadicPolygon::unit_box());
}

TEST(DyadicPolygon, RejectsInvalidInput) {
  EXPECT_THROW(DyadicPolygon::from_cubes(2, 1, {DyadicCube(1, 0, 0), DyadicCube(1, 1, 1)}),
               Error);
  EXPECT_THROW(DyadicPolygon::from_cubes(2, 1, {DyadicCube(1, 2, 0)}), Error);
  EXPECT_THROW(DyadicPolygon::from_cubes(2, 2, {DyadicCube(1, 0, 0)}), Error);
}

TEST(DyadicPolygon, LocateMatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 40; ++t) {
    const int r = 2 + t % 3;
    const auto p = random_polygon(rng, r, 1 + t % 9);
    const auto ras = raster(p, r);
    const int probe = r + 2;
    const std::int64_t side = std::int64_t{1} << probe;
    for (std::int64_t i = 0; i <= side; ++i)
      for (std::int64_t j = 0; j <= side; ++j) {
        const RationalPoint x(Dyadic::from_parts(i, probe), Dyadic::from_parts(j, probe));
        ASSERT_EQ(p.locate(x), brute_locate(ras, r, x)) << x.to_string();
      }
  }
}

TEST(DyadicPolygon, BoundaryDistanceMatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(0, 255);
  for (int t = 0; t < 30; ++t) {
    const int r = 2 + t % 3;
    const auto p = random_polygon(rng, r, 2 + t % 7);
    const auto ras = raster(p, r);
    for (int k = 0; k < 30; ++k) {
      const RationalPoint x(Dyadic::from_parts(u(rng), 8), Dyadic::from_parts(u(rng), 8));
      const double want = brute_boundary_distance(ras, r, x.coord(0), x.coord(1));
      const auto enc = boundary_distance(x, p, 20);
      EXPECT_LE(enc.lo.to_double(), want + 1e-12);
      EXPECT_GE(enc.hi.to_double(), want - 1e-12);
      EXPECT_EQ(boundary_distance_squared(x, p) == Dyadic{},
                p.locate(x) == PointLocation::Boundary);
    }
  }
}

TEST(DyadicPolygon, UnionRefineContainmentAgreeWithRaster) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 60; ++t) {
    const int ra = 1 + t % 4, rb = 1 + (t / 4) % 4;
    const auto a = random_polygon(rng, ra, 1 + t % 6);
    const auto b = random_polygon(rng, rb, 1 + t % 5);
    const int fine = std::max(ra, rb) + 2;
    const auto A = raster(a, fine), B = raster(b, fine);
    Raster I;
    std::set_intersection(A.begin(), A.end(), B.begin(), B.end(), std::inserter(I, I.end()));
    EXPECT_EQ(a.interiors_intersect(b), !I.empty());
    EXPECT_EQ(a.subset_of(b), I.size() == A.size());
    if (!I.empty()) {
      Raster U = A;
      U.insert(B.begin(), B.end());
      const auto ab = polygon_union(a, b);
      EXPECT_EQ(raster(ab, fine), U);
      EXPECT_EQ(ab.rank(), std::max(ra, rb));
    } else {
      EXPECT_THROW(polygon_union(a, b), Error);
    }
    EXPECT_EQ(raster(refine(a, fine), fine), A);
    EXPECT_THROW(refine(a, ra - 1), Error);
  }
}

TEST(DyadicPolygon, RefinePreservesMembershipOnRandomProbes) {
  std::mt19937_64 rng(21);
  const auto p = random_polygon(rng, 4, 40);
  const auto q = refine(p, 9);
  std::uniform_int_distribution<std::int64_t> u(0, 1 << 12);
  for (int k = 0; k < 10000; ++k) {
    const RationalPoint x(Dyadic::from_parts(u(rng), 12), Dyadic::from_parts(u(rng), 12));
    ASSERT_EQ(p.locate(x), q.locate(x));
  }
}

TEST(DyadicPolygon, CompactlyInside) {
  const auto outer = DyadicPolygon::rectangle(3, 1, 1, 7, 7);
  EXPECT_TRUE(DyadicPolygon::rectangle(3, 2, 2, 6, 6).compactly_inside(outer));
  EXPECT_FALSE(DyadicPolygon::rectangle(3, 1, 2, 6, 6).compactly_inside(outer));
  EXPECT_FALSE(DyadicPolygon::rectangle(3, 2, 2, 6, 6).compactly_inside(
      DyadicPolygon::rectangle(3, 2, 2, 6, 6)));
}

TEST(DyadicPolygon, DeepRectangleStaysCompact) {
  const int r = 12;
  const std::int64_t s = std::int64_t{1} << r;
  const auto p = DyadicPolygon::rectangle(r, 3, 3, s - 3, s - 3);
  EXPECT_LT(p.leaves().size(), 8u * static_cast<std::size_t>(s));
  const RationalPoint c(Dyadic::from_parts(1, 1), Dyadic::from_parts(1, 1));
  const auto d = boundary_distance(c, p, 40);
  EXPECT_EQ(d.lo, d.hi);
  EXPECT_EQ(d.lo, Dyadic::from_parts(1, 1) - Dyadic::from_parts(3, r));
}

TEST(CandidateStream, MatchesBruteForceSubsets) {
  for (int order = 0; order < 2; ++order) {
    for (auto [px, py] : {std::pair{1, 1}, {2, 2}, {2, 1}, {5, 3}}) {
      const int n = 2;
      const RationalPoint x(Dyadic::from_parts(px, 3), Dyadic::from_parts(py, 3));
      CandidateStream::Options opts;
      opts.order = order ? CandidateOrder::MaximalFirst : CandidateOrder::Lexicographic;
      CandidateStream stream(n, x, nullptr, opts);
      std::set<Raster> seen;
      std::vector<Raster> emitted;
      while (auto p = stream.next()) {
        EXPECT_TRUE(p->is_connected());
        EXPECT_TRUE(p->contains_interior(x));
        auto r = raster(*p, n);
        EXPECT_TRUE(seen.insert(r).second) << "duplicate";
        emitted.push_back(r);
      }
      std::size_t expected = 0;
      for (std::uint32_t mask = 1; mask < (1u << 16); ++mask) {
        Raster s;
        for (int b = 0; b < 16; ++b)
          if (mask >> b & 1) s.insert({b / 4, b % 4});
        if (!raster_connected(s)) continue;
        if (brute_locate(s, n, x) != PointLocation::Interior) continue;
        ++expected;
        EXPECT_TRUE(seen.count(s));
      }
      EXPECT_EQ(emitted.size(), expected);
      if (order == 1) EXPECT_EQ(emitted.front().size(), 16u);
    }
  }
}

TEST(CandidateStream, LexicographicOrderIsIncreasing) {
  const RationalPoint x(Dyadic::from_parts(5, 4), Dyadic::from_parts(3, 3));
  auto s = enumerate_candidates(2, x, nullptr);
  std::vector<DyadicCube> prev;
  int count = 0;
  while (auto p = s.next()) {
    auto cur = p->cubes_at(2);
    std::sort(cur.begin(), cur.end());
    if (count++) EXPECT_TRUE(std::lexicographical_compare(prev.begin(), prev.end(), cur.begin(), cur.end()));
    prev = cur;
  }
  EXPECT_GT(count, 100);
}

TEST(CandidateStream, RespectsAnchorAndBudget) {
  const RationalPoint x(Dyadic::from_parts(1, 3), Dyadic::from_parts(1, 3));
  const auto q = DyadicPolygon::rectangle(2, 2, 2, 3, 3);
  CandidateStream s(2, x, &q);
  int count = 0;
  while (auto p = s.next()) {
    EXPECT_TRUE(q.subset_of(*p));
    ++count;
  }
  EXPECT_GT(count, 0);
  CandidateStream::Options tight;
  tight.budget = 10;
  CandidateStream t(3, x, nullptr, tight);
  EXPECT_THROW(
      {
        while (t.next()) {
        }
      },
      Error);
  const RationalPoint outside(Dyadic{2}, Dyadic::from_parts(1, 1));
  EXPECT_THROW(CandidateStream(2, outside, nullptr), Error);
}

namespace {

// Square (1/4,3/4)^2: interior exhaustion and polygons meeting its boundary.
DomainEnumeration square_interior() {
  return DomainEnumeration(EnumerationKind::InteriorExhaustion,
                           [](std::uint64_t k) -> std::optional<DyadicPolygon> {
                             const int r = std::min(static_cast<int>(k) + 2, 12);
                             const std::int64_t s = std::int64_t{1} << r;
                             return DyadicPolygon::rectangle(r, s / 4 + 1, s / 4 + 1,
                                                             3 * s / 4 - 1, 3 * s / 4 - 1);
                           });
}

DomainEnumeration square_boundary() {
  std::vector<DyadicPolygon> polys;
  for (int r = 3; r <= 9; ++r) {
    const std::int64_t s = std::int64_t{1} << r;
    for (std::int64_t j = s / 4; j <= 3 * s / 4; ++j)
      for (std::int64_t side : {s / 4, 3 * s / 4}) {
        polys.push_back(DyadicPolygon::rectangle(r + 1, 2 * side - 1, 2 * j - 1, 2 * side + 1, 2 * j + 1));
        polys.push_back(DyadicPolygon::rectangle(r + 1, 2 * j - 1, 2 * side - 1, 2 * j + 1, 2 * side + 1));
      }
  }
  return DomainEnumeration::from_list(EnumerationKind::BoundaryIntersecting, std::move(polys));
}

}  // namespace

TEST(Enumerations, DistanceToEnumeratedBoundary) {
  for (int n = 2; n <= 6; ++n) {
    const auto x = PointOracle::of_doubles(0.5, 0.4);
    const auto d = distance_to_enumerated_boundary(x, square_interior(), square_boundary(), n);
    EXPECT_LT(std::abs(d.to_double() - 0.15), std::ldexp(1.0, -n));
  }
}

TEST(Enumerations, BoundaryNetOfPoint) {
  const RationalPoint p(Dyadic::from_parts(3, 3), Dyadic::from_parts(5, 3));
  CompactSetHandles h{
      DomainEnumeration(EnumerationKind::InteriorExhaustion,
                        [](std::uint64_t k) -> std::optional<DyadicPolygon> {
                          const int r = std::min(static_cast<int>(k) + 3, 9);
                          const std::int64_t s = std::int64_t{1} << r;
                          std::vector<DyadicCube> cubes;
                          for (std::int64_t i = 0; i < s; ++i)
                            for (std::int64_t j = 0; j < s; ++j) {
                              const bool near = (i == 3 * s / 8 || i == 3 * s / 8 - 1) &&
                                                (j == 5 * s / 8 || j == 5 * s / 8 - 1);
                              if (!near) cubes.emplace_back(r, i, j);
                            }
                          return DyadicPolygon::from_cubes(2, r, cubes);
                        }),
      DomainEnumeration(EnumerationKind::BoundaryIntersecting,
                        [](std::uint64_t k) -> std::optional<DyadicPolygon> {
                          const int r = static_cast<int>(k) + 3;
                          const std::int64_t s = std::int64_t{1} << r;
                          return DyadicPolygon::rectangle(r, 3 * s / 8 - 1, 5 * s / 8 - 1,
                                                          3 * s / 8 + 1, 5 * s / 8 + 1);
                        })};
  for (int n = 1; n <= 4; ++n) {
    const auto net = boundary_net(h, n);
    ASSERT_EQ(net.size(), 1u) << n;
    EXPECT_EQ(net[0], p);
  }
}

TEST(Enumerations, BoundaryNetOfSquareBoundary) {
  CompactSetHandles h{
      DomainEnumeration(EnumerationKind::InteriorExhaustion,
                        [](std::uint64_t k) -> std::optional<DyadicPolygon> {
                          const int r = std::min(static_cast<int>(k) + 1, 8);
                          const std::int64_t s = std::int64_t{1} << r;
                          return DyadicPolygon::rectangle(r, 1, 1, s - 1, s - 1);
                        }),
      DomainEnumeration(EnumerationKind::BoundaryIntersecting,
                        [](std::uint64_t k) -> std::optional<DyadicPolygon> {
                          // Level r lists every boundary-touching rank-r cube.
                          std::uint64_t base = 0;
                          for (int r = 1; r < 12; ++r) {
                            const std::int64_t s = std::int64_t{1} << r;
                            const auto count = static_cast<std::uint64_t>(4 * s - 4);
                            if (k <= base + count) {
                              std::int64_t t = static_cast<std::int64_t>(k - base - 1);
                              std::int64_t i, j;
                              if (t < s) { i = t; j = 0; }
                              else if (t < 2 * s) { i = t - s; j = s - 1; }
                              else if (t < 3 * s - 2) { i = 0; j = t - 2 * s + 1; }
                              else { i = s - 1; j = t - 3 * s + 3; }
                              return DyadicPolygon::from_cubes(2, r, {DyadicCube(r, i, j)});
                            }
                            base += count;
                          }
                          return std::nullopt;
                        })};
  for (int n = 1; n <= 4; ++n) {
    const auto net = boundary_net(h, n);
    ASSERT_FALSE(net.empty());
    const double eps = std::ldexp(1.0, -n);
    for (const auto& q : net) {
      const double x = q.coord(0), y = q.coord(1);
      EXPECT_LT(std::min({x, y, 1 - x, 1 - y}), eps);
    }
    // Every boundary sample is close to the net.
    for (int t = 0; t <= 64; ++t) {
      const double s = t / 64.0;
      for (auto [bx, by] : {std::pair{s, 0.0}, {s, 1.0}, {0.0, s}, {1.0, s}}) {
        double best = 1e9;
        for (const auto& q : net) best = std::min(best, std::hypot(q.coord(0) - bx, q.coord(1) - by));
        EXPECT_LT(best, eps);
      }
    }
  }
}

TEST(PolygonIo, RoundTrip) {
  std::mt19937_64 rng(9);
  const auto dir = std::filesystem::temp_directory_path() / "hmk_io_test";
  std::filesystem::remove_all(dir);
  std::vector<DyadicPolygon> polys;
  for (int t = 0; t < 5; ++t) polys.push_back(random_polygon(rng, 3, 6 + t));
  for (const auto& p : polys) EXPECT_EQ(read_polygon(write_polygon(p)), p);
  save_enumeration(polys, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "000001.dp"));
  const auto e = load_enumeration(dir, EnumerationKind::InteriorExhaustion);
  for (std::size_t k = 0; k < polys.size(); ++k) EXPECT_EQ(*e(k + 1), polys[k]);
  EXPECT_FALSE(e(polys.size() + 1));
  EXPECT_THROW(read_polygon("dyadic-polygon v2 d=2 rank=1\n0 0\n"), Error);
  EXPECT_THROW(read_polygon("dyadic-polygon v1 d=2 rank=1\n0 x\n"), Error);
  std::filesystem::remove_all(dir);
}
