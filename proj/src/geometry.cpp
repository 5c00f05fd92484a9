#include "hmk/geometry.hpp"

#include <cmath>
#include <algorithm>
#include <cassert>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hmk/error.hpp"

namespace hmk {

// ---------------------------------------------------------------------------
// DyadicCube

DyadicCube DyadicCube::containing(const RationalPoint& p, int rank) {
  DyadicCube c;
  c.rank = rank;
  c.dim = p.dim;
  for (int l = 0; l < p.dim; ++l) c.idx[static_cast<std::size_t>(l)] = p[l].floor_scaled(rank);
  return c;
}

DyadicCube DyadicCube::parent() const { return ancestor(rank - 1); }

DyadicCube DyadicCube::ancestor(int r) const {
  assert(r <= rank && r >= 0);
  DyadicCube a = *this;
  a.rank = r;
  const int s = rank - r;
  for (int l = 0; l < dim; ++l) a.idx[static_cast<std::size_t>(l)] >>= s;
  return a;
}

std::vector<DyadicCube> DyadicCube::children() const {
  std::vector<DyadicCube> out;
  const int n = 1 << dim;
  out.reserve(static_cast<std::size_t>(n));
  for (int mask = 0; mask < n; ++mask) {
    DyadicCube c = *this;
    c.rank = rank + 1;
    // lexicographic: first axis is the most significant bit
    for (int l = 0; l < dim; ++l) {
      const int bit = (mask >> (dim - 1 - l)) & 1;
      c.idx[static_cast<std::size_t>(l)] = 2 * idx[static_cast<std::size_t>(l)] + bit;
    }
    out.push_back(c);
  }
  return out;
}

bool DyadicCube::contains(const DyadicCube& other) const {
  if (other.rank < rank || other.dim != dim) return false;
  return other.ancestor(rank) == *this;
}

RationalPoint DyadicCube::center() const {
  RationalPoint p = RationalPoint::zeros(dim);
  for (int l = 0; l < std::min(dim, kMaxDim); ++l)
    p[l] = Dyadic::from_parts(2 * idx[static_cast<std::size_t>(l)] + 1, rank + 1);
  return p;
}

bool DyadicCube::in_unit_box() const {
  const std::int64_t n = std::int64_t{1} << rank;
  for (int l = 0; l < dim; ++l) {
    const auto k = idx[static_cast<std::size_t>(l)];
    if (k < 0 || k >= n) return false;
  }
  return true;
}

std::size_t CubeHash::operator()(const DyadicCube& c) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(c.rank + 1);
  for (int l = 0; l < c.dim; ++l) {
    h ^= static_cast<std::uint64_t>(c.idx[static_cast<std::size_t>(l)]) + 0x9E3779B97F4A7C15ull +
         (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

Dyadic DyadicBox::squared_distance_to(const RationalPoint& p) const {
  Dyadic s;
  for (int l = 0; l < dim; ++l) {
    const auto L = static_cast<std::size_t>(l);
    Dyadic d;
    if (p[l] < lo[L]) d = lo[L] - p[l];
    else if (hi[L] < p[l]) d = p[l] - hi[L];
    s += d * d;
  }
  return s;
}

double DyadicBox::distance_to(const double* p) const {
  double s = 0;
  for (int l = 0; l < dim; ++l) {
    const auto L = static_cast<std::size_t>(l);
    const double a = lo[L].to_double(), b = hi[L].to_double();
    const double d = p[l] < a ? a - p[l] : (p[l] > b ? p[l] - b : 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// DyadicPolygon construction

namespace {

std::vector<DyadicCube> canonicalize(int dim, std::vector<DyadicCube> cubes) {
  std::sort(cubes.begin(), cubes.end());
  cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
  std::unordered_set<DyadicCube, CubeHash> present(cubes.begin(), cubes.end());
  std::map<int, std::unordered_set<DyadicCube, CubeHash>> levels;
  for (const auto& c : cubes) {
    bool covered = false;
    for (int r = c.rank - 1; r >= 0 && !covered; --r) covered = present.count(c.ancestor(r)) > 0;
    if (!covered) levels[c.rank].insert(c);
  }
  std::vector<DyadicCube> out;
  const std::size_t group = std::size_t{1} << dim;
  while (!levels.empty()) {
    auto it = std::prev(levels.end());
    const int r = it->first;
    auto level = std::move(it->second);
    levels.erase(it);
    if (r == 0) {
      out.insert(out.end(), level.begin(), level.end());
      continue;
    }
    std::unordered_map<DyadicCube, std::size_t, CubeHash> parents;
    for (const auto& c : level) ++parents[c.parent()];
    for (const auto& c : level) {
      if (parents[c.parent()] == group) levels[r - 1].insert(c.parent());
      else out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// DyadicPolygon

DyadicBox closed_box(const DyadicCube& c) {
  DyadicBox b;
  b.dim = c.dim;
  for (int l = 0; l < c.dim; ++l) {
    b.lo[static_cast<std::size_t>(l)] = c.lower(l);
    b.hi[static_cast<std::size_t>(l)] = c.upper(l);
  }
  return b;
}

DyadicBox point_box(const RationalPoint& p) {
  DyadicBox b;
  b.dim = p.dim;
  for (int l = 0; l < p.dim; ++l) b.lo[static_cast<std::size_t>(l)] = b.hi[static_cast<std::size_t>(l)] = p[l];
  return b;
}

Dyadic box_gap_squared(const DyadicBox& a, const DyadicBox& b) {
  Dyadic s;
  for (int l = 0; l < a.dim; ++l) {
    const auto L = static_cast<std::size_t>(l);
    Dyadic d;
    if (a.hi[L] < b.lo[L]) d = b.lo[L] - a.hi[L];
    else if (b.hi[L] < a.lo[L]) d = a.lo[L] - b.hi[L];
    s += d * d;
  }
  return s;
}

void DyadicPolygon::build_index() {
  auto leaf_set = std::make_shared<std::unordered_set<DyadicCube, CubeHash>>(leaves_.begin(),
                                                                              leaves_.end());
  auto internal = std::make_shared<std::unordered_set<DyadicCube, CubeHash>>();
  for (const auto& c : leaves_)
    for (int r = c.rank - 1; r >= 0; --r)
      if (!internal->insert(c.ancestor(r)).second) break;
  leaf_set_ = std::move(leaf_set);
  internal_set_ = std::move(internal);
}

DyadicPolygon DyadicPolygon::from_leaves(int dim, int rank, std::vector<DyadicCube> leaves,
                                         bool check_connected) {
  if (dim < 2 || dim > kMaxDim) throw input_error("InvalidPolygon", "dimension out of range");
  for (const auto& c : leaves) {
    if (c.dim != dim) throw input_error("InvalidPolygon", "cube dimension mismatch");
    if (c.rank > rank) throw input_error("InvalidPolygon", "cube finer than polygon rank");
    if (!c.in_unit_box()) throw input_error("InvalidPolygon", "cube outside [0,1]^d");
  }
  DyadicPolygon p;
  p.dim_ = dim;
  p.rank_ = rank;
  p.leaves_ = canonicalize(dim, std::move(leaves));
  p.build_index();
  if (check_connected && !p.is_connected())
    throw input_error("InvalidPolygon", "interior is not connected");
  return p;
}

DyadicPolygon DyadicPolygon::from_cubes(int dim, int rank, const std::vector<DyadicCube>& cubes) {
  for (const auto& c : cubes)
    if (c.rank != rank) throw input_error("InvalidPolygon", "cube rank differs from polygon rank");
  if (cubes.empty()) throw input_error("InvalidPolygon", "empty cube list");
  return from_leaves(dim, rank, cubes, true);
}

DyadicPolygon DyadicPolygon::unit_box(int dim) {
  DyadicCube root;
  root.dim = dim;
  return from_leaves(dim, 0, {root}, false);
}

namespace {

void decompose_rect(const DyadicCube& c, int rank, const std::array<std::int64_t, 2>& lo,
                    const std::array<std::int64_t, 2>& hi, std::vector<DyadicCube>& out) {
  const int s = rank - c.rank;
  const std::int64_t a0 = c.idx[0] << s, a1 = (c.idx[0] + 1) << s;
  const std::int64_t b0 = c.idx[1] << s, b1 = (c.idx[1] + 1) << s;
  if (a1 <= lo[0] || a0 >= hi[0] || b1 <= lo[1] || b0 >= hi[1]) return;
  if (a0 >= lo[0] && a1 <= hi[0] && b0 >= lo[1] && b1 <= hi[1]) {
    out.push_back(c);
    return;
  }
  for (const auto& ch : c.children()) decompose_rect(ch, rank, lo, hi, out);
}

}  // namespace

DyadicPolygon DyadicPolygon::rectangle(int rank, std::int64_t x0, std::int64_t y0,
                                       std::int64_t x1, std::int64_t y1) {
  const std::int64_t n = std::int64_t{1} << rank;
  if (!(0 <= x0 && x0 < x1 && x1 <= n && 0 <= y0 && y0 < y1 && y1 <= n))
    throw input_error("InvalidPolygon", "rectangle outside [0,1]^2 or empty");
  std::vector<DyadicCube> leaves;
  decompose_rect(DyadicCube(0, 0, 0), rank, {x0, y0}, {x1, y1}, leaves);
  return from_leaves(2, rank, std::move(leaves), false);
}

int DyadicPolygon::finest_leaf_rank() const {
  int r = 0;
  for (const auto& c : leaves_) r = std::max(r, c.rank);
  return r;
}

std::uint64_t DyadicPolygon::cube_count(int m) const {
  if (m < rank_) throw input_error("RankTooSmall", "cube_count below polygon rank");
  std::uint64_t total = 0;
  for (const auto& c : leaves_) {
    const int shift = dim_ * (m - c.rank);
    if (shift >= 63) throw numeric_error("CubeBudget", "cube count overflows");
    total += std::uint64_t{1} << shift;
  }
  return total;
}

std::vector<DyadicCube> DyadicPolygon::cubes_at(int m, std::size_t limit) const {
  if (m < rank_) throw input_error("RankTooSmall", "cubes_at below polygon rank");
  if (cube_count(m) > limit) throw budget_error("CubeBudget", "too many cubes to materialize");
  std::vector<DyadicCube> out;
  std::vector<DyadicCube> stack;
  for (const auto& leaf : leaves_) {
    stack.push_back(leaf);
    while (!stack.empty()) {
      DyadicCube c = stack.back();
      stack.pop_back();
      if (c.rank == m) {
        out.push_back(c);
        continue;
      }
      for (const auto& ch : c.children()) stack.push_back(ch);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool DyadicPolygon::has_leaf_ancestor(const DyadicCube& c) const {
  if (!leaf_set_) return false;
  for (int r = std::min(c.rank, rank_); r >= 0; --r)
    if (leaf_set_->count(c.ancestor(r))) return true;
  return false;
}

DyadicPolygon::Coverage DyadicPolygon::coverage(const DyadicCube& c) const {
  if (!c.in_unit_box() || leaves_.empty()) return Coverage::Empty;
  if (has_leaf_ancestor(c)) return Coverage::Full;
  if (internal_set_->count(c)) return Coverage::Partial;
  return Coverage::Empty;
}

PointLocation DyadicPolygon::locate(const RationalPoint& p) const {
  // Classify via the rank-m cubes whose closures contain p.
  const int m = rank_;
  std::array<std::array<std::int64_t, 2>, kMaxDim> choices{};
  std::array<int, kMaxDim> count{};
  for (int l = 0; l < dim_; ++l) {
    const auto L = static_cast<std::size_t>(l);
    const std::int64_t k = p[l].floor_scaled(m);
    if (p[l].on_lattice(m)) {
      choices[L] = {k - 1, k};
      count[L] = 2;
    } else {
      choices[L] = {k, k};
      count[L] = 1;
    }
  }
  int total = 1;
  for (int l = 0; l < dim_; ++l) total *= count[static_cast<std::size_t>(l)];
  int inside = 0;
  for (int t = 0; t < total; ++t) {
    DyadicCube c;
    c.rank = m;
    c.dim = dim_;
    int rem = t;
    for (int l = 0; l < dim_; ++l) {
      const auto L = static_cast<std::size_t>(l);
      c.idx[L] = choices[L][static_cast<std::size_t>(rem % count[L])];
      rem /= count[L];
    }
    if (coverage(c) == Coverage::Full) ++inside;
  }
  if (inside == total) return PointLocation::Interior;
  if (inside == 0) return PointLocation::Exterior;
  return PointLocation::Boundary;
}

bool DyadicPolygon::subset_of(const DyadicPolygon& other) const {
  for (const auto& c : leaves_)
    if (other.coverage(c) != Coverage::Full) return false;
  return true;
}

bool DyadicPolygon::interiors_intersect(const DyadicPolygon& other) const {
  for (const auto& c : leaves_)
    if (other.coverage(c) != Coverage::Empty) return true;
  return false;
}

bool DyadicPolygon::compactly_inside(const DyadicPolygon& other) const {
  // closure(P) ⊂ int(other)  iff  P ⊆ other and the two boundaries are disjoint.
  if (!subset_of(other)) return false;
  const auto mine = boundary_faces();
  const auto theirs = other.boundary_faces();
  for (const auto& f : mine)
    for (const auto& g : theirs)
      if (box_gap_squared(f, g) == Dyadic{}) return false;
  return true;
}

void DyadicPolygon::face_pieces(
    const DyadicCube& leaf, int axis, int side,
    const std::function<void(const DyadicCube&, const DyadicCube&)>& on_neighbor,
    const std::function<void(const DyadicCube&)>& on_open) const {
  // `own` is a sub-cube of the leaf touching the face; `nb` the same-size
  // cube across the face.
  std::vector<DyadicCube> stack{leaf};
  while (!stack.empty()) {
    DyadicCube own = stack.back();
    stack.pop_back();
    DyadicCube nb = own;
    nb.idx[static_cast<std::size_t>(axis)] += side;
    switch (coverage(nb)) {
      case Coverage::Full: {
        // Neighbor leaf is nb's ancestor-or-self.
        DyadicCube anc = nb;
        for (int r = std::min(nb.rank, rank_); r >= 0; --r) {
          if (leaf_set_->count(nb.ancestor(r))) {
            anc = nb.ancestor(r);
            break;
          }
        }
        on_neighbor(own, anc);
        break;
      }
      case Coverage::Empty:
        on_open(own);
        break;
      case Coverage::Partial:
        for (const auto& ch : own.children()) {
          const auto bit = ch.idx[static_cast<std::size_t>(axis)] & 1;
          if ((side > 0 && bit == 1) || (side < 0 && bit == 0)) stack.push_back(ch);
        }
        break;
    }
  }
}

std::vector<DyadicCube> DyadicPolygon::adjacent_leaves(const DyadicCube& leaf) const {
  std::vector<DyadicCube> out;
  for (int axis = 0; axis < dim_; ++axis)
    for (int side : {-1, 1})
      face_pieces(
          leaf, axis, side, [&](const DyadicCube&, const DyadicCube& nb) { out.push_back(nb); },
          [](const DyadicCube&) {});
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool DyadicPolygon::is_connected() const {
  if (leaves_.empty()) return false;
  std::unordered_set<DyadicCube, CubeHash> seen{leaves_.front()};
  std::deque<DyadicCube> queue{leaves_.front()};
  while (!queue.empty()) {
    const DyadicCube c = queue.front();
    queue.pop_front();
    for (const auto& nb : adjacent_leaves(c))
      if (seen.insert(nb).second) queue.push_back(nb);
  }
  return seen.size() == leaves_.size();
}

std::vector<DyadicBox> DyadicPolygon::boundary_faces() const {
  std::vector<DyadicBox> out;
  for (const auto& leaf : leaves_) {
    for (int axis = 0; axis < dim_; ++axis) {
      for (int side : {-1, 1}) {
        face_pieces(
            leaf, axis, side, [](const DyadicCube&, const DyadicCube&) {},
            [&](const DyadicCube& own) {
              DyadicBox f;
              f.dim = dim_;
              for (int l = 0; l < dim_; ++l) {
                const auto L = static_cast<std::size_t>(l);
                f.lo[L] = own.lower(l);
                f.hi[L] = own.upper(l);
              }
              const auto A = static_cast<std::size_t>(axis);
              if (side < 0) f.hi[A] = f.lo[A];
              else f.lo[A] = f.hi[A];
              out.push_back(f);
            });
      }
    }
  }
  return out;
}

std::vector<RationalPoint> DyadicPolygon::boundary_vertices() const {
  std::set<RationalPoint> verts;
  for (const auto& f : boundary_faces()) {
    const int corners = 1 << dim_;
    for (int mask = 0; mask < corners; ++mask) {
      RationalPoint p = RationalPoint::zeros(dim_);
      for (int l = 0; l < dim_; ++l) {
        const auto L = static_cast<std::size_t>(l);
        p[l] = ((mask >> l) & 1) ? f.hi[L] : f.lo[L];
      }
      verts.insert(p);
    }
  }
  return {verts.begin(), verts.end()};
}

Dyadic DyadicPolygon::volume() const {
  Dyadic v;
  for (const auto& c : leaves_) v += Dyadic::from_parts(1, dim_ * c.rank);
  return v;
}

DyadicPolygon polygon_union(const DyadicPolygon& a, const DyadicPolygon& b) {
  if (a.dim() != b.dim()) throw input_error("DimensionMismatch", "union of polygons");
  if (!a.interiors_intersect(b))
    throw input_error("DisjointInteriors", "polygon interiors do not meet");
  std::vector<DyadicCube> leaves = a.leaves();
  leaves.insert(leaves.end(), b.leaves().begin(), b.leaves().end());
  return DyadicPolygon::from_leaves(a.dim(), std::max(a.rank(), b.rank()), std::move(leaves),
                                    false);
}

DyadicPolygon refine(const DyadicPolygon& p, int m) {
  if (m < p.rank()) throw input_error("RankTooSmall", "refine target below polygon rank");
  return DyadicPolygon::from_leaves(p.dim(), m, p.leaves(), false);
}

Dyadic boundary_distance_squared(const RationalPoint& x, const DyadicPolygon& p) {
  bool first = true;
  Dyadic best;
  for (const auto& f : p.boundary_faces()) {
    const Dyadic d = f.squared_distance_to(x);
    if (first || d < best) best = d;
    first = false;
  }
  if (first) throw input_error("EmptyPolygon", "polygon has no boundary");
  return best;
}

DyadicInterval boundary_distance(const RationalPoint& x, const DyadicPolygon& p, int n) {
  return sqrt_enclosure(boundary_distance_squared(x, p), n);
}

}  // namespace hmk
