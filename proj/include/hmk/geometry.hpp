#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "hmk/dyadic.hpp"

namespace hmk {

/// Half-open cube prod [k_l 2^-m, (k_l+1) 2^-m).
struct DyadicCube {
  int rank = 0;
  int dim = 2;
  std::array<std::int64_t, kMaxDim> idx{};

  DyadicCube() = default;
  DyadicCube(int rank, std::int64_t i, std::int64_t j) : rank(rank), dim(2), idx{i, j} {}
  static DyadicCube containing(const RationalPoint& p, int rank);

  std::int64_t operator[](int l) const { return idx[static_cast<std::size_t>(l)]; }
  DyadicCube parent() const;
  DyadicCube ancestor(int r) const;
  /// 2^d children in lexicographic index order.
  std::vector<DyadicCube> children() const;
  bool contains(const DyadicCube& other) const;  ///< ancestor-or-equal
  Dyadic lower(int l) const { return Dyadic::from_parts(idx[static_cast<std::size_t>(l)], rank); }
  Dyadic upper(int l) const {
    return Dyadic::from_parts(idx[static_cast<std::size_t>(l)] + 1, rank);
  }
  RationalPoint center() const;
  bool in_unit_box() const;

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube& a, const DyadicCube& b) {
    if (auto c = a.rank <=> b.rank; c != 0) return c;
    for (int l = 0; l < kMaxDim; ++l)
      if (auto c = a.idx[static_cast<std::size_t>(l)] <=> b.idx[static_cast<std::size_t>(l)];
          c != 0)
        return c;
    return a.dim <=> b.dim;
  }
};

struct CubeHash {
  std::size_t operator()(const DyadicCube& c) const noexcept;
};

/// Closed axis-aligned box with dyadic corners. A boundary face is a box
/// that is degenerate along exactly one axis.
struct DyadicBox {
  int dim = 2;
  std::array<Dyadic, kMaxDim> lo{};
  std::array<Dyadic, kMaxDim> hi{};
  Dyadic squared_distance_to(const RationalPoint& p) const;
  double distance_to(const double* p) const;
};

/// Exact squared distance between two closed boxes.
Dyadic box_gap_squared(const DyadicBox& a, const DyadicBox& b);
/// Closure of a cube.
DyadicBox closed_box(const DyadicCube& c);
/// Degenerate box holding a single point.
DyadicBox point_box(const RationalPoint& p);

enum class PointLocation { Interior, Boundary, Exterior };

/// Connected interior of a finite union of same-rank dyadic cubes.
///
/// The point set is stored as canonical leaves: maximal dyadic cubes obtained
/// by merging complete sibling groups. Leaves may be coarser than `rank()`, so
/// deep-rank polygons with simple shapes stay small. Two polygons describe the
/// same point set iff their leaf lists are equal.
class DyadicPolygon {
 public:
  DyadicPolygon() = default;

  /// Builds from cubes that all have rank `rank`. Throws InvalidPolygon
  /// (input) if ranks disagree, a cube leaves [0,1]^d, or the interior is
  /// disconnected.
  static DyadicPolygon from_cubes(int dim, int rank, const std::vector<DyadicCube>& cubes);
  /// Builds from arbitrary disjoint-or-nested cubes of rank <= `rank`.
  static DyadicPolygon from_leaves(int dim, int rank, std::vector<DyadicCube> leaves,
                                   bool check_connected = true);
  static DyadicPolygon unit_box(int dim = 2);
  /// Rectangle [x0,x1) x [y0,y1) given in units of 2^-rank.
  static DyadicPolygon rectangle(int rank, std::int64_t x0, std::int64_t y0, std::int64_t x1,
                                 std::int64_t y1);

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  bool empty() const { return leaves_.empty(); }
  const std::vector<DyadicCube>& leaves() const { return leaves_; }
  int finest_leaf_rank() const;

  /// Number of cubes when expressed at rank `m` (>= rank()).
  std::uint64_t cube_count(int m) const;
  std::uint64_t cube_count() const { return cube_count(rank_); }
  /// Explicit cube list at rank `m`; throws CubeBudget past `limit`.
  std::vector<DyadicCube> cubes_at(int m, std::size_t limit = 1u << 24) const;

  /// Full: cube lies inside the union. Partial: overlaps without being inside.
  enum class Coverage { Empty, Partial, Full };
  Coverage coverage(const DyadicCube& c) const;
  PointLocation locate(const RationalPoint& p) const;
  bool contains_interior(const RationalPoint& p) const {
    return locate(p) == PointLocation::Interior;
  }
  /// Point set inclusion (this ⊆ other).
  bool subset_of(const DyadicPolygon& other) const;
  bool interiors_intersect(const DyadicPolygon& other) const;
  /// Closure of this polygon is contained in the interior of `other`.
  bool compactly_inside(const DyadicPolygon& other) const;
  bool is_connected() const;

  /// Pieces of the topological boundary, as degenerate boxes.
  std::vector<DyadicBox> boundary_faces() const;
  /// Corner points of the boundary faces (vertices of the polygon outline).
  std::vector<RationalPoint> boundary_vertices() const;
  /// Leaves adjacent (sharing a face piece) to the given leaf.
  std::vector<DyadicCube> adjacent_leaves(const DyadicCube& leaf) const;

  Dyadic volume() const;

  friend bool operator==(const DyadicPolygon& a, const DyadicPolygon& b) {
    return a.dim_ == b.dim_ && a.leaves_ == b.leaves_;
  }

 private:
  void build_index();
  bool has_leaf_ancestor(const DyadicCube& c) const;
  void face_pieces(const DyadicCube& leaf, int axis, int side,
                   const std::function<void(const DyadicCube&, const DyadicCube&)>& on_neighbor,
                   const std::function<void(const DyadicCube&)>& on_open) const;

  int dim_ = 2;
  int rank_ = 0;
  std::vector<DyadicCube> leaves_;
  std::shared_ptr<const std::unordered_set<DyadicCube, CubeHash>> leaf_set_;
  std::shared_ptr<const std::unordered_set<DyadicCube, CubeHash>> internal_set_;
};

/// Union of polygons whose interiors meet; rank is the max of the two.
/// Throws DisjointInteriors otherwise.
DyadicPolygon polygon_union(const DyadicPolygon& a, const DyadicPolygon& b);

/// Leaves of `all` face-connected to the leaf holding x (half-open cells);
/// empty when no leaf holds x.
std::vector<DyadicCube> leaf_component(const DyadicPolygon& all, const RationalPoint& x);
/// Same point set at a finer rank. Throws RankTooSmall if m < rank(P).
DyadicPolygon refine(const DyadicPolygon& p, int m);

/// Exact distance from x to the boundary of P, enclosed at precision 2^-n.
DyadicInterval boundary_distance(const RationalPoint& x, const DyadicPolygon& p, int n);
/// Exact squared distance to the boundary.
Dyadic boundary_distance_squared(const RationalPoint& x, const DyadicPolygon& p);
/// Squared distance from x to the farthest point of closure(P).
Dyadic farthest_squared(const RationalPoint& x, const DyadicPolygon& p);

enum class CandidateOrder {
  /// Lexicographic on the sorted cube list.
  Lexicographic,
  /// Lexicographic on the sorted list of *omitted* cubes, so the largest
  /// admissible polygon comes first.
  MaximalFirst,
};

/// Single-consumer stream of rank-n polygons in [0,1]^d that contain x in
/// their interior and contain Q. Duplicate-free; every polygon is connected.
class CandidateStream {
 public:
  struct Options {
    CandidateOrder order = CandidateOrder::Lexicographic;
    /// Optional restriction of the cube universe.
    std::function<bool(const DyadicCube&)> allowed;
    /// Max subsets visited (valid or not) before BudgetExceeded.
    std::uint64_t budget = 1'000'000;
  };

  CandidateStream(int n, const RationalPoint& x, const DyadicPolygon* q, Options opts);
  CandidateStream(int n, const RationalPoint& x, const DyadicPolygon* q)
      : CandidateStream(n, x, q, Options{}) {}
  std::optional<DyadicPolygon> next();
  std::uint64_t visited() const { return visited_; }

 private:
  bool advance();
  bool prefix_viable() const;
  std::optional<DyadicPolygon> materialize() const;

  int n_;
  int dim_;
  Options opts_;
  std::vector<DyadicCube> universe_;  // sorted; omitted-cube universe in MaximalFirst
  std::vector<DyadicCube> all_;       // MaximalFirst: every admissible cube
  std::vector<DyadicCube> required_;  // sorted
  std::vector<char> required_flag_;
  std::vector<std::size_t> req_before_;
  std::size_t req_in_stack_ = 0;
  std::vector<std::size_t> stack_;
  bool started_ = false;
  bool done_ = false;
  std::uint64_t visited_ = 0;
};

/// Convenience wrapper around CandidateStream.
CandidateStream enumerate_candidates(int n, const RationalPoint& x, const DyadicPolygon* q);

// ---------------------------------------------------------------------------
// Enumerations of lower-computable sets.

enum class EnumerationKind { InteriorExhaustion, BoundaryIntersecting };

/// The k-th polygon (k >= 1) of a lower-computable domain or boundary.
/// Returns nullopt past the end of a finite enumeration.
class DomainEnumeration {
 public:
  using Generator = std::function<std::optional<DyadicPolygon>(std::uint64_t)>;
  DomainEnumeration(EnumerationKind kind, Generator gen) : kind_(kind), gen_(std::move(gen)) {}
  static DomainEnumeration from_list(EnumerationKind kind, std::vector<DyadicPolygon> polys);

  EnumerationKind kind() const { return kind_; }
  std::optional<DyadicPolygon> operator()(std::uint64_t k) const { return gen_(k); }

 private:
  EnumerationKind kind_;
  Generator gen_;
};

/// Distance from x to the boundary of the domain exhausted by `interior`,
/// within 2^-n, by greedy search over the two enumerations.
Dyadic distance_to_enumerated_boundary(const PointOracle& x, const DomainEnumeration& interior,
                                       const DomainEnumeration& boundary, int n,
                                       std::uint64_t budget = 1u << 20);

/// Handles for a compact set K in [0,1]^d: an exhaustion of the complement
/// and an enumeration of polygons meeting K.
struct CompactSetHandles {
  DomainEnumeration complement;
  DomainEnumeration intersecting;
};

/// Finite rational set within Hausdorff distance 2^-n of K.
std::vector<RationalPoint> boundary_net(const CompactSetHandles& k, int n,
                                        std::uint64_t budget = 1u << 20);

// ---------------------------------------------------------------------------
// Text format: "dyadic-polygon v1 d=<d> rank=<m>" then one cube per line.

std::string write_polygon(const DyadicPolygon& p);
DyadicPolygon read_polygon(const std::string& text);
DyadicPolygon load_polygon(const std::filesystem::path& path);
void save_polygon(const DyadicPolygon& p, const std::filesystem::path& path);
/// Reads 000001.dp, 000002.dp, ... from a directory.
DomainEnumeration load_enumeration(const std::filesystem::path& dir, EnumerationKind kind);
void save_enumeration(const std::vector<DyadicPolygon>& polys, const std::filesystem::path& dir);

}  // namespace hmk
