#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hmk/geometry.hpp"
#include "hmk/harmonic.hpp"
#include "hmk/testfn.hpp"

namespace hmk {

// ---------------------------------------------------------------------------
// Interior approximations

struct InteriorOptions {
  std::uint64_t budget = 1u << 12;  // enumeration terms scanned
};

/// Greedy chained unions R_l of an interior exhaustion, with the boundary
/// enumeration certifying how close their vertices are to the boundary.
class InteriorApproximation {
 public:
  InteriorApproximation(DomainEnumeration dom, DomainEnumeration bnd, PointOracle x,
                        InteriorOptions opts = {});

  /// R_{l_n}: every boundary vertex (at rank >= n+1) lies within 2^-n / d
  /// of the boundary. Throws BudgetExceeded.
  const DyadicPolygon& polygon(int n) const;
  /// l_n, the number of chained polygons used.
  std::size_t index(int n) const;
  const RationalPoint& point() const { return x_; }

 private:
  bool grow() const;
  const DyadicPolygon* boundary_member(std::size_t i) const;
  bool vertices_certified(const DyadicPolygon& r, int n) const;

  DomainEnumeration dom_;
  DomainEnumeration bnd_;
  RationalPoint x_;
  InteriorOptions opts_;
  mutable std::vector<DyadicPolygon> chain_;    // R_1, R_2, ...
  mutable std::vector<DyadicPolygon> pending_;  // not yet chained
  mutable std::uint64_t next_k_ = 1;
  mutable bool dom_done_ = false;
  mutable std::vector<DyadicPolygon> boundary_;
  mutable bool bnd_done_ = false;
  mutable std::map<int, std::size_t> solved_;
};

DyadicPolygon build_interior_approx(const DomainEnumeration& dom, const DomainEnumeration& bnd,
                                    const PointOracle& x, int n, InteriorOptions opts = {});

// ---------------------------------------------------------------------------
// Regularity moduli

/// eps(n) with: dist(x, dOmega) < eps(n) implies omega_x(B(x, 2^-n)) > 1 - 2^-n.
class RegularityModulus {
 public:
  using Table = std::function<std::optional<double>(int)>;
  explicit RegularityModulus(Table eps, std::string tag = "table")
      : eps_(std::move(eps)), tag_(std::move(tag)) {}
  /// Exact modulus of a square (any convex domain with right-angle corners
  /// or smoother): 2^-n t / (1 + t), t = tan(pi 2^-(n+2)).
  static RegularityModulus square();
  /// Throws ModulusUndefined when the table has no entry.
  double operator()(int n) const;
  bool defined(int n) const { return eps_(n).has_value(); }
  const std::string& tag() const { return tag_; }

 private:
  Table eps_;
  std::string tag_;
};

/// Smallest k > n + d with d 2^{1-k} < eps(n + 2).
int interior_to_harmonic(const RegularityModulus& reg, int n, int dim = 2);
/// The emitted member P_{k_n} of the interior approximation.
const DyadicPolygon& interior_to_harmonic(const InteriorApproximation& ia,
                                          const RegularityModulus& reg, int n);

// ---------------------------------------------------------------------------
// Harmonic approximations

struct SearchOptions {
  int max_net_level = 4;
  std::uint64_t budget = 1'000'000;  // candidate polygons examined
  int max_rank = 14;
  GridOptions grid;
  /// Extra test functions checked together with the net.
  std::vector<TestFunction> extra;
};

struct SearchRecord {
  DyadicPolygon polygon;
  int n = 0;
  int rank = 0;
  int net_level = 0;
  std::size_t net_size = 0;
  std::size_t failing_member = 0;  // of the last rejected candidate
  double max_gap = 0;              // max_j |I_P - I_mu| + certificates
  double boundary_mass = 0;        // condition (3) upper bound
  std::uint64_t candidates = 0;
};

/// Dovetailed greedy search over candidate ranks rank(Q), rank(Q)+1, ...
/// for a polygon P with x in P, Q in P, net gaps < 2^-n-1 and mu-mass near
/// closure(P) < 2^-n-1. Throws SearchBudgetExceeded.
SearchRecord harmonic_approx_search(const WeakMeasure& mu, const RationalPoint& x,
                                    const DyadicPolygon* Q, int n, SearchOptions opts = {});

/// Lazily searched harmonic approximation of (Omega, x, Q).
class HarmonicApproximation {
 public:
  HarmonicApproximation(std::shared_ptr<const WeakMeasure> mu, RationalPoint x,
                        std::optional<DyadicPolygon> Q = std::nullopt, SearchOptions opts = {});
  const SearchRecord& member(int n) const;
  const RationalPoint& point() const { return x_; }
  const std::optional<DyadicPolygon>& anchor() const { return Q_; }

 private:
  std::shared_ptr<const WeakMeasure> mu_;
  RationalPoint x_;
  std::optional<DyadicPolygon> Q_;
  SearchOptions opts_;
  mutable std::map<int, SearchRecord> members_;
};

/// int f d omega_x^{P_{n+1}} at tolerance 2^-n-1; within 2^-n of omega_x^Omega.
Estimate measure_from_harmonic_approx(const HarmonicApproximation& ha, const TestFunction& f,
                                      int n, GridOptions grid = {});

/// Post-hoc check of the three defining conditions against an independent
/// measure of the domain at x.
struct ConditionReport {
  bool contains = false;      // x interior, Q inside
  bool net_ok = false;        // all net gaps < 2^-n
  bool mass_ok = false;       // boundary mass < 2^-n
  double max_gap = 0;
  double boundary_mass = 0;
  std::size_t net_size = 0;
  bool ok() const { return contains && net_ok && mass_ok; }
};
ConditionReport verify_harmonic_approx(const DyadicPolygon& p, const WeakMeasure& reference,
                                       const RationalPoint& x, const DyadicPolygon* Q, int n,
                                       int max_net_level = 4, GridOptions grid = {});

// ---------------------------------------------------------------------------
// Reconstructions from the measure

/// Measure at an arbitrary interior point (uniform measure access).
using MeasureFamily = std::function<std::shared_ptr<const WeakMeasure>(const RationalPoint&)>;
MeasureFamily polygon_measure_family(const DyadicPolygon& p, GridOptions grid = {});

struct BoundaryOptions {
  int min_rank = 1;
  int max_rank = 4;
  int max_precision = 14;  // threshold tests at 2^-j, j <= max_precision
};

/// Cubes P (ranks min_rank..max_rank) with int chi_P dist(., dP) d mu > 0,
/// detected by dovetailed threshold tests. Emission order: by precision,
/// then rank, then cube index.
std::vector<DyadicPolygon> boundary_from_measure(const WeakMeasure& mu,
                                                 BoundaryOptions opts = {});
DomainEnumeration boundary_enumeration_from_measure(const WeakMeasure& mu,
                                                    BoundaryOptions opts = {});

/// Plateau bump: 1 for r <= 1/2, 0 for r >= 1, C^2 polynomial spline between.
double plateau_bump(double r);

struct ReconstructionOptions {
  /// Cube rank k_n; defaults to the modulus rule when reg is given, else
  /// n + d + 1.
  std::optional<int> rank;
  const RegularityModulus* reg = nullptr;
  GridOptions grid;
};

struct Reconstruction {
  DyadicPolygon polygon;
  int rank = 0;            // k_n
  double log2_harnack = 0; // log2 C(k_n, d)
  double threshold = 0;    // C^-1 2^-n-1 (0 when it underflows)
  std::uint64_t interior_cubes = 0;
};

/// Maximal polygon of interior cubes (bump integral below C^-1 2^-n-1)
/// containing x0.
Reconstruction domain_from_measure(const WeakMeasure& mu, const RationalPoint& x0, int n,
                                   ReconstructionOptions opts = {});

/// Handle for a domain with computable boundary.
struct BoundaryHandle {
  /// True iff the closed cube meets the boundary.
  std::function<bool(const DyadicCube&)> meets;
  /// True iff the point lies in the domain.
  std::function<bool(const RationalPoint&)> contains;
  static BoundaryHandle polygon(const DyadicPolygon& p);
};

struct RegularityProbeOptions {
  int max_k = 12;
  std::uint64_t max_evaluations = 20000;
};

struct RegularityProbe {
  int k = 0;       // stopping rank
  int k_n = 0;     // k + d
  double eps = 0;  // certified entry d 2^{-k}
  std::uint64_t evaluations = 0;
  double min_u = 1;  // min stopping-condition value at the stopping rank
};

/// Stopping-time search for a regularity modulus entry at level n.
RegularityProbe regularity_probe(const BoundaryHandle& bnd, const MeasureFamily& mu, int n,
                                 RegularityProbeOptions opts = {});

/// Text certificate for a harmonic approximation member.
std::string approximation_manifest(const SearchRecord& r, const RationalPoint& x);

}  // namespace hmk
