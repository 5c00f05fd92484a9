#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hmk/geometry.hpp"
#include "hmk/planar.hpp"
#include "hmk/testfn.hpp"

namespace hmk {

using BoundaryData = std::function<double(double, double)>;

enum class Engine { Grid, Wos };
const char* engine_name(Engine e);

struct SolveCertificate {
  Engine engine = Engine::Grid;
  std::vector<int> ranks;
  std::vector<double> deltas;  // |I_{r+1} - I_r|
  double error = 0;            // certified bound
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;
  bool cross_checked = false;  // WoS interval contained the grid value
  double wos_mean = 0;
  double wos_radius = 0;
};

struct Estimate {
  double value = 0;
  double error = 0;
  SolveCertificate cert;
};

// ---------------------------------------------------------------------------
// Grid engine

/// Discrete harmonic measure at one point: boundary nodes with weights.
struct ExitWeights {
  int rank = 0;
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  double integrate(const BoundaryData& f) const;
};

/// Finite-volume 5-point system on the tensor grid formed by the uniform
/// rank-r lines and the lines carrying boundary segments of P. The grid is
/// clipped to the bounding box of P. Factorized once, reused for every point.
class GridSystem {
 public:
  /// Throws GridBudget before factorizing when the interior node count
  /// exceeds max_unknowns.
  GridSystem(const DyadicPolygon& p, int rank, std::size_t max_unknowns = SIZE_MAX);
  ~GridSystem();
  GridSystem(const GridSystem&) = delete;
  GridSystem& operator=(const GridSystem&) = delete;

  int rank() const { return rank_; }
  std::size_t unknowns() const { return n_interior_; }
  /// Weights at an interior point (bilinear interpolation inside its cell).
  ExitWeights weights_at(const RationalPoint& x) const;
  /// Full discrete solution for boundary data g; callback gets every grid
  /// node (x, y, value, is_interior).
  void solve_all(const BoundaryData& g,
                 const std::function<void(double, double, double, bool)>& visit) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int rank_;
  std::size_t n_interior_ = 0;
};

struct GridOptions {
  int base_rank = 4;
  int max_rank = 9;
  double safety = 4.0;  // K in error = K |I_{r+1} - I_r|
  std::size_t max_unknowns = 1'200'000;
};

/// Grid solver bound to one polygon; caches factorizations per rank.
class PolygonSolver {
 public:
  explicit PolygonSolver(DyadicPolygon p, GridOptions opts = {});
  const DyadicPolygon& polygon() const { return p_; }
  const GridOptions& options() const { return opts_; }
  const GridSystem& system(int rank) const;
  /// Ranks used by the solver: base_rank .. max_rank (at least the rank that
  /// resolves x's cell).
  int first_rank() const;
  const ExitWeights& weights(const RationalPoint& x, int rank) const;
  /// Refines until safety*delta < tol; throws ToleranceUnreachable.
  Estimate integrate(const RationalPoint& x, const BoundaryData& f, double tol) const;
  std::shared_ptr<const SegmentIndex> boundary_index() const;

 private:
  DyadicPolygon p_;
  GridOptions opts_;
  mutable std::map<int, std::unique_ptr<GridSystem>> systems_;
  mutable std::set<int> over_budget_;
  mutable std::map<std::pair<int, RationalPoint>, ExitWeights> weights_;
  mutable std::shared_ptr<const SegmentIndex> index_;
};

// ---------------------------------------------------------------------------
// Walk on spheres

struct WosOptions {
  double eps_shell = 1.0 / 16384.0;  // 2^-14
  std::uint64_t max_steps = 100'000;
};

struct WosResult {
  double mean = 0;
  double stderr_ = 0;
  double radius = 0;  // 3 stderr + lip * eps_shell
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  double mean_steps = 0;
};

/// Counter-based uniform in [0,1): a pure function of (seed, stream, counter).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

/// Walk-on-spheres estimate of the exit expectation of f from x.
WosResult wos_estimate(const DistanceField& boundary, Vec2 x, const BoundaryData& f,
                       std::uint64_t samples, std::uint64_t seed, double lip,
                       WosOptions opts = {});
WosResult wos_estimate(const DyadicPolygon& p, const RationalPoint& x, const BoundaryData& f,
                       std::uint64_t samples, std::uint64_t seed, double lip,
                       WosOptions opts = {});

/// Fraction of walks from x whose exit point satisfies `in_set`, with a
/// one-sided (upper) Wilson-style bound.
struct WosMass {
  double mean = 0;
  double upper = 0;
  double lower = 0;
  std::uint64_t samples = 0;
};
WosMass wos_mass(const DistanceField& boundary, Vec2 x,
                 const std::function<bool(double, double)>& in_set, std::uint64_t samples,
                 std::uint64_t seed, WosOptions opts = {});

// ---------------------------------------------------------------------------
// Weak measures

/// A measure accessible through certified integrals of test functions.
class WeakMeasure {
 public:
  virtual ~WeakMeasure() = default;
  virtual Estimate integrate(const BoundaryData& f, double tol) const = 0;
  Estimate integrate(const TestFunction& f, double tol) const {
    return integrate(f.evaluator(), tol);
  }
  /// Upper bound on the mass within `radius` (sup norm) of the closed box;
  /// returns exactly 0 when the support provably misses that neighbourhood.
  virtual double mass_near(const DyadicBox& box, const Dyadic& radius) const = 0;
  /// True when the support provably misses that neighbourhood; cheaper than
  /// mass_near when only the zero test matters.
  virtual bool support_misses(const DyadicBox& box, const Dyadic& radius) const {
    return mass_near(box, radius) == 0.0;
  }
};

/// Harmonic measure of a dyadic polygon at x (grid engine).
class PolygonMeasure : public WeakMeasure {
 public:
  PolygonMeasure(std::shared_ptr<const PolygonSolver> solver, RationalPoint x);
  PolygonMeasure(const DyadicPolygon& p, RationalPoint x, GridOptions opts = {});
  Estimate integrate(const BoundaryData& f, double tol) const override;
  double mass_near(const DyadicBox& box, const Dyadic& radius) const override;
  bool support_misses(const DyadicBox& box, const Dyadic& radius) const override;
  const PolygonSolver& solver() const { return *solver_; }
  const RationalPoint& point() const { return x_; }

 private:
  std::shared_ptr<const PolygonSolver> solver_;
  RationalPoint x_;
  std::vector<DyadicBox> outline_;
};

// ---------------------------------------------------------------------------
// Operations

struct MeasureOptions {
  GridOptions grid;
  bool wos_check = true;
  std::uint64_t wos_samples = 4000;
  std::uint64_t seed = 1;
};

/// |I - integral of f d omega_x^P| < 2^-n.
Estimate harmonic_measure_polygon(const DyadicPolygon& p, const RationalPoint& x,
                                  const TestFunction& f, int n, MeasureOptions opts = {});

/// Labelled boundary piece: a set of closed segments (degenerate boxes).
struct BoundaryPiece {
  std::string label;
  std::vector<DyadicBox> segments;
};

struct MassEnclosure {
  std::string label;
  double lo = 0;
  double hi = 0;
};

/// The four sides of an axis-parallel rectangle polygon, labelled
/// bottom, right, top, left.
std::vector<BoundaryPiece> rectangle_sides(const DyadicPolygon& rect);

std::vector<MassEnclosure> exit_distribution(const DyadicPolygon& p, const RationalPoint& x,
                                             const std::vector<BoundaryPiece>& pieces, int n,
                                             MeasureOptions opts = {});

class HarmonicCorrection {
 public:
  HarmonicCorrection(TestFunction f, DyadicPolygon p, GridOptions opts = {});
  /// f outside P (and on its boundary), the harmonic extension inside.
  Estimate operator()(const RationalPoint& x, double tol) const;
  const TestFunction& source() const { return f_; }
  const DyadicPolygon& domain() const { return solver_->polygon(); }

 private:
  TestFunction f_;
  std::shared_ptr<const PolygonSolver> solver_;
};

HarmonicCorrection harmonic_correction(const TestFunction& f, const DyadicPolygon& p,
                                       GridOptions opts = {});

Estimate dirichlet_solve(const DyadicPolygon& p, const BoundaryData& g, const RationalPoint& x,
                         int n, MeasureOptions opts = {});

}  // namespace hmk
