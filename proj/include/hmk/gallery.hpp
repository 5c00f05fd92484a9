#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hmk/geometry.hpp"
#include "hmk/harmonic.hpp"
#include "hmk/planar.hpp"

namespace hmk::gallery {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Frames. Constructions live in the unit disk; everything numerical runs in
// [0,1]^2 through z -> (z + 1 + i)/2, which halves lengths.

Vec2 to_square(Complex z);
Complex to_disk(Vec2 p);

struct DiskBox {
  double x0, y0, x1, y1;  // closed box, disk coordinates
};

/// Closed set removed from the unit disk.
class Shape {
 public:
  enum class Kind { Disk, Arc, Sector, SlitAnnulus, Strip };

  /// Closed disk |z - c| <= r.
  static Shape disk(Complex c, double r, std::string label = "disk");
  /// Circle |z - c| = r minus the open gap of half-angle gap_half around
  /// direction gap_dir.
  static Shape arc(Complex c, double r, double gap_dir, double gap_half,
                   std::string label = "arc");
  /// r0 <= |z - c| <= r1 with arg(z - c) in [a0, a1] (a0 < a1, radians).
  static Shape sector(Complex c, double r0, double r1, double a0, double a1,
                      std::string label = "sector");
  /// r0 <= |z - c| <= r1 and |Im(z - c)| >= d.
  static Shape slit_annulus(Complex c, double r0, double r1, double d,
                            std::string label = "slit-annulus");
  /// Re z >= x0 and |Im z| <= h.
  static Shape strip(double x0, double h, std::string label = "strip");

  Kind kind() const { return kind_; }
  const std::string& label() const { return label_; }
  Complex center() const { return c_; }
  double r0() const { return r0_; }
  double r1() const { return r1_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }

  bool contains(Complex z) const;
  /// Distance from z to the set, with the nearest point.
  double distance(Complex z, Complex* nearest = nullptr) const;
  /// Conservative: false only when the closed box certainly misses the set.
  bool may_meet(const DiskBox& b) const;

 private:
  Kind kind_ = Kind::Disk;
  Complex c_;
  double r0_ = 0, r1_ = 0, a_ = 0, b_ = 0;
  std::string label_;
};

/// Unit disk minus finitely many closed shapes.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<Shape> removed, std::string name = "region")
      : removed_(std::move(removed)), name_(std::move(name)) {}
  bool contains(Complex z) const;
  double distance(Complex z, Complex* nearest = nullptr) const;
  const std::vector<Shape>& removed() const { return removed_; }
  const std::string& name() const { return name_; }
  void add(Shape s) { removed_.push_back(std::move(s)); }
  /// True when the closed box lies in the open region.
  bool box_inside(const DiskBox& b) const;

 private:
  std::vector<Shape> removed_;
  std::string name_;
};

/// Distance to the boundary of a region, in the square frame.
class SquareField : public DistanceField {
 public:
  explicit SquareField(const Region& r) : region_(r) {}
  double distance(Vec2 p, Vec2* nearest = nullptr) const override;

 private:
  const Region& region_;
};

/// Rank-m cubes whose closure lies in the open region, component of `ref`.
/// Throws RankBudget above max_rank.
DyadicPolygon rasterize(const Region& r, int rank, Complex ref, int max_rank = 10);

// ---------------------------------------------------------------------------
// Closed forms

/// Harmonic measure of the circle |z - p| = r at z in D minus the closed
/// disk, for real p (Moebius map onto a concentric annulus).
double disk_hole_measure(double p, double r, Complex z);
/// Poisson kernel of the unit disk.
double poisson_disk(Complex z, double theta);

/// Walk-on-spheres options shared by the gallery engines.
struct WosConfig {
  std::uint64_t samples = 20000;
  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Schedule

/// x_n = 1 - 2^-n.
double x_point(int n);
/// Desk-scale radii 2^-(n + 3k + 5), k >= n.
double radius(int n, int k);
/// Desk-scale analog of the 4^-k target: (2k + 2) / (n + 3k + 5).
double up1_target(int n, int k);

/// Omega_0 = D minus the closed disks B(x_k, radius(k, k)), k = 1..kmax.
Region omega0_region(int kmax);
/// Rasterization of Omega_0 at the given rank (k up to rank).
DyadicPolygon build_omega0(int rank, int max_rank = 9);

/// E_n: the annular aperture domain.
Region e_region(int n);
/// D_n: the unit disk minus a thin semi-strip along [x_n, 1].
Region d_region(int n);

// ---------------------------------------------------------------------------
// Reports

struct InequalityReport {
  std::string id;
  std::string params;
  double lhs_lo = 0;
  double lhs_hi = 0;
  double rhs = 0;
  std::string relation = "<";  // lhs relation rhs
  double margin = 0;           // signed; positive iff PASS
  bool pass = false;
  std::string verdict;         // PASS, FAIL or INCONCLUSIVE
  std::map<std::string, double> certificates;
  std::string frame_note;
};
std::string format_report(const InequalityReport& r);
std::string report_csv_header();
std::string report_csv_row(const InequalityReport& r);

/// Mass of the circle x_n + r S^1 in D minus the disk, seen from x with
/// |x - x_n| > 4^-k: Beurling bound, closed form and walks against the
/// desk-scale target.
InequalityReport verify_up1(int n, int k, Complex x, WosConfig wos = {});

// ---------------------------------------------------------------------------
// Enumerable sets

/// Deterministic enumeration b_1, b_2, ... of positive integers. Membership is
/// only available by scanning a prefix.
class EnumerableSetStub {
 public:
  /// Finite set listed in order.
  static EnumerableSetStub prefix(std::vector<int> values);
  /// b_k revealed after k^3 steps of a fixed counter machine; infinite.
  static EnumerableSetStub busy(std::uint64_t step_budget = 1u << 20);
  /// "prefix:2,5" or "busy" / "busy:<budget>".
  static EnumerableSetStub parse(const std::string& spec);

  /// b_k (1-based); nullopt past a finite list or beyond the step budget.
  std::optional<int> term(std::size_t k) const;
  /// Number of terms revealable (finite lists: their length).
  std::size_t revealed() const;
  bool finite() const { return finite_; }
  const std::string& tag() const { return tag_; }

  enum class Status { In, Out, Unknown };
  /// Scan the first `stage` terms.
  Status scan(int n, std::size_t stage, std::size_t* index = nullptr) const;

 private:
  std::function<std::optional<int>(std::size_t)> gen_;
  std::size_t revealed_ = 0;
  bool finite_ = true;
  std::string tag_;
};

// ---------------------------------------------------------------------------
// E_n and l_n

struct LnResult {
  int n = 0;
  int ell = 0;
  double mass_lo = 0;        // certified lower bound of int f d omega^{E_n}_{x_n}
  double log2_mass_lo = 0;
  double mouth_value = 0;    // walk estimate of the harmonic function at the mouth
  double mouth_radius = 0;   // its certificate
  double channel_mass = 0;   // harmonic measure of the mouth segment (closed form)
  double channel_width = 0;  // log(b/a)
};

/// Boundary function: 1 for Re z <= -1/2, 0 for Re z >= 0, quintic ramp between.
double theorem_f(Complex z);
double theorem_f_lip();

/// l_n for E_n (certified lower bound route). Throws RankBudget for n > max_n.
LnResult compute_ln(int n, WosConfig wos = {}, int max_n = 6);

// ---------------------------------------------------------------------------
// Star domains

enum class StarVariant { TheoremC, NonRegular };

struct StageEntry {
  int n = 0;          // index of x_n
  int k = 0;          // revealed as b_k (0 when not revealed)
  int radius_index = 0;
  double r = 0;       // circle radius
  int ell = 0;        // l_n (TheoremC)
  double gap_half = 0;  // TheoremC arc gap half-angle
  double arc_mass = 0;  // omega_{x_n}^{B}(arc) closed form
  double d = 0, e = 0;  // NonRegular slit and blob sizes
  double close_bound = 0;   // upper bound in the closeness condition
  double close_target = 0;  // 2^{-n-k}
};

struct StarDomainStage {
  StarVariant variant = StarVariant::TheoremC;
  std::size_t stage = 0;
  int max_n = 0;
  Region region;
  std::vector<StageEntry> entries;
  std::optional<DyadicPolygon> raster;
  int rank = 0;
};

struct StarOptions {
  int max_n = 6;  // indices n = 1..max_n are placed
  int rank = 0;   // rasterization rank (0: none)
  WosConfig wos;
};

StarDomainStage build_star_domain(const EnumerableSetStub& B, std::size_t stage,
                                  StarOptions opts = {});
StarDomainStage build_non_regular_example(const EnumerableSetStub& B, std::size_t stage,
                                          StarOptions opts = {});

/// Which side of 2^{-l_n - 1} the value at x_n falls on.
InequalityReport separation_demo(const EnumerableSetStub& B, int n, std::size_t stage,
                                 WosConfig wos = {});

/// Smallest m with omega_0^{D_m}(D minus D_m) < 2^{-n-3} (walk upper bound).
struct DnResult {
  int m = 0;
  double upper = 0;
  double mean = 0;
};
DnResult compute_mn(int n, WosConfig wos = {}, int max_m = 12);

/// Dispatch `gallery verify <id>`. Known ids: up1, close, theoremC, lower,
/// bellow, above, dn, bounds1, bounds3, lowlow.
InequalityReport verify_inequality(const std::string& id, int n, int k, WosConfig wos = {});

// ---------------------------------------------------------------------------
// Rendering

/// Cubes as squares, removed shapes hatched; square frame scaled to `px`.
std::string render_svg(const DyadicPolygon* raster, const Region& region, const std::string& title,
                       int px = 512);

}  // namespace hmk::gallery
