#include "hmk/harmonic.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "hmk/error.hpp"

namespace hmk {

const char* engine_name(Engine e) { return e == Engine::Grid ? "grid" : "wos"; }

double ExitWeights::integrate(const BoundaryData& f) const {
  double s = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i].x, nodes[i].y);
  return s;
}

// ---------------------------------------------------------------------------
// GridSystem

namespace {

enum NodeKind : signed char { kExterior = 0, kInterior = 1, kBoundary = 2 };

struct Link {
  std::uint32_t row;       // interior unknown
  std::uint32_t boundary;  // boundary node
  double coeff;
};

}  // namespace

struct GridSystem::Impl {
  std::vector<Dyadic> xs, ys;
  std::vector<double> xd, yd;
  std::vector<signed char> kind;      // per node, nx*ny
  std::vector<std::uint32_t> number;  // interior or boundary index per node
  std::vector<Vec2> boundary_pos;
  std::vector<Link> links;
  std::vector<char> cell_in;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;

  std::size_t nx() const { return xs.size(); }
  std::size_t ny() const { return ys.size(); }
  std::size_t node(std::size_t i, std::size_t j) const { return i * ny() + j; }
  bool cell(std::ptrdiff_t i, std::ptrdiff_t j) const {
    if (i < 0 || j < 0 || i + 1 >= static_cast<std::ptrdiff_t>(nx()) ||
        j + 1 >= static_cast<std::ptrdiff_t>(ny()))
      return false;
    return cell_in[static_cast<std::size_t>(i) * (ny() - 1) + static_cast<std::size_t>(j)] != 0;
  }
};

namespace {

std::vector<Dyadic> grid_lines(const Dyadic& lo, const Dyadic& hi, int rank,
                               const std::vector<Dyadic>& extra) {
  std::vector<Dyadic> v = extra;
  v.push_back(lo);
  v.push_back(hi);
  std::int64_t k0 = lo.floor_scaled(rank);
  if (Dyadic::from_parts(k0, rank) < lo) ++k0;
  const std::int64_t k1 = hi.floor_scaled(rank);
  for (std::int64_t k = k0; k <= k1; ++k) v.push_back(Dyadic::from_parts(k, rank));
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Index of the last line <= v.
std::size_t line_floor(const std::vector<Dyadic>& lines, const Dyadic& v) {
  auto it = std::upper_bound(lines.begin(), lines.end(), v);
  return it == lines.begin() ? 0 : static_cast<std::size_t>(it - lines.begin() - 1);
}

}  // namespace

GridSystem::GridSystem(const DyadicPolygon& p, int rank, std::size_t max_unknowns)
    : impl_(std::make_unique<Impl>()), rank_(rank) {
  if (p.dim() != 2) throw input_error("DimensionMismatch", "grid engine is planar");
  if (p.empty()) throw input_error("EmptyPolygon", "grid on empty polygon");
  auto& m = *impl_;
  Dyadic bx0 = p.leaves()[0].lower(0), bx1 = p.leaves()[0].upper(0);
  Dyadic by0 = p.leaves()[0].lower(1), by1 = p.leaves()[0].upper(1);
  for (const auto& c : p.leaves()) {
    bx0 = min(bx0, c.lower(0));
    bx1 = max(bx1, c.upper(0));
    by0 = min(by0, c.lower(1));
    by1 = max(by1, c.upper(1));
  }
  std::vector<Dyadic> ex, ey;
  for (const auto& s : polygon_outline_exact(p)) {
    if (s.lo[0] == s.hi[0]) ex.push_back(s.lo[0]);
    else ey.push_back(s.lo[1]);
  }
  m.xs = grid_lines(bx0, bx1, rank, ex);
  m.ys = grid_lines(by0, by1, rank, ey);
  for (const auto& v : m.xs) m.xd.push_back(v.to_double());
  for (const auto& v : m.ys) m.yd.push_back(v.to_double());
  const std::size_t nx = m.nx(), ny = m.ny();
  if ((nx - 1) * (ny - 1) > 40'000'000)
    throw budget_error("GridBudget", "grid too large");

  m.cell_in.assign((nx - 1) * (ny - 1), 0);
  for (const auto& c : p.leaves()) {
    const std::size_t i0 = line_floor(m.xs, c.lower(0));
    const std::size_t j0 = line_floor(m.ys, c.lower(1));
    const auto i1 = static_cast<std::size_t>(
        std::lower_bound(m.xs.begin(), m.xs.end(), c.upper(0)) - m.xs.begin());
    const auto j1 = static_cast<std::size_t>(
        std::lower_bound(m.ys.begin(), m.ys.end(), c.upper(1)) - m.ys.begin());
    for (std::size_t i = i0; i < i1; ++i)
      for (std::size_t j = j0; j < j1; ++j) m.cell_in[i * (ny - 1) + j] = 1;
  }

  m.kind.assign(nx * ny, kExterior);
  m.number.assign(nx * ny, 0);
  std::uint32_t n_int = 0, n_bnd = 0;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const auto si = static_cast<std::ptrdiff_t>(i), sj = static_cast<std::ptrdiff_t>(j);
      const int in = m.cell(si - 1, sj - 1) + m.cell(si, sj - 1) + m.cell(si - 1, sj) + m.cell(si, sj);
      const std::size_t id = m.node(i, j);
      if (in == 4) {
        m.kind[id] = kInterior;
        m.number[id] = n_int++;
      } else if (in > 0) {
        m.kind[id] = kBoundary;
        m.number[id] = n_bnd++;
        m.boundary_pos.push_back({m.xd[i], m.yd[j]});
      }
    }
  }
  n_interior_ = n_int;
  if (n_int == 0) throw numeric_error("EmptyGrid", "no interior grid nodes");
  if (n_int > max_unknowns)
    throw budget_error("GridBudget", "grid rank " + std::to_string(rank) + " exceeds unknown budget");

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n_int) * 5);
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    for (std::size_t j = 1; j + 1 < ny; ++j) {
      const std::size_t id = m.node(i, j);
      if (m.kind[id] != kInterior) continue;
      const std::uint32_t row = m.number[id];
      const double hw = m.xd[i] - m.xd[i - 1], he = m.xd[i + 1] - m.xd[i];
      const double hs = m.yd[j] - m.yd[j - 1], hn = m.yd[j + 1] - m.yd[j];
      const std::size_t nb[4] = {m.node(i - 1, j), m.node(i + 1, j), m.node(i, j - 1),
                                 m.node(i, j + 1)};
      const double a[4] = {0.5 * (hs + hn) / hw, 0.5 * (hs + hn) / he, 0.5 * (hw + he) / hs,
                           0.5 * (hw + he) / hn};
      double diag = 0;
      for (int k = 0; k < 4; ++k) {
        diag += a[k];
        if (m.kind[nb[k]] == kInterior) {
          if (m.number[nb[k]] < row) trip.emplace_back(row, m.number[nb[k]], -a[k]);
        } else {
          m.links.push_back({row, m.number[nb[k]], a[k]});
        }
      }
      trip.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> A(n_int, n_int);
  A.setFromTriplets(trip.begin(), trip.end());
  m.ldlt.compute(A);
  if (m.ldlt.info() != Eigen::Success) throw numeric_error("FactorizationFailed", "LDLT failed");
}

GridSystem::~GridSystem() = default;

ExitWeights GridSystem::weights_at(const RationalPoint& x) const {
  const auto& m = *impl_;
  std::size_t i = line_floor(m.xs, x[0]);
  std::size_t j = line_floor(m.ys, x[1]);
  i = std::min(i, m.nx() - 2);
  j = std::min(j, m.ny() - 2);
  // A point on a grid line may sit on the edge of an outside cell.
  auto inside = [&](std::size_t a, std::size_t b) {
    return m.cell(static_cast<std::ptrdiff_t>(a), static_cast<std::ptrdiff_t>(b));
  };
  if (!inside(i, j)) {
    const bool on_x = m.xs[i] == x[0] && i > 0;
    const bool on_y = m.ys[j] == x[1] && j > 0;
    if (on_x && inside(i - 1, j)) {
      i -= 1;
    } else if (on_y && inside(i, j - 1)) {
      j -= 1;
    } else if (on_x && on_y && inside(i - 1, j - 1)) {
      i -= 1;
      j -= 1;
    } else {
      throw input_error("PointOnBoundary", "point is not inside the polygon");
    }
  }
  const double tx = (x[0].to_double() - m.xd[i]) / (m.xd[i + 1] - m.xd[i]);
  const double ty = (x[1].to_double() - m.yd[j]) / (m.yd[j + 1] - m.yd[j]);
  const std::size_t corners[4] = {m.node(i, j), m.node(i + 1, j), m.node(i, j + 1),
                                  m.node(i + 1, j + 1)};
  const double coef[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_interior_));
  std::vector<double> w(m.boundary_pos.size(), 0.0);
  bool any_interior = false;
  for (int k = 0; k < 4; ++k) {
    if (coef[k] == 0) continue;
    const auto id = corners[k];
    if (m.kind[id] == kInterior) {
      rhs[m.number[id]] += coef[k];
      any_interior = true;
    } else if (m.kind[id] == kBoundary) {
      w[m.number[id]] += coef[k];
    } else {
      throw input_error("PointOnBoundary", "point is not inside the polygon");
    }
  }
  if (any_interior) {
    const Eigen::VectorXd lambda = m.ldlt.solve(rhs);
    for (const auto& l : m.links) w[l.boundary] += l.coeff * lambda[l.row];
  }
  ExitWeights out;
  out.rank = rank_;
  for (std::size_t b = 0; b < w.size(); ++b) {
    if (w[b] > 0) {
      out.nodes.push_back(m.boundary_pos[b]);
      out.weights.push_back(w[b]);
    }
  }
  return out;
}

void GridSystem::solve_all(const BoundaryData& g,
                           const std::function<void(double, double, double, bool)>& visit) const {
  const auto& m = *impl_;
  std::vector<double> gb(m.boundary_pos.size());
  for (std::size_t b = 0; b < gb.size(); ++b) gb[b] = g(m.boundary_pos[b].x, m.boundary_pos[b].y);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_interior_));
  for (const auto& l : m.links) rhs[l.row] += l.coeff * gb[l.boundary];
  const Eigen::VectorXd u = m.ldlt.solve(rhs);
  for (std::size_t i = 0; i < m.nx(); ++i)
    for (std::size_t j = 0; j < m.ny(); ++j) {
      const auto id = m.node(i, j);
      if (m.kind[id] == kInterior) visit(m.xd[i], m.yd[j], u[m.number[id]], true);
      else if (m.kind[id] == kBoundary) visit(m.xd[i], m.yd[j], gb[m.number[id]], false);
    }
}

// ---------------------------------------------------------------------------
// PolygonSolver

PolygonSolver::PolygonSolver(DyadicPolygon p, GridOptions opts) : p_(std::move(p)), opts_(opts) {
  if (p_.dim() != 2) throw input_error("DimensionMismatch", "grid engine is planar");
}

const GridSystem& PolygonSolver::system(int rank) const {
  auto it = systems_.find(rank);
  if (it != systems_.end()) return *it->second;
  if (over_budget_.count(rank))
    throw budget_error("GridBudget", "grid rank " + std::to_string(rank) + " exceeds unknown budget");
  std::unique_ptr<GridSystem> sys;
  try {
    sys = std::make_unique<GridSystem>(p_, rank, opts_.max_unknowns);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Budget) over_budget_.insert(rank);
    throw;
  }
  return *systems_.emplace(rank, std::move(sys)).first->second;
}

int PolygonSolver::first_rank() const { return std::max(1, opts_.base_rank); }

const ExitWeights& PolygonSolver::weights(const RationalPoint& x, int rank) const {
  const auto key = std::make_pair(rank, x);
  auto it = weights_.find(key);
  if (it != weights_.end()) return it->second;
  return weights_.emplace(key, system(rank).weights_at(x)).first->second;
}

std::shared_ptr<const SegmentIndex> PolygonSolver::boundary_index() const {
  if (!index_) index_ = polygon_boundary_index(p_);
  return index_;
}

Estimate PolygonSolver::integrate(const RationalPoint& x, const BoundaryData& f, double tol) const {
  if (p_.locate(x) != PointLocation::Interior)
    throw input_error("PointOnBoundary", "evaluation point " + x.to_string() + " is not interior");
  Estimate e;
  e.cert.engine = Engine::Grid;
  double prev = 0;
  for (int r = first_rank(); r <= opts_.max_rank; ++r) {
    double cur;
    try {
      cur = weights(x, r).integrate(f);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::Budget) break;
      throw;
    }
    e.cert.ranks.push_back(r);
    if (e.cert.ranks.size() >= 2) e.cert.deltas.push_back(std::abs(cur - prev));
    prev = cur;
    e.value = cur;
    if (e.cert.deltas.size() >= 2) {
      const std::size_t k = e.cert.deltas.size();
      const double d1 = e.cert.deltas[k - 1], d0 = e.cert.deltas[k - 2];
      const double rho = d0 > 0 ? d1 / d0 : 1.0;
      // Steady geometric decay: safety times the tail sum d1 rho / (1 - rho).
      // Otherwise (stalling, or a suspiciously small last step) the larger
      // of the last two steps.
      const double d = rho >= 0.25 && rho < 0.8 ? d1 * rho / (1 - rho) : std::max(d1, d0);
      e.error = opts_.safety * d + 1e-12;
      e.cert.error = e.error;
      if (e.error < tol) return e;
    }
  }
  throw numeric_error("ToleranceUnreachable",
                      "grid refinement could not certify tolerance " + std::to_string(tol));
}

// ---------------------------------------------------------------------------
// Walk on spheres

namespace {
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t h = mix64(mix64(seed ^ mix64(stream)) ^ counter);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace {

Vec2 walk(const DistanceField& boundary, Vec2 p, std::uint64_t seed, std::uint64_t stream,
          const WosOptions& opts, std::uint64_t* steps) {
  Vec2 q{};
  std::uint64_t k = 0;
  for (; k < opts.max_steps; ++k) {
    const double d = boundary.distance(p, &q);
    if (d < opts.eps_shell) break;
    const double a = 2 * std::numbers::pi * counter_uniform(seed, stream, k);
    p.x += d * std::cos(a);
    p.y += d * std::sin(a);
  }
  if (k == opts.max_steps) boundary.distance(p, &q);
  *steps += k;
  return q;
}

}  // namespace

WosResult wos_estimate(const DistanceField& boundary, Vec2 x, const BoundaryData& f,
                       std::uint64_t samples, std::uint64_t seed, double lip, WosOptions opts) {
  if (samples == 0) throw input_error("InvalidSamples", "wos needs samples");
  double sum = 0, sum2 = 0;
  std::uint64_t steps = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const Vec2 q = walk(boundary, x, seed, s, opts, &steps);
    const double v = f(q.x, q.y);
    sum += v;
    sum2 += v * v;
  }
  WosResult r;
  const auto n = static_cast<double>(samples);
  r.mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum2 - n * r.mean * r.mean) / (n - 1)) : 0.0;
  r.stderr_ = std::sqrt(var / n);
  r.radius = 3 * r.stderr_ + lip * opts.eps_shell;
  r.samples = samples;
  r.seed = seed;
  r.mean_steps = static_cast<double>(steps) / n;
  return r;
}

WosResult wos_estimate(const DyadicPolygon& p, const RationalPoint& x, const BoundaryData& f,
                       std::uint64_t samples, std::uint64_t seed, double lip, WosOptions opts) {
  if (p.locate(x) != PointLocation::Interior)
    throw input_error("PointOnBoundary", "walk start is not interior");
  const auto index = polygon_boundary_index(p);
  return wos_estimate(*index, {x.coord(0), x.coord(1)}, f, samples, seed, lip, opts);
}

WosMass wos_mass(const DistanceField& boundary, Vec2 x,
                 const std::function<bool(double, double)>& in_set, std::uint64_t samples,
                 std::uint64_t seed, WosOptions opts) {
  std::uint64_t hits = 0, steps = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const Vec2 q = walk(boundary, x, seed, s, opts, &steps);
    if (in_set(q.x, q.y)) ++hits;
  }
  const auto n = static_cast<double>(samples);
  const double p = static_cast<double>(hits) / n;
  const double z = 3.0, z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {p, std::min(1.0, centre + half), std::max(0.0, centre - half), samples};
}

// ---------------------------------------------------------------------------
// Measures

PolygonMeasure::PolygonMeasure(std::shared_ptr<const PolygonSolver> solver, RationalPoint x)
    : solver_(std::move(solver)), x_(x) {
  if (solver_->polygon().locate(x_) != PointLocation::Interior)
    throw input_error("PointOnBoundary", "measure base point is not interior");
  outline_ = polygon_outline_exact(solver_->polygon());
}

PolygonMeasure::PolygonMeasure(const DyadicPolygon& p, RationalPoint x, GridOptions opts)
    : PolygonMeasure(std::make_shared<PolygonSolver>(p, opts), x) {}

Estimate PolygonMeasure::integrate(const BoundaryData& f, double tol) const {
  return solver_->integrate(x_, f, tol);
}

bool PolygonMeasure::support_misses(const DyadicBox& box, const Dyadic& radius) const {
  const Dyadic r2 = radius * radius;
  return std::none_of(outline_.begin(), outline_.end(),
                      [&](const DyadicBox& s) { return box_gap_squared(box, s) < r2; });
}

double PolygonMeasure::mass_near(const DyadicBox& box, const Dyadic& radius) const {
  if (support_misses(box, radius)) return 0.0;
  // Lipschitz plateau: 1 within radius of the box, 0 beyond 2*radius. A
  // wider plateau still bounds the mass, so widen until the grid resolves it.
  const double x0 = box.lo[0].to_double(), x1 = box.hi[0].to_double();
  const double y0 = box.lo[1].to_double(), y1 = box.hi[1].to_double();
  for (double r = radius.to_double(); r < 1.0; r *= 2) {
    auto plateau = [=](double x, double y) {
      const double dx = std::max({x0 - x, 0.0, x - x1});
      const double dy = std::max({y0 - y, 0.0, y - y1});
      const double d = std::hypot(dx, dy);
      return std::clamp(2.0 - d / r, 0.0, 1.0);
    };
    try {
      const Estimate e = solver_->integrate(x_, plateau, 1.0 / 1024);
      return std::min(1.0, e.value + e.error);
    } catch (const Error& err) {
      if (err.code() != "ToleranceUnreachable") throw;
    }
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void cross_check(Estimate& e, const DyadicPolygon& p, const RationalPoint& x,
                 const BoundaryData& f, double lip, const MeasureOptions& opts,
                 const PolygonSolver& solver) {
  if (!opts.wos_check) return;
  const auto index = solver.boundary_index();
  const WosResult w =
      wos_estimate(*index, {x.coord(0), x.coord(1)}, f, opts.wos_samples, opts.seed, lip);
  e.cert.seed = opts.seed;
  e.cert.samples = w.samples;
  e.cert.wos_mean = w.mean;
  e.cert.wos_radius = w.radius;
  e.cert.cross_checked = std::abs(e.value - w.mean) <= w.radius + e.error;
  if (!e.cert.cross_checked)
    throw numeric_error("CrossCheckFailed", "walk-on-spheres interval excludes grid value on " +
                                                std::to_string(p.leaves().size()) + "-leaf polygon");
}

}  // namespace

Estimate harmonic_measure_polygon(const DyadicPolygon& p, const RationalPoint& x,
                                  const TestFunction& f, int n, MeasureOptions opts) {
  PolygonSolver solver(p, opts.grid);
  Estimate e = solver.integrate(x, f.evaluator(), std::ldexp(1.0, -n));
  cross_check(e, p, x, f.evaluator(), f.lip_bound(), opts, solver);
  return e;
}

Estimate dirichlet_solve(const DyadicPolygon& p, const BoundaryData& g, const RationalPoint& x,
                         int n, MeasureOptions opts) {
  PolygonSolver solver(p, opts.grid);
  Estimate e = solver.integrate(x, g, std::ldexp(1.0, -n));
  cross_check(e, p, x, g, 1.0, opts, solver);
  return e;
}

std::vector<BoundaryPiece> rectangle_sides(const DyadicPolygon& rect) {
  Dyadic x0 = rect.leaves()[0].lower(0), x1 = rect.leaves()[0].upper(0);
  Dyadic y0 = rect.leaves()[0].lower(1), y1 = rect.leaves()[0].upper(1);
  for (const auto& c : rect.leaves()) {
    x0 = min(x0, c.lower(0));
    x1 = max(x1, c.upper(0));
    y0 = min(y0, c.lower(1));
    y1 = max(y1, c.upper(1));
  }
  if (rect.volume() != (x1 - x0) * (y1 - y0))
    throw input_error("NotRectangle", "polygon is not an axis-parallel rectangle");
  auto seg = [](Dyadic ax, Dyadic ay, Dyadic bx, Dyadic by) {
    DyadicBox b;
    b.lo[0] = ax;
    b.lo[1] = ay;
    b.hi[0] = bx;
    b.hi[1] = by;
    return b;
  };
  return {{"bottom", {seg(x0, y0, x1, y0)}},
          {"right", {seg(x1, y0, x1, y1)}},
          {"top", {seg(x0, y1, x1, y1)}},
          {"left", {seg(x0, y0, x0, y1)}}};
}

std::vector<MassEnclosure> exit_distribution(const DyadicPolygon& p, const RationalPoint& x,
                                             const std::vector<BoundaryPiece>& pieces, int n,
                                             MeasureOptions opts) {
  if (p.locate(x) != PointLocation::Interior)
    throw input_error("PointOnBoundary", "evaluation point is not interior");
  auto on = [](const DyadicBox& s, double a, double b) {
    return s.lo[0].to_double() <= a && a <= s.hi[0].to_double() && s.lo[1].to_double() <= b &&
           b <= s.hi[1].to_double();
  };
  // Shared endpoints split their weight evenly between pieces.
  auto share = [&](std::size_t k, double a, double b) {
    int count = 0;
    bool mine = false;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      bool hit = false;
      for (const auto& s : pieces[i].segments) hit = hit || on(s, a, b);
      count += hit ? 1 : 0;
      if (i == k) mine = hit;
    }
    return mine ? 1.0 / count : 0.0;
  };
  PolygonSolver solver(p, opts.grid);
  const double tol = std::ldexp(1.0, -n - 1);
  std::vector<MassEnclosure> out;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const BoundaryData f = [&, k](double a, double b) { return share(k, a, b); };
    const Estimate e = solver.integrate(x, f, tol);
    double lo = e.value - e.error, hi = e.value + e.error;
    if (opts.wos_check) {
      const auto index = solver.boundary_index();
      // Exit points land within eps_shell of the boundary; snap by nearest piece.
      const WosMass w = wos_mass(
          *index, {x.coord(0), x.coord(1)}, [&](double a, double b) { return share(k, a, b) > 0; },
          opts.wos_samples, opts.seed + k);
      if (hi < w.lower - 1e-12 || lo > w.upper + 1e-12)
        throw numeric_error("CrossCheckFailed", "walk-on-spheres mass excludes grid mass for " +
                                                    pieces[k].label);
    }
    out.push_back({pieces[k].label, std::max(0.0, lo), std::min(1.0, hi)});
  }
  return out;
}

HarmonicCorrection::HarmonicCorrection(TestFunction f, DyadicPolygon p, GridOptions opts)
    : f_(std::move(f)), solver_(std::make_shared<PolygonSolver>(std::move(p), opts)) {}

Estimate HarmonicCorrection::operator()(const RationalPoint& x, double tol) const {
  if (solver_->polygon().locate(x) != PointLocation::Interior) {
    Estimate e;
    e.value = f_(x.coord(0), x.coord(1));
    return e;
  }
  return solver_->integrate(x, f_.evaluator(), tol);
}

HarmonicCorrection harmonic_correction(const TestFunction& f, const DyadicPolygon& p,
                                       GridOptions opts) {
  return HarmonicCorrection(f, p, opts);
}

}  // namespace hmk
