#include "hmk/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hmk/error.hpp"
#include "hmk/planar.hpp"

namespace hmk {

namespace {

// Leaves of `all` connected to the leaf holding x (face adjacency).
// Quadtree collection of cubes of rank <= m: whole cubes where `accept`
// holds, nothing below cubes where `prune` holds, otherwise subdivided down
// to rank m where `leaf_ok` decides.
using CubePred = std::function<bool(const DyadicCube&)>;
void collect(const DyadicCube& c, int m, const CubePred& accept, const CubePred& prune,
             const CubePred& leaf_ok, std::vector<DyadicCube>& out) {
  if (c.rank == m) {
    if (leaf_ok(c)) out.push_back(c);
    return;
  }
  if (accept && accept(c)) {
    out.push_back(c);
    return;
  }
  if (prune && prune(c)) return;
  for (const auto& ch : c.children()) collect(ch, m, accept, prune, leaf_ok, out);
}

DyadicCube root_cube() {
  DyadicCube c;
  c.rank = 0;
  c.dim = 2;
  return c;
}

double pow2(int e) { return std::ldexp(1.0, e); }

}  // namespace

// ---------------------------------------------------------------------------
// Interior approximations

InteriorApproximation::InteriorApproximation(DomainEnumeration dom, DomainEnumeration bnd,
                                             PointOracle x, InteriorOptions opts)
    : dom_(std::move(dom)), bnd_(std::move(bnd)), x_(x(24)), opts_(opts) {}

bool InteriorApproximation::grow() const {
  for (;;) {
    for (auto it = pending_.begin(); it != pending_.end(); ++it) {
      if (chain_.empty()) {
        if (!it->contains_interior(x_)) continue;
        chain_.push_back(*it);
      } else if (it->subset_of(chain_.back())) {
        pending_.erase(it);
        return grow();
      } else if (chain_.back().interiors_intersect(*it)) {
        chain_.push_back(polygon_union(chain_.back(), *it));
      } else {
        continue;
      }
      pending_.erase(it);
      return true;
    }
    if (dom_done_ || next_k_ > opts_.budget) return false;
    if (auto p = dom_(next_k_++)) pending_.push_back(std::move(*p));
    else dom_done_ = true;
  }
}

const DyadicPolygon* InteriorApproximation::boundary_member(std::size_t i) const {
  while (boundary_.size() <= i && !bnd_done_) {
    if (boundary_.size() >= opts_.budget) {
      bnd_done_ = true;
      break;
    }
    if (auto p = bnd_(boundary_.size() + 1)) boundary_.push_back(std::move(*p));
    else bnd_done_ = true;
  }
  return i < boundary_.size() ? &boundary_[i] : nullptr;
}

bool InteriorApproximation::vertices_certified(const DyadicPolygon& r, int n) const {
  const int m = std::max(r.rank(), n + 1);
  const Dyadic step = Dyadic::from_parts(1, m);
  // dist(y, dOmega) < 2^-n / d, with d = 2.
  const Dyadic limit = Dyadic::from_parts(1, 2 * n + 2);
  std::size_t hint = 0;
  for (const auto& seg : polygon_outline_exact(r)) {
    const int along = seg.lo[0] == seg.hi[0] ? 1 : 0;
    for (Dyadic t = seg.lo[static_cast<std::size_t>(along)];
         t <= seg.hi[static_cast<std::size_t>(along)]; t += step) {
      RationalPoint y(seg.lo[0], seg.lo[1]);
      y[along] = t;
      bool ok = false;
      // Start from the member that certified the previous vertex.
      for (std::size_t probe = 0;; ++probe) {
        const std::size_t i = probe == 0 ? hint : probe - 1;
        const DyadicPolygon* b = boundary_member(i);
        if (!b) break;
        if (farthest_squared(y, *b) < limit) {
          ok = true;
          hint = i;
          break;
        }
      }
      if (!ok) return false;
    }
  }
  return true;
}

const DyadicPolygon& InteriorApproximation::polygon(int n) const {
  return chain_[index(n) - 1];
}

std::size_t InteriorApproximation::index(int n) const {
  if (auto it = solved_.find(n); it != solved_.end()) return it->second;
  std::size_t l = 1;
  if (auto it = solved_.lower_bound(n); it != solved_.begin()) l = std::prev(it)->second;
  for (;; ++l) {
    while (chain_.size() < l)
      if (!grow()) {
        // Exhausted: the last union is the whole domain as far as we know.
        if (!chain_.empty() && vertices_certified(chain_.back(), n)) {
          solved_[n] = chain_.size();
          return chain_.size();
        }
        throw budget_error("BudgetExceeded", "interior approximation did not converge");
      }
    if (vertices_certified(chain_[l - 1], n)) {
      solved_[n] = l;
      return l;
    }
  }
}

DyadicPolygon build_interior_approx(const DomainEnumeration& dom, const DomainEnumeration& bnd,
                                    const PointOracle& x, int n, InteriorOptions opts) {
  InteriorApproximation ia(dom, bnd, x, opts);
  return ia.polygon(n);
}

// ---------------------------------------------------------------------------
// Regularity moduli

RegularityModulus RegularityModulus::square() {
  return RegularityModulus(
      [](int n) -> std::optional<double> {
        if (n < 0) return std::nullopt;
        const double t = std::tan(std::numbers::pi * pow2(-n - 2));
        return pow2(-n) * t / (1 + t);
      },
      "convex-right-angle");
}

double RegularityModulus::operator()(int n) const {
  auto v = eps_(n);
  if (!v) throw input_error("ModulusUndefined", "no modulus entry at level " + std::to_string(n));
  return *v;
}

int interior_to_harmonic(const RegularityModulus& reg, int n, int dim) {
  const double eps = reg(n + 2);
  for (int k = n + dim + 1; k < 62; ++k)
    if (dim * pow2(1 - k) < eps) return k;
  throw input_error("ModulusUndefined", "modulus entry too small");
}

const DyadicPolygon& interior_to_harmonic(const InteriorApproximation& ia,
                                          const RegularityModulus& reg, int n) {
  return ia.polygon(interior_to_harmonic(reg, n, 2));
}

// ---------------------------------------------------------------------------
// Harmonic approximations

namespace {

// Net plus the measure's certified integrals, filled lazily.
struct NetTable {
  std::vector<TestFunction> fs;
  std::vector<std::optional<Estimate>> mu;
};

NetTable make_table(int level, const std::vector<TestFunction>& extra) {
  NetTable t;
  for (auto& m : lipschitz_subharmonic_net(level, NetOptions{std::max(level, 0)}))
    t.fs.push_back(std::move(m.f));
  for (const auto& f : extra) t.fs.push_back(f);
  t.mu.resize(t.fs.size());
  return t;
}

double boundary_mass(const WeakMeasure& mu, const DyadicPolygon& p, const Dyadic& radius) {
  double total = 0;
  for (const auto& leaf : p.leaves()) total += mu.mass_near(closed_box(leaf), radius);
  return total;
}

}  // namespace

SearchRecord harmonic_approx_search(const WeakMeasure& mu, const RationalPoint& x,
                                    const DyadicPolygon* Q, int n, SearchOptions opts) {
  if (n < 0) throw input_error("InvalidLevel", "search level must be nonnegative");
  const bool has_q = Q && !Q->empty();
  const int level = std::min(n, opts.max_net_level);
  NetTable table = make_table(level, opts.extra);
  const double tol = pow2(-n - 3);
  const double gap_limit = pow2(-n - 1);

  SearchRecord rec;
  rec.n = n;
  rec.net_level = level;
  rec.net_size = table.fs.size();
  std::size_t first = 0;  // member that rejected the previous candidate
  for (int m = std::max(has_q ? Q->rank() : 1, 1); m <= opts.max_rank; ++m) {
    if (++rec.candidates > opts.budget)
      throw budget_error("SearchBudgetExceeded", "harmonic approximation search budget");
    const Dyadic r = Dyadic::from_parts(1, m + 2);
    // Maximal candidate of rank m: the component of x among cubes whose
    // closure keeps away from the support, plus Q. Subsets of it have
    // smaller integrals for every subharmonic net member, so when it fails
    // every rank-m candidate fails.
    std::vector<DyadicCube> leaves;
    auto zero = [&](const DyadicCube& c) { return mu.support_misses(closed_box(c), r); };
    collect(root_cube(), m, zero, nullptr, zero, leaves);
    if (has_q)
      for (const auto& c : Q->leaves()) leaves.push_back(c);
    if (leaves.empty()) continue;
    const DyadicPolygon all = DyadicPolygon::from_leaves(2, m, leaves, false);
    auto comp = leaf_component(all, x);
    if (comp.empty()) continue;
    const DyadicPolygon cand = DyadicPolygon::from_leaves(2, m, comp, true);
    if (cand.locate(x) != PointLocation::Interior) continue;
    if (has_q && !Q->subset_of(cand)) continue;

    const double bm = has_q ? boundary_mass(mu, *Q, r) : 0.0;
    if (bm >= gap_limit) continue;

    PolygonSolver solver(cand, opts.grid);
    bool pass = true;
    double worst = 0;
    for (std::size_t step = 0; step < table.fs.size(); ++step) {
      const std::size_t j = (first + step) % table.fs.size();
      if (!table.mu[j]) table.mu[j] = mu.integrate(table.fs[j], tol);
      Estimate a;
      try {
        a = solver.integrate(x, table.fs[j].evaluator(), tol);
      } catch (const Error& e) {
        if (e.code() != "ToleranceUnreachable") throw;
        pass = false;
        first = j;
        break;
      }
      const double gap = std::abs(a.value - table.mu[j]->value) + a.error + table.mu[j]->error;
      worst = std::max(worst, gap);
      if (gap >= gap_limit) {
        pass = false;
        first = j;
        break;
      }
    }
    rec.failing_member = first;
    if (!pass) continue;
    rec.polygon = cand;
    rec.rank = m;
    rec.max_gap = worst;
    rec.boundary_mass = bm;
    return rec;
  }
  throw budget_error("SearchBudgetExceeded",
                     "no candidate up to rank " + std::to_string(opts.max_rank) +
                         " passed the level-" + std::to_string(n) + " conditions");
}

HarmonicApproximation::HarmonicApproximation(std::shared_ptr<const WeakMeasure> mu,
                                             RationalPoint x, std::optional<DyadicPolygon> Q,
                                             SearchOptions opts)
    : mu_(std::move(mu)), x_(x), Q_(std::move(Q)), opts_(std::move(opts)) {}

const SearchRecord& HarmonicApproximation::member(int n) const {
  if (auto it = members_.find(n); it != members_.end()) return it->second;
  auto rec = harmonic_approx_search(*mu_, x_, Q_ ? &*Q_ : nullptr, n, opts_);
  return members_.emplace(n, std::move(rec)).first->second;
}

Estimate measure_from_harmonic_approx(const HarmonicApproximation& ha, const TestFunction& f,
                                      int n, GridOptions grid) {
  const auto& m = ha.member(n + 1);
  PolygonSolver solver(m.polygon, grid);
  return solver.integrate(ha.point(), f.evaluator(), pow2(-n - 1));
}

ConditionReport verify_harmonic_approx(const DyadicPolygon& p, const WeakMeasure& reference,
                                       const RationalPoint& x, const DyadicPolygon* Q, int n,
                                       int max_net_level, GridOptions grid) {
  ConditionReport rep;
  rep.contains = p.locate(x) == PointLocation::Interior && (!Q || Q->empty() || Q->subset_of(p));
  const double tol = pow2(-n - 3);
  NetTable table = make_table(std::min(n, max_net_level), {});
  rep.net_size = table.fs.size();
  rep.net_ok = rep.contains;
  if (rep.contains) {
    PolygonSolver solver(p, grid);
    for (const auto& f : table.fs) {
      const Estimate a = solver.integrate(x, f.evaluator(), tol);
      const Estimate b = reference.integrate(f, tol);
      rep.max_gap = std::max(rep.max_gap, std::abs(a.value - b.value) + a.error + b.error);
    }
    rep.net_ok = rep.max_gap < pow2(-n);
  }
  rep.boundary_mass = boundary_mass(reference, p, Dyadic::from_parts(1, p.rank() + 2));
  rep.mass_ok = rep.boundary_mass < pow2(-n);
  return rep;
}

// ---------------------------------------------------------------------------
// Reconstructions

MeasureFamily polygon_measure_family(const DyadicPolygon& p, GridOptions grid) {
  auto solver = std::make_shared<const PolygonSolver>(p, grid);
  return [solver](const RationalPoint& x) -> std::shared_ptr<const WeakMeasure> {
    return std::make_shared<PolygonMeasure>(solver, x);
  };
}

std::vector<DyadicPolygon> boundary_from_measure(const WeakMeasure& mu, BoundaryOptions opts) {
  struct Pending {
    DyadicCube c;
    bool live = true;
  };
  std::vector<Pending> pending;
  for (int m = opts.min_rank; m <= opts.max_rank; ++m) {
    const Dyadic r = Dyadic::from_parts(1, m + 3);
    std::vector<DyadicCube> near;
    // Cubes whose closure is r-close to the support; all others integrate
    // to exactly 0 and are never emitted.
    auto touches = [&](const DyadicCube& c) { return !mu.support_misses(closed_box(c), r); };
    collect(root_cube(), m, nullptr, [&](const DyadicCube& c) { return !touches(c); }, touches,
            near);
    for (const auto& c : near) pending.push_back({c});
  }
  std::vector<DyadicPolygon> out;
  for (int j = 1; j <= opts.max_precision; ++j) {
    for (auto& p : pending) {
      if (!p.live) continue;
      const double x0 = p.c.lower(0).to_double(), x1 = p.c.upper(0).to_double();
      const double y0 = p.c.lower(1).to_double(), y1 = p.c.upper(1).to_double();
      auto tent = [=](double x, double y) {
        if (x <= x0 || x >= x1 || y <= y0 || y >= y1) return 0.0;
        return std::min({x - x0, x1 - x, y - y0, y1 - y});
      };
      Estimate e;
      try {
        e = mu.integrate(BoundaryData(tent), pow2(-j - 2));
      } catch (const Error& err) {
        if (err.code() != "ToleranceUnreachable") throw;
        continue;
      }
      if (e.value - e.error > pow2(-j - 1)) {
        out.push_back(DyadicPolygon::from_cubes(2, p.c.rank, {p.c}));
        p.live = false;
      }
    }
  }
  return out;
}

DomainEnumeration boundary_enumeration_from_measure(const WeakMeasure& mu, BoundaryOptions opts) {
  return DomainEnumeration::from_list(EnumerationKind::BoundaryIntersecting,
                                      boundary_from_measure(mu, opts));
}

double plateau_bump(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  const double t = 2 * r - 1;
  return 1 - t * t * t * (10 - 15 * t + 6 * t * t);
}

Reconstruction domain_from_measure(const WeakMeasure& mu, const RationalPoint& x0, int n,
                                   ReconstructionOptions opts) {
  constexpr int d = 2;
  Reconstruction rec;
  rec.rank = opts.rank ? *opts.rank : opts.reg ? interior_to_harmonic(*opts.reg, n, d) : n + d + 1;
  const int k = rec.rank;
  if (k <= n + d) throw input_error("RankTooSmall", "cube rank must exceed n + d");
  // C(k, d) = C(d)^{2^{kd}}.
  rec.log2_harnack = std::ldexp(std::log2(81.0), k * d);
  const double log2_threshold = -n - 1 - rec.log2_harnack;
  rec.threshold = log2_threshold < -1000 ? 0.0 : std::exp2(log2_threshold);
  // Bump phi(2^{n+1} d (y - x_Q)) is supported in the open ball of radius r.
  const Dyadic r = Dyadic::from_parts(1, n + 2);
  const double rd = r.to_double();

  auto interior = [&](const DyadicCube& c) {
    const RationalPoint xc = c.center();
    const double m0 = mu.mass_near(point_box(xc), r);
    if (m0 == 0.0) return true;  // M = 0 exactly
    if (rec.threshold == 0.0) return false;  // cannot resolve below the threshold
    const double cx = xc.coord(0), cy = xc.coord(1);
    auto phi = [=](double x, double y) { return plateau_bump(std::hypot(x - cx, y - cy) / rd); };
    try {
      const Estimate e = mu.integrate(BoundaryData(phi), rec.threshold / 2);
      return e.value < rec.threshold;
    } catch (const Error& err) {
      if (err.code() != "ToleranceUnreachable") throw;
      return false;
    }
  };
  auto whole = [&](const DyadicCube& c) { return mu.support_misses(closed_box(c), r); };
  std::vector<DyadicCube> leaves;
  collect(root_cube(), k, whole, nullptr, interior, leaves);
  for (const auto& c : leaves) rec.interior_cubes += std::uint64_t{1} << (2 * (k - c.rank));
  if (leaves.empty()) return rec;
  const DyadicPolygon all = DyadicPolygon::from_leaves(d, k, leaves, false);
  auto comp = leaf_component(all, x0);
  if (comp.empty()) return rec;
  rec.polygon = DyadicPolygon::from_leaves(d, k, comp, true);
  return rec;
}

BoundaryHandle BoundaryHandle::polygon(const DyadicPolygon& p) {
  auto outline = std::make_shared<std::vector<DyadicBox>>(polygon_outline_exact(p));
  BoundaryHandle h;
  h.meets = [outline](const DyadicCube& c) {
    const DyadicBox b = closed_box(c);
    for (const auto& s : *outline)
      if (box_gap_squared(b, s) == Dyadic{}) return true;
    return false;
  };
  h.contains = [p](const RationalPoint& x) { return p.locate(x) == PointLocation::Interior; };
  return h;
}

RegularityProbe regularity_probe(const BoundaryHandle& bnd, const MeasureFamily& mu, int n,
                                 RegularityProbeOptions opts) {
  constexpr int d = 2;
  const int qrank = n + 4;  // bump cubes
  const double s = pow2(-qrank);
  const double need = 1 - pow2(-n - 3);
  RegularityProbe out;
  for (int k = std::max(n + d + 1, qrank + 1); k <= opts.max_k; ++k) {
    // Rank-k cubes meeting the boundary, then their 5x5 neighbourhoods.
    std::vector<DyadicCube> hit;
    collect(root_cube(), k, nullptr, [&](const DyadicCube& c) { return !bnd.meets(c); },
            bnd.meets, hit);
    std::set<DyadicCube> near;
    const std::int64_t side = std::int64_t{1} << k;
    for (const auto& c : hit)
      for (int dx = -2; dx <= 2; ++dx)
        for (int dy = -2; dy <= 2; ++dy) {
          DyadicCube nb(k, c[0] + dx, c[1] + dy);
          if (nb[0] >= 0 && nb[1] >= 0 && nb[0] < side && nb[1] < side) near.insert(nb);
        }
    bool ok = true;
    double min_u = 1;
    for (const auto& c : near) {
      const RationalPoint xc = c.center();
      if (!bnd.contains(xc)) continue;
      if (++out.evaluations > opts.max_evaluations)
        throw budget_error("BudgetExceeded", "regularity probe evaluation budget");
      const RationalPoint q = c.ancestor(qrank).center();
      const double qx = q.coord(0), qy = q.coord(1);
      // 1 on B(x_Q, 2s), 0 outside B(x_Q, 4s).
      auto phi = [=](double x, double y) { return plateau_bump(std::hypot(x - qx, y - qy) / (4 * s)); };
      const Estimate e = mu(xc)->integrate(BoundaryData(phi), pow2(-n - 5));
      min_u = std::min(min_u, e.value - e.error);
      if (e.value - e.error <= need) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.k = k;
      out.k_n = k + d;
      out.eps = pow2(-k);
      out.min_u = min_u;
      return out;
    }
  }
  throw budget_error("BudgetExceeded", "regularity probe reached max_k");
}

std::string approximation_manifest(const SearchRecord& r, const RationalPoint& x) {
  std::ostringstream os;
  os.precision(17);
  os << "# hmk harmonic-approximation v1\n";
  os << "x " << x[0].to_string() << " " << x[1].to_string() << "\n";
  os << "n " << r.n << "\n";
  os << "rank " << r.rank << "\n";
  os << "net_level " << r.net_level << " members " << r.net_size << "\n";
  os << "max_gap " << r.max_gap << " < " << std::ldexp(1.0, -r.n - 1) << "\n";
  os << "boundary_mass " << r.boundary_mass << " < " << std::ldexp(1.0, -r.n - 1) << "\n";
  os << "candidates " << r.candidates << "\n";
  os << write_polygon(r.polygon);
  return os.str();
}

}  // namespace hmk
