#include "hmk/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hmk/approximation.hpp"
#include "hmk/error.hpp"
#include "hmk/planar.hpp"

namespace hmk {

namespace {

double pow2(int e) { return std::ldexp(1.0, e); }

Vec2 vec(const RationalPoint& p) { return {p.coord(0), p.coord(1)}; }

// Certified lower bound of dist(p, dQ); 0 when p is not interior.
double clearance(const RationalPoint& p, const DyadicPolygon& q, const std::vector<DyadicBox>& outline) {
  if (q.locate(p) != PointLocation::Interior) return 0.0;
  Dyadic best = outline.at(0).squared_distance_to(p);
  for (const auto& s : outline) best = min(best, s.squared_distance_to(p));
  const double s = std::sqrt(best.to_double());
  return std::nextafter(s, 0.0);
}

bool in_closed(const DyadicCube& c, const RationalPoint& p) {
  for (int l = 0; l < 2; ++l)
    if (p[l] < c.lower(l) || c.upper(l) < p[l]) return false;
  return true;
}

Dyadic gap_to_outline(const DyadicBox& b, const std::vector<DyadicBox>& outline) {
  std::optional<Dyadic> best;
  for (const auto& s : outline) {
    const Dyadic g = box_gap_squared(b, s);
    if (!best || g < *best) best = g;
  }
  return best.value_or(Dyadic{});
}

// Closed cubes touch (share at least a point).
bool touching(const DyadicCube& a, const DyadicCube& b) {
  return box_gap_squared(closed_box(a), closed_box(b)) == Dyadic{};
}

HarnackStep make_step(Vec2 from, Vec2 to, double radius) {
  HarnackStep s{from, to, radius, 1.0};
  const double rho = std::hypot(to.x - from.x, to.y - from.y);
  if (rho == 0) return s;
  // Factor capped at the base constant: (R + rho)/(R - rho) <= 81.
  if (!(rho < radius * 80.0 / 82.0))
    throw input_error("ClearanceViolated", "Harnack ball leaves the connector polygon");
  s.factor = (radius + rho) / (radius - rho);
  return s;
}

}  // namespace

double beurling_bound(double R, double diam, double dist) {
  if (!(R > 0) || !(diam > 0) || !(diam <= R / 2) || !(dist > 0))
    throw input_error("DomainOfValidity", "Beurling estimate needs 0 < diam <= R/2 and dist > 0");
  return std::log(2 * R / dist) / std::log(R / diam);
}

double HarnackBound::log2_tau() const { return std::log2(tau); }

// ---------------------------------------------------------------------------
// Connectors

bool Connector::on_gamma(const RationalPoint& p) const {
  return std::any_of(gamma.begin(), gamma.end(), [&](const DyadicCube& c) { return in_closed(c, p); });
}

bool Connector::valid(std::string* why) const {
  auto fail = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  if (Q.empty()) return fail("empty polygon");
  if (Q.rank() > ell) return fail("polygon finer than connector rank");
  if (gamma.empty()) return fail("empty gamma");
  if (!on_gamma(x0) || !on_gamma(x)) return fail("endpoint off gamma");
  const auto outline = polygon_outline_exact(Q);
  // dist(y, dQ) > d 2^{1-ell} = 2^{2-ell} for d = 2.
  const Dyadic need = Dyadic::from_parts(1, 2 * ell - 4);
  for (const auto& c : gamma) {
    if (Q.coverage(c) != DyadicPolygon::Coverage::Full) return fail("gamma cube outside Q");
    if (!(need < gap_to_outline(closed_box(c), outline))) return fail("clearance violated");
  }
  std::vector<char> seen(gamma.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < gamma.size(); ++j)
      if (!seen[j] && touching(gamma[i], gamma[j])) {
        seen[j] = 1;
        ++count;
        stack.push_back(j);
      }
  }
  if (count != gamma.size()) return fail("gamma disconnected");
  return true;
}

HarnackBound harnack_chain(const DyadicPolygon& Q, const std::vector<DyadicCube>& gamma, int ell,
                           const RationalPoint& x1, const RationalPoint& x2) {
  auto on = [&](const RationalPoint& p) {
    return std::any_of(gamma.begin(), gamma.end(), [&](const DyadicCube& c) { return in_closed(c, p); });
  };
  if (!on(x1) || !on(x2)) throw input_error("ClearanceViolated", "point not on gamma");
  HarnackBound hb;
  hb.chain_rank = ell + 1;
  hb.worst_exponent = std::uint64_t{1} << (2 * hb.chain_rank);
  if (x1 == x2) return hb;

  // Rank-(ell+1) cells meeting gamma.
  const int m = ell + 1;
  std::set<DyadicCube> cells;
  for (const auto& g : gamma) {
    const DyadicBox b = closed_box(g);
    const std::int64_t i0 = b.lo[0].floor_scaled(m) - 1, i1 = b.hi[0].floor_scaled(m);
    const std::int64_t j0 = b.lo[1].floor_scaled(m) - 1, j1 = b.hi[1].floor_scaled(m);
    for (std::int64_t i = i0; i <= i1; ++i)
      for (std::int64_t j = j0; j <= j1; ++j) {
        DyadicCube c(m, i, j);
        if (c.in_unit_box() && box_gap_squared(closed_box(c), b) == Dyadic{}) cells.insert(c);
      }
  }
  std::vector<DyadicCube> list(cells.begin(), cells.end());
  std::map<DyadicCube, std::size_t> id;
  for (std::size_t i = 0; i < list.size(); ++i) id[list[i]] = i;
  std::vector<double> rad(list.size());
  const auto outline = polygon_outline_exact(Q);
  for (std::size_t i = 0; i < list.size(); ++i) rad[i] = clearance(list[i].center(), Q, outline);

  auto start_of = [&](const RationalPoint& p) {
    std::optional<std::size_t> best;
    double best_d = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!in_closed(list[i], p) || rad[i] == 0) continue;
      const Vec2 c = vec(list[i].center()), q = vec(p);
      const double d = std::hypot(c.x - q.x, c.y - q.y) / rad[i];
      if (!best || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    if (!best) throw input_error("ClearanceViolated", "no chain cell around point");
    return *best;
  };
  const std::size_t s = start_of(x1), t = start_of(x2);

  // Dijkstra on log step factors over 8-adjacent cells.
  std::vector<double> dist(list.size(), INFINITY);
  std::vector<std::size_t> prev(list.size(), SIZE_MAX);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s] = 0;
  pq.push({0, s});
  while (!pq.empty()) {
    auto [d, i] = pq.top();
    pq.pop();
    if (d > dist[i]) continue;
    if (i == t) break;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) {
        if (!dx && !dy) continue;
        auto it = id.find(DyadicCube(m, list[i][0] + dx, list[i][1] + dy));
        if (it == id.end()) continue;
        const std::size_t j = it->second;
        const double r = std::max(rad[i], rad[j]);
        const double rho = std::hypot(dx, dy) * pow2(-m);
        if (!(rho < r * 80.0 / 82.0)) continue;
        const double w = std::log((r + rho) / (r - rho));
        if (d + w < dist[j]) {
          dist[j] = d + w;
          prev[j] = i;
          pq.push({dist[j], j});
        }
      }
  }
  if (!std::isfinite(dist[t])) throw input_error("ClearanceViolated", "gamma cells do not connect");
  std::vector<std::size_t> path;
  for (std::size_t v = t; v != SIZE_MAX; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());

  hb.steps.push_back(make_step(vec(x1), vec(list[s].center()), rad[s]));
  for (std::size_t a = 0; a + 1 < path.size(); ++a) {
    const std::size_t i = path[a], j = path[a + 1];
    const bool at_i = rad[i] >= rad[j];
    const Vec2 from = vec(list[i].center()), to = vec(list[j].center());
    hb.steps.push_back(make_step(at_i ? from : to, at_i ? to : from, std::max(rad[i], rad[j])));
  }
  hb.steps.push_back(make_step(vec(list[t].center()), vec(x2), rad[t]));
  for (auto i : path) hb.chain.push_back(list[i]);
  hb.exponent = hb.steps.size();
  for (const auto& st : hb.steps) hb.tau *= st.factor;
  return hb;
}

HarnackBound harnack_chain(const Connector& conn, const RationalPoint& x1,
                           const RationalPoint& x2) {
  return harnack_chain(conn.Q, conn.gamma, conn.ell, x1, x2);
}

Connector find_connector(const DomainEnumeration& dom, const PointOracle& x0_oracle,
                         const PointOracle& x_oracle, ConnectorOptions opts) {
  const RationalPoint x0 = x0_oracle(24), x = x_oracle(24);
  // Chained union of enumerated polygons, grown from the one holding x0.
  std::optional<DyadicPolygon> reach;
  std::vector<DyadicPolygon> pending;
  std::uint64_t k = 1;
  bool done = false;
  while (!reach || !reach->contains_interior(x)) {
    bool grew = false;
    for (auto it = pending.begin(); it != pending.end(); ++it) {
      if (!reach) {
        if (!it->contains_interior(x0)) continue;
        reach = *it;
      } else if (reach->interiors_intersect(*it)) {
        reach = polygon_union(*reach, *it);
      } else {
        continue;
      }
      pending.erase(it);
      grew = true;
      break;
    }
    if (grew) continue;
    if (done || k > opts.budget)
      throw budget_error("BudgetExceeded", "enumeration does not join the two points");
    if (auto p = dom(k++)) pending.push_back(std::move(*p));
    else done = true;
  }
  const DyadicPolygon& P = *reach;
  const auto p_outline = polygon_outline_exact(P);

  // Both endpoints need dist > 2^{2-ell} to dP before any rank can work.
  const Dyadic clear = min(boundary_distance_squared(x0, P), boundary_distance_squared(x, P));
  int first = std::max(P.rank(), 1);
  while (first <= opts.max_rank && !(Dyadic::from_parts(1, 2 * first - 4) < clear)) ++first;

  for (int ell = first; ell <= opts.max_rank; ++ell) {
    // Q: rank-ell cubes whose closure lies inside P, component of x0.
    std::vector<DyadicCube> inside;
    for (const auto& c : P.cubes_at(ell))
      if (Dyadic{} < gap_to_outline(closed_box(c), p_outline)) inside.push_back(c);
    if (inside.empty()) continue;
    const DyadicPolygon all = DyadicPolygon::from_leaves(2, ell, inside, false);
    if (!all.contains_interior(x0) || !all.contains_interior(x)) continue;
    std::vector<DyadicCube> comp;
    {
      const DyadicCube s = DyadicCube::containing(x0, ell);
      std::unordered_set<DyadicCube, CubeHash> pool(inside.begin(), inside.end()), seen{s};
      std::vector<DyadicCube> stack{s};
      while (!stack.empty()) {
        const DyadicCube c = stack.back();
        stack.pop_back();
        comp.push_back(c);
        for (int l = 0; l < 2; ++l)
          for (int sd : {-1, 1}) {
            DyadicCube nb = c;
            nb.idx[static_cast<std::size_t>(l)] += sd;
            if (pool.count(nb) && seen.insert(nb).second) stack.push_back(nb);
          }
      }
    }
    const DyadicPolygon Q = DyadicPolygon::from_leaves(2, ell, comp, true);
    if (!Q.contains_interior(x)) continue;
    const auto q_outline = polygon_outline_exact(Q);
    const Dyadic need = Dyadic::from_parts(1, 2 * ell - 4);
    std::unordered_set<DyadicCube, CubeHash> safe;
    for (const auto& c : comp)
      if (need < gap_to_outline(closed_box(c), q_outline)) safe.insert(c);
    const DyadicCube a = DyadicCube::containing(x0, ell), b = DyadicCube::containing(x, ell);
    if (!safe.count(a) || !safe.count(b)) continue;
    // Shortest 8-connected path of safe cubes.
    std::unordered_map<DyadicCube, DyadicCube, CubeHash> parent;
    std::queue<DyadicCube> q;
    parent.emplace(a, a);
    q.push(a);
    while (!q.empty() && !parent.count(b)) {
      const DyadicCube c = q.front();
      q.pop();
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy) {
          DyadicCube nb(ell, c[0] + dx, c[1] + dy);
          if (safe.count(nb) && !parent.count(nb)) {
            parent.emplace(nb, c);
            q.push(nb);
          }
        }
    }
    if (!parent.count(b)) continue;
    Connector conn;
    conn.Q = Q;
    conn.ell = ell;
    conn.x0 = x0;
    conn.x = x;
    for (DyadicCube c = b;; c = parent.at(c)) {
      conn.gamma.push_back(c);
      if (c == a) break;
    }
    std::reverse(conn.gamma.begin(), conn.gamma.end());
    std::string why;
    if (!conn.valid(&why)) throw numeric_error("ConnectorInvalid", why);
    return conn;
  }
  throw budget_error("BudgetExceeded", "no connector up to rank " + std::to_string(opts.max_rank));
}

// ---------------------------------------------------------------------------
// Subdomain comparison

OuterDomain OuterDomain::polygon(const DyadicPolygon& p) {
  OuterDomain o;
  o.may_meet = [p](const DyadicCube& c) { return p.coverage(c) != DyadicPolygon::Coverage::Empty; };
  o.covers = [p](const DyadicCube& c) { return p.coverage(c) == DyadicPolygon::Coverage::Full; };
  o.rank = p.rank();
  return o;
}

ComparisonBound compare_subdomains(const DyadicPolygon& inner, const OuterDomain& outer,
                                   const RationalPoint& x, double tol, GridOptions grid) {
  if (outer.covers)
    for (const auto& leaf : inner.leaves())
      if (!outer.covers(leaf)) throw input_error("NotNested", "inner polygon leaves the outer domain");
  const int M = std::max({inner.rank(), inner.finest_leaf_rank(), outer.rank});
  const Dyadic h = Dyadic::from_parts(1, M);
  const std::int64_t side = std::int64_t{1} << M;
  std::vector<Segment> pieces;
  for (const auto& f : inner.boundary_faces()) {
    const int fixed = f.lo[0] == f.hi[0] ? 0 : 1;
    const int along = 1 - fixed;
    const std::int64_t v = f.lo[static_cast<std::size_t>(fixed)].floor_scaled(M);
    for (Dyadic t = f.lo[static_cast<std::size_t>(along)]; t < f.hi[static_cast<std::size_t>(along)];
         t += h) {
      const std::int64_t u = t.floor_scaled(M);
      DyadicCube plus, minus;
      plus.rank = minus.rank = M;
      plus.idx[static_cast<std::size_t>(fixed)] = v;
      minus.idx[static_cast<std::size_t>(fixed)] = v - 1;
      plus.idx[static_cast<std::size_t>(along)] = minus.idx[static_cast<std::size_t>(along)] = u;
      const bool plus_in = v < side && inner.coverage(plus) == DyadicPolygon::Coverage::Full;
      const DyadicCube out = plus_in ? minus : plus;
      if (out[fixed] < 0 || out[fixed] >= side) continue;
      if (!outer.may_meet(out)) continue;
      Segment s;
      RationalPoint a, b;
      a[fixed] = b[fixed] = f.lo[static_cast<std::size_t>(fixed)];
      a[along] = t;
      b[along] = t + h;
      pieces.push_back({vec(a), vec(b)});
    }
  }
  ComparisonBound out;
  out.interface_faces = pieces.size();
  if (pieces.empty()) return out;
  auto index = std::make_shared<SegmentIndex>(std::move(pieces));
  PolygonSolver solver(inner, grid);
  // Any plateau that is 1 on the interface bounds its measure; widen it
  // until the grid certifies the integral.
  for (double eta = pow2(-std::max(M, grid.base_rank) - 2);; eta *= 2) {
    auto plateau = [index, eta](double a, double b) {
      return std::clamp(2.0 - index->distance({a, b}) / eta, 0.0, 1.0);
    };
    try {
      out.interface_mass = solver.integrate(x, plateau, tol);
      break;
    } catch (const Error& err) {
      if (err.code() != "ToleranceUnreachable" || eta > 1) throw;
    }
  }
  out.bound = 2 * std::min(1.0, out.interface_mass.value + out.interface_mass.error);
  return out;
}

ComparisonBound compare_subdomains(const DyadicPolygon& inner, const DyadicPolygon& outer,
                                   const RationalPoint& x, double tol, GridOptions grid) {
  if (!inner.subset_of(outer)) throw input_error("NotNested", "inner polygon is not inside outer");
  return compare_subdomains(inner, OuterDomain::polygon(outer), x, tol, grid);
}

// ---------------------------------------------------------------------------
// Transfer

TransferResult transfer_measure(const WeakMeasure& mu0, const Connector& conn,
                                const PointOracle& x_oracle, const TestFunction& f, int n,
                                TransferOptions opts) {
  const RationalPoint x = x_oracle(24);
  const HarnackBound hb = harnack_chain(conn, x, conn.x0);
  TransferResult res;
  res.tau = hb.tau;
  res.chain_steps = hb.exponent;
  // Smallest k > n + 1 with 2^-n > 2^{2-k} C.
  int k = n + 2;
  while (!(pow2(-n) > pow2(2 - k) * hb.tau)) ++k;
  res.k = k;
  res.harnack_term = hb.tau * pow2(-k);

  SearchOptions so;
  so.max_net_level = opts.max_net_level;
  so.budget = opts.search_budget;
  so.max_rank = opts.max_candidate_rank;
  so.grid = opts.grid;
  so.extra = {f};
  const SearchRecord rec = harmonic_approx_search(mu0, conn.x0, &conn.Q, k, so);
  res.net_level = rec.net_level;
  res.member_rank = rec.rank;
  res.member_cubes = rec.polygon.cube_count(rec.polygon.finest_leaf_rank());
  res.boundary_mass = rec.boundary_mass;

  PolygonSolver solver(rec.polygon, opts.grid);
  res.member_estimate = solver.integrate(x, f.evaluator(), pow2(-n - 1));
  res.value = res.member_estimate.value;
  res.error = pow2(-n);
  return res;
}

std::string connector_manifest(const Connector& conn, const HarnackBound& hb) {
  std::ostringstream os;
  os.precision(17);
  os << "# hmk connector v1\n";
  os << "ell " << conn.ell << "\n";
  os << "x0 " << conn.x0.to_string() << "\n";
  os << "x " << conn.x.to_string() << "\n";
  os << "gamma " << conn.gamma.size() << "\n";
  for (const auto& c : conn.gamma) os << "  " << c.rank << " " << c[0] << " " << c[1] << "\n";
  os << "harnack_base " << hb.base << "\n";
  os << "chain_rank " << hb.chain_rank << "\n";
  os << "steps " << hb.exponent << "\n";
  os << "tau " << hb.tau << "\n";
  os << "worst_exponent " << hb.worst_exponent << "\n";
  os << write_polygon(conn.Q);
  return os.str();
}

}  // namespace hmk
