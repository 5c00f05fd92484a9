#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "hmk/error.hpp"
#include "hmk/geometry.hpp"

namespace hmk {

// ---------------------------------------------------------------------------
// Candidate enumeration

namespace {

bool cubes_connected(const std::vector<DyadicCube>& cubes) {
  if (cubes.empty()) return false;
  std::unordered_set<DyadicCube, CubeHash> pool(cubes.begin(), cubes.end());
  std::unordered_set<DyadicCube, CubeHash> seen{cubes.front()};
  std::vector<DyadicCube> stack{cubes.front()};
  while (!stack.empty()) {
    const DyadicCube c = stack.back();
    stack.pop_back();
    for (int l = 0; l < c.dim; ++l) {
      for (int s : {-1, 1}) {
        DyadicCube nb = c;
        nb.idx[static_cast<std::size_t>(l)] += s;
        if (pool.count(nb) && seen.insert(nb).second) stack.push_back(nb);
      }
    }
  }
  return seen.size() == pool.size();
}

std::vector<DyadicCube> all_cubes(int dim, int n) {
  const std::int64_t side = std::int64_t{1} << n;
  std::int64_t total = 1;
  for (int l = 0; l < dim; ++l) total *= side;
  std::vector<DyadicCube> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::int64_t t = 0; t < total; ++t) {
    DyadicCube c;
    c.rank = n;
    c.dim = dim;
    std::int64_t rem = t;
    for (int l = dim - 1; l >= 0; --l) {
      c.idx[static_cast<std::size_t>(l)] = rem % side;
      rem /= side;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

CandidateStream::CandidateStream(int n, const RationalPoint& x, const DyadicPolygon* q,
                                 Options opts)
    : n_(n), dim_(x.dim), opts_(std::move(opts)) {
  if (n < 0 || dim_ * n > 24) throw budget_error("AmbientExceeded", "candidate rank too large");
  for (int l = 0; l < dim_; ++l)
    if (!(Dyadic{} < x[l] && x[l] < Dyadic{1}))
      throw input_error("AmbientExceeded", "point outside the open ambient box");
  if (q && !q->empty() && q->rank() > n)
    throw input_error("RankTooSmall", "anchor polygon finer than candidate rank");

  std::set<DyadicCube> req;
  // Cubes whose closure contains x must all belong to the candidate.
  const DyadicCube home = DyadicCube::containing(x, n);
  const int corners = 1 << dim_;
  for (int mask = 0; mask < corners; ++mask) {
    DyadicCube c = home;
    bool ok = true;
    for (int l = 0; l < dim_; ++l) {
      if ((mask >> l) & 1) {
        if (!x[l].on_lattice(n)) {
          ok = false;
          break;
        }
        c.idx[static_cast<std::size_t>(l)] -= 1;
      }
    }
    if (ok) req.insert(c);
  }
  if (q && !q->empty())
    for (const auto& c : q->cubes_at(n)) req.insert(c);
  required_.assign(req.begin(), req.end());

  auto universe = all_cubes(dim_, n);
  if (opts_.allowed) {
    for (const auto& c : required_)
      if (!opts_.allowed(c)) done_ = true;  // no admissible candidate
    std::erase_if(universe, [&](const DyadicCube& c) {
      return !req.count(c) && !opts_.allowed(c);
    });
  }
  if (opts_.order == CandidateOrder::MaximalFirst) {
    all_ = universe;
    std::erase_if(universe, [&](const DyadicCube& c) { return req.count(c) > 0; });
  }
  universe_ = std::move(universe);
  required_flag_.resize(universe_.size());
  req_before_.resize(universe_.size() + 1);
  std::size_t acc = 0;
  for (std::size_t i = 0; i < universe_.size(); ++i) {
    req_before_[i] = acc;
    required_flag_[i] = req.count(universe_[i]) ? 1 : 0;
    acc += static_cast<std::size_t>(required_flag_[i]);
  }
  req_before_[universe_.size()] = acc;
}

bool CandidateStream::prefix_viable() const {
  if (opts_.order == CandidateOrder::MaximalFirst || stack_.empty()) return true;
  return req_in_stack_ - static_cast<std::size_t>(required_flag_[stack_.back()]) ==
         req_before_[stack_.back()];
}

bool CandidateStream::advance() {
  if (++visited_ > opts_.budget)
    throw budget_error("BudgetExceeded", "candidate enumeration budget exhausted");
  const std::size_t n = universe_.size();
  if (!started_) {
    started_ = true;
    if (opts_.order == CandidateOrder::MaximalFirst) return true;  // root: omit nothing
    if (n == 0) return false;
    stack_.push_back(0);
    req_in_stack_ += static_cast<std::size_t>(required_flag_[0]);
    return true;
  }
  if (prefix_viable()) {
    const std::size_t next = stack_.empty() ? 0 : stack_.back() + 1;
    if (next < n) {
      stack_.push_back(next);
      req_in_stack_ += static_cast<std::size_t>(required_flag_[next]);
      return true;
    }
  }
  while (!stack_.empty()) {
    const std::size_t top = stack_.back();
    req_in_stack_ -= static_cast<std::size_t>(required_flag_[top]);
    const bool sibling_ok = opts_.order == CandidateOrder::MaximalFirst ||
                            req_in_stack_ == req_before_[std::min(top + 1, n)];
    if (top + 1 < n && sibling_ok) {
      stack_.back() = top + 1;
      req_in_stack_ += static_cast<std::size_t>(required_flag_[top + 1]);
      return true;
    }
    stack_.pop_back();
  }
  return false;
}

std::optional<DyadicPolygon> CandidateStream::materialize() const {
  std::vector<DyadicCube> cubes;
  if (opts_.order == CandidateOrder::Lexicographic) {
    if (req_in_stack_ != required_.size()) return std::nullopt;
    for (auto i : stack_) cubes.push_back(universe_[i]);
  } else {
    std::unordered_set<DyadicCube, CubeHash> omitted;
    for (auto i : stack_) omitted.insert(universe_[i]);
    for (const auto& c : all_)
      if (!omitted.count(c)) cubes.push_back(c);
  }
  if (!cubes_connected(cubes)) return std::nullopt;
  return DyadicPolygon::from_leaves(dim_, n_, std::move(cubes), false);
}

std::optional<DyadicPolygon> CandidateStream::next() {
  if (done_) return std::nullopt;
  while (advance()) {
    if (auto p = materialize()) return p;
  }
  done_ = true;
  return std::nullopt;
}

CandidateStream enumerate_candidates(int n, const RationalPoint& x, const DyadicPolygon* q) {
  return CandidateStream(n, x, q);
}

// ---------------------------------------------------------------------------
// Enumerations

DomainEnumeration DomainEnumeration::from_list(EnumerationKind kind,
                                               std::vector<DyadicPolygon> polys) {
  auto shared = std::make_shared<const std::vector<DyadicPolygon>>(std::move(polys));
  return DomainEnumeration(kind, [shared](std::uint64_t k) -> std::optional<DyadicPolygon> {
    if (k == 0 || k > shared->size()) return std::nullopt;
    return (*shared)[k - 1];
  });
}

Dyadic farthest_squared(const RationalPoint& x, const DyadicPolygon& p) {
  Dyadic best;
  for (const auto& leaf : p.leaves()) {
    Dyadic s;
    for (int l = 0; l < x.dim; ++l) {
      const Dyadic a = abs(leaf.lower(l) - x[l]);
      const Dyadic b = abs(leaf.upper(l) - x[l]);
      const Dyadic d = max(a, b);
      s += d * d;
    }
    best = max(best, s);
  }
  return best;
}

Dyadic distance_to_enumerated_boundary(const PointOracle& x_oracle,
                                       const DomainEnumeration& interior,
                                       const DomainEnumeration& boundary, int n,
                                       std::uint64_t budget) {
  const int prec = n + 4;
  const RationalPoint x = x_oracle(prec);
  const Dyadic slack = Dyadic::from_parts(1, prec);
  const Dyadic target = Dyadic::from_parts(2, n) - slack - slack - Dyadic::from_parts(1, prec + 2);

  std::optional<DyadicPolygon> reach;  // chained union containing x
  std::vector<DyadicPolygon> pending;  // interior polygons not yet chained
  std::optional<Dyadic> lo_sq, hi_sq;
  bool interior_done = false, boundary_done = false;

  for (std::uint64_t k = 1; k <= budget; ++k) {
    if (!interior_done) {
      if (auto p = interior(k)) {
        if (!reach || !p->subset_of(*reach)) {
          pending.push_back(std::move(*p));
          bool grew = true;
          while (grew) {
            grew = false;
            for (auto it = pending.begin(); it != pending.end(); ++it) {
              if (!reach) {
                if (!it->contains_interior(x)) continue;
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
          }
          if (reach) lo_sq = boundary_distance_squared(x, *reach);
        }
      } else {
        interior_done = true;
      }
    }
    if (!boundary_done) {
      if (auto b = boundary(k)) {
        const Dyadic f = farthest_squared(x, *b);
        if (!hi_sq || f < *hi_sq) hi_sq = f;
      } else {
        boundary_done = true;
      }
    }
    if (lo_sq && hi_sq) {
      const Dyadic lo = sqrt_enclosure(*lo_sq, prec + 2).lo - slack;
      const Dyadic hi = sqrt_enclosure(*hi_sq, prec + 2).hi + slack;
      if (hi - lo < target) return (lo + hi).shifted_down(1);
    }
    if (interior_done && boundary_done) break;
  }
  throw budget_error("BudgetExceeded", "distance search did not converge");
}

std::vector<RationalPoint> boundary_net(const CompactSetHandles& k, int n, std::uint64_t budget) {
  struct Candidate {
    Dyadic side;
    RationalPoint center;
  };
  std::vector<Candidate> candidates;
  DyadicPolygon comp;  // union of complement polygons (not necessarily connected)
  int dim = 2;
  const int cell_rank = n + 3;
  const Dyadic max_side = Dyadic::from_parts(1, n + 2);
  const Dyadic reach_sq = Dyadic::from_parts(1, 2 * (n + 1));

  auto try_finish = [&]() -> std::optional<std::vector<RationalPoint>> {
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.side != b.side) return a.side < b.side;
                return a.center < b.center;
              });
    // Buckets of side 2^-(n+1), keyed by candidate centre.
    std::map<std::array<std::int64_t, kMaxDim>, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      std::array<std::int64_t, kMaxDim> key{};
      for (int l = 0; l < dim; ++l)
        key[static_cast<std::size_t>(l)] = candidates[i].center[l].floor_scaled(n + 1);
      buckets[key].push_back(i);
    }
    std::vector<RationalPoint> chosen;
    const std::int64_t side = std::int64_t{1} << cell_rank;
    DyadicCube cell;
    cell.rank = cell_rank;
    cell.dim = dim;
    std::int64_t total = 1;
    for (int l = 0; l < dim; ++l) total *= side;
    for (std::int64_t t = 0; t < total; ++t) {
      std::int64_t rem = t;
      for (int l = dim - 1; l >= 0; --l) {
        cell.idx[static_cast<std::size_t>(l)] = rem % side;
        rem /= side;
      }
      // Complement polygons are read as relatively open in [0,1]^d, so
      // neighbours outside the ambient box do not block certification.
      bool certified = !comp.empty();
      if (certified) {
        int nb_total = 1;
        for (int l = 0; l < dim; ++l) nb_total *= 3;
        for (int u = 0; u < nb_total && certified; ++u) {
          DyadicCube nb = cell;
          int r = u;
          for (int l = 0; l < dim; ++l) {
            nb.idx[static_cast<std::size_t>(l)] += r % 3 - 1;
            r /= 3;
          }
          if (!nb.in_unit_box()) continue;
          certified = comp.coverage(nb) == DyadicPolygon::Coverage::Full;
        }
      }
      if (certified) continue;
      DyadicBox box;
      box.dim = dim;
      for (int l = 0; l < dim; ++l) {
        box.lo[static_cast<std::size_t>(l)] = cell.lower(l);
        box.hi[static_cast<std::size_t>(l)] = cell.upper(l);
      }
      bool covered = false;
      for (const auto& q : chosen)
        if (box.squared_distance_to(q) <= reach_sq) {
          covered = true;
          break;
        }
      if (covered) continue;
      std::optional<std::size_t> pick;
      int nb_total = 1;
      for (int l = 0; l < dim; ++l) nb_total *= 3;
      for (int u = 0; u < nb_total; ++u) {
        std::array<std::int64_t, kMaxDim> key{};
        int r = u;
        for (int l = 0; l < dim; ++l) {
          key[static_cast<std::size_t>(l)] = (cell[l] >> 2) + r % 3 - 1;
          r /= 3;
        }
        auto it = buckets.find(key);
        if (it == buckets.end()) continue;
        for (auto i : it->second) {
          if (pick && *pick < i) break;
          if (box.squared_distance_to(candidates[i].center) <= reach_sq) {
            pick = i;
            break;
          }
        }
      }
      if (!pick) return std::nullopt;
      chosen.push_back(candidates[*pick].center);
    }
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    return chosen;
  };

  std::uint64_t next_check = 1;
  bool comp_done = false, int_done = false;
  for (std::uint64_t i = 1; i <= budget; ++i) {
    if (!comp_done) {
      if (auto p = k.complement(i)) {
        dim = p->dim();
        if (comp.empty()) {
          comp = *p;
        } else if (!p->subset_of(comp)) {
          std::vector<DyadicCube> leaves = comp.leaves();
          leaves.insert(leaves.end(), p->leaves().begin(), p->leaves().end());
          comp = DyadicPolygon::from_leaves(dim, std::max(comp.rank(), p->rank()),
                                            std::move(leaves), false);
        }
      } else {
        comp_done = true;
      }
    }
    if (!int_done) {
      if (auto p = k.intersecting(i)) {
        dim = p->dim();
        std::array<Dyadic, kMaxDim> lo{}, hi{};
        bool first = true;
        for (const auto& leaf : p->leaves()) {
          for (int l = 0; l < dim; ++l) {
            const auto L = static_cast<std::size_t>(l);
            lo[L] = first ? leaf.lower(l) : min(lo[L], leaf.lower(l));
            hi[L] = first ? leaf.upper(l) : max(hi[L], leaf.upper(l));
          }
          first = false;
        }
        Dyadic side;
        RationalPoint c = RationalPoint::zeros(dim);
        for (int l = 0; l < dim; ++l) {
          const auto L = static_cast<std::size_t>(l);
          side = max(side, hi[L] - lo[L]);
          c[l] = (lo[L] + hi[L]).shifted_down(1);
        }
        if (side <= max_side) candidates.push_back({side, c});
      } else {
        int_done = true;
      }
    }
    if (i >= next_check || (comp_done && int_done)) {
      if (auto net = try_finish()) return *net;
      next_check = 2 * i;
      if (comp_done && int_done) break;
    }
  }
  throw budget_error("BudgetExceeded", "boundary net did not converge");
}

// ---------------------------------------------------------------------------
// File format

std::string write_polygon(const DyadicPolygon& p) {
  int m = p.rank();
  if (p.cube_count(m) > (1u << 22)) m = p.finest_leaf_rank();
  std::ostringstream os;
  os << "dyadic-polygon v1 d=" << p.dim() << " rank=" << m << '\n';
  for (const auto& c : p.cubes_at(m, std::size_t{1} << 26)) {
    for (int l = 0; l < p.dim(); ++l) os << (l ? " " : "") << c[l];
    os << '\n';
  }
  return os.str();
}

DyadicPolygon read_polygon(const std::string& text) {
  std::istringstream is(text);
  std::string magic, version, dtok, rtok;
  if (!(is >> magic >> version >> dtok >> rtok) || magic != "dyadic-polygon" || version != "v1" ||
      dtok.rfind("d=", 0) != 0 || rtok.rfind("rank=", 0) != 0)
    throw input_error("ParseError", "bad dyadic-polygon header");
  int dim = 0, rank = 0;
  try {
    dim = std::stoi(dtok.substr(2));
    rank = std::stoi(rtok.substr(5));
  } catch (const std::exception&) {
    throw input_error("ParseError", "bad header numbers");
  }
  if (dim < 2 || dim > kMaxDim || rank < 0 || rank > 40)
    throw input_error("ParseError", "header values out of range");
  std::vector<DyadicCube> cubes;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    DyadicCube c;
    c.rank = rank;
    c.dim = dim;
    for (int l = 0; l < dim; ++l)
      if (!(ls >> c.idx[static_cast<std::size_t>(l)]))
        throw input_error("ParseError", "bad cube line: " + line);
    std::string extra;
    if (ls >> extra) throw input_error("ParseError", "trailing tokens: " + line);
    cubes.push_back(c);
  }
  return DyadicPolygon::from_cubes(dim, rank, cubes);
}

DyadicPolygon load_polygon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("ParseError", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return read_polygon(ss.str());
}

void save_polygon(const DyadicPolygon& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw input_error("IoError", "cannot write " + path.string());
  out << write_polygon(p);
}

namespace {
std::string enumeration_name(std::uint64_t k) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << k << ".dp";
  return os.str();
}
}  // namespace

DomainEnumeration load_enumeration(const std::filesystem::path& dir, EnumerationKind kind) {
  if (!std::filesystem::is_directory(dir))
    throw input_error("ParseError", "not a directory: " + dir.string());
  std::vector<DyadicPolygon> polys;
  for (std::uint64_t k = 1;; ++k) {
    const auto path = dir / enumeration_name(k);
    if (!std::filesystem::exists(path)) break;
    polys.push_back(load_polygon(path));
  }
  if (polys.empty()) throw input_error("ParseError", "empty enumeration: " + dir.string());
  return DomainEnumeration::from_list(kind, std::move(polys));
}

void save_enumeration(const std::vector<DyadicPolygon>& polys, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < polys.size(); ++i) save_polygon(polys[i], dir / enumeration_name(i + 1));
}

std::vector<DyadicCube> leaf_component(const DyadicPolygon& all, const RationalPoint& x) {
  const DyadicCube* start = nullptr;
  for (const auto& leaf : all.leaves()) {
    bool in = true;
    for (int l = 0; l < 2 && in; ++l) in = leaf.lower(l) <= x[l] && x[l] < leaf.upper(l);
    if (in) {
      start = &leaf;
      break;
    }
  }
  if (!start) return {};
  std::unordered_set<DyadicCube, CubeHash> seen{*start};
  std::vector<DyadicCube> stack{*start}, out;
  while (!stack.empty()) {
    const DyadicCube c = stack.back();
    stack.pop_back();
    out.push_back(c);
    for (const auto& nb : all.adjacent_leaves(c))
      if (seen.insert(nb).second) stack.push_back(nb);
  }
  return out;
}

}  // namespace hmk
