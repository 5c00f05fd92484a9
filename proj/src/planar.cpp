#include "hmk/planar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hmk/error.hpp"

namespace hmk {

Vec2 closest_on_segment(const Segment& s, Vec2 p) {
  const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return {s.a.x + t * dx, s.a.y + t * dy};
}

SegmentIndex::SegmentIndex(std::vector<Segment> segs, int buckets)
    : segs_(std::move(segs)), g_(std::max(1, buckets)) {
  if (segs_.empty()) throw input_error("EmptyBoundary", "segment index needs segments");
  double x0 = segs_[0].a.x, x1 = x0, y0 = segs_[0].a.y, y1 = y0;
  for (const auto& s : segs_) {
    x0 = std::min({x0, s.a.x, s.b.x});
    x1 = std::max({x1, s.a.x, s.b.x});
    y0 = std::min({y0, s.a.y, s.b.y});
    y1 = std::max({y1, s.a.y, s.b.y});
  }
  x0_ = x0;
  y0_ = y0;
  cell_ = std::max({x1 - x0, y1 - y0, 1e-12}) / g_;
  buckets_.resize(static_cast<std::size_t>(g_) * static_cast<std::size_t>(g_));
  auto clampi = [&](double v) { return std::clamp(static_cast<int>(std::floor(v)), 0, g_ - 1); };
  for (std::uint32_t k = 0; k < segs_.size(); ++k) {
    const auto& s = segs_[k];
    const int i0 = clampi((std::min(s.a.x, s.b.x) - x0_) / cell_);
    const int i1 = clampi((std::max(s.a.x, s.b.x) - x0_) / cell_);
    const int j0 = clampi((std::min(s.a.y, s.b.y) - y0_) / cell_);
    const int j1 = clampi((std::max(s.a.y, s.b.y) - y0_) / cell_);
    // Segments are axis-parallel, so the bounding range is exact.
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        buckets_[static_cast<std::size_t>(i) * static_cast<std::size_t>(g_) +
                 static_cast<std::size_t>(j)]
            .push_back(k);
  }
}

double SegmentIndex::distance(Vec2 p, Vec2* nearest) const {
  const int ci = static_cast<int>(std::floor((p.x - x0_) / cell_));
  const int cj = static_cast<int>(std::floor((p.y - y0_) / cell_));
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_pt{};
  auto scan = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= g_ || j >= g_) return;
    for (auto k : buckets_[static_cast<std::size_t>(i) * static_cast<std::size_t>(g_) +
                           static_cast<std::size_t>(j)]) {
      const Vec2 q = closest_on_segment(segs_[k], p);
      const double d = std::hypot(q.x - p.x, q.y - p.y);
      if (d < best) {
        best = d;
        best_pt = q;
      }
    }
  };
  // Ring r holds cells at Chebyshev distance r from the query cell; every
  // point in ring r+1 or beyond is at least r*cell_ away.
  for (int r = 0; r <= 2 * g_ + 2; ++r) {
    // Distance from p to the outside of the (2r-1)-block around its cell.
    const double reach = (r - 1) * cell_;
    if (best <= reach) break;
    if (r == 0) {
      scan(ci, cj);
      continue;
    }
    for (int t = -r; t <= r; ++t) {
      scan(ci + t, cj - r);
      scan(ci + t, cj + r);
      if (t != -r && t != r) {
        scan(ci - r, cj + t);
        scan(ci + r, cj + t);
      }
    }
  }
  if (!std::isfinite(best)) {
    for (const auto& s : segs_) {
      const Vec2 q = closest_on_segment(s, p);
      const double d = std::hypot(q.x - p.x, q.y - p.y);
      if (d < best) {
        best = d;
        best_pt = q;
      }
    }
  }
  if (nearest) *nearest = best_pt;
  return best;
}

std::vector<DyadicBox> polygon_outline_exact(const DyadicPolygon& p) {
  if (p.dim() != 2) throw input_error("DimensionMismatch", "outline needs a planar polygon");
  // axis: the coordinate that varies along the face.
  std::map<std::pair<int, Dyadic>, std::vector<std::pair<Dyadic, Dyadic>>> lines;
  for (const auto& f : p.boundary_faces()) {
    const int fixed = f.lo[0] == f.hi[0] ? 0 : 1;
    const int along = 1 - fixed;
    lines[{fixed, f.lo[static_cast<std::size_t>(fixed)]}].push_back(
        {f.lo[static_cast<std::size_t>(along)], f.hi[static_cast<std::size_t>(along)]});
  }
  std::vector<DyadicBox> out;
  for (auto& [key, spans] : lines) {
    std::sort(spans.begin(), spans.end());
    const auto fixed = static_cast<std::size_t>(key.first);
    const auto along = 1 - fixed;
    auto emit = [&](const Dyadic& a, const Dyadic& b) {
      DyadicBox box;
      box.lo[fixed] = box.hi[fixed] = key.second;
      box.lo[along] = a;
      box.hi[along] = b;
      out.push_back(box);
    };
    Dyadic a = spans[0].first, b = spans[0].second;
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i].first <= b) {
        b = max(b, spans[i].second);
      } else {
        emit(a, b);
        a = spans[i].first;
        b = spans[i].second;
      }
    }
    emit(a, b);
  }
  return out;
}

std::vector<Segment> polygon_outline(const DyadicPolygon& p) {
  std::vector<Segment> segs;
  for (const auto& b : polygon_outline_exact(p))
    segs.push_back({{b.lo[0].to_double(), b.lo[1].to_double()},
                    {b.hi[0].to_double(), b.hi[1].to_double()}});
  return segs;
}

std::shared_ptr<const SegmentIndex> polygon_boundary_index(const DyadicPolygon& p) {
  auto segs = polygon_outline(p);
  const int g = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(segs.size()))) * 2, 8, 512);
  return std::make_shared<SegmentIndex>(std::move(segs), g);
}

}  // namespace hmk
