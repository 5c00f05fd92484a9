#pragma once

#include <array>
#include <memory>
#include <vector>

#include "hmk/geometry.hpp"

namespace hmk {

struct Vec2 {
  double x = 0;
  double y = 0;
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

/// Closest point on a segment.
Vec2 closest_on_segment(const Segment& s, Vec2 p);

/// Unsigned distance to a closed boundary, with the nearest boundary point.
class DistanceField {
 public:
  virtual ~DistanceField() = default;
  virtual double distance(Vec2 p, Vec2* nearest = nullptr) const = 0;
};

/// Bucketed segment set answering exact (double) nearest-segment queries.
class SegmentIndex : public DistanceField {
 public:
  explicit SegmentIndex(std::vector<Segment> segs, int buckets = 64);
  double distance(Vec2 p, Vec2* nearest = nullptr) const override;
  const std::vector<Segment>& segments() const { return segs_; }

 private:
  std::vector<Segment> segs_;
  int g_;
  double x0_, y0_, cell_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

/// Maximal straight boundary segments of a planar polygon (collinear face
/// pieces merged).
std::vector<Segment> polygon_outline(const DyadicPolygon& p);
std::vector<DyadicBox> polygon_outline_exact(const DyadicPolygon& p);

/// Boundary of a polygon as a DistanceField.
std::shared_ptr<const SegmentIndex> polygon_boundary_index(const DyadicPolygon& p);

}  // namespace hmk
