#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hmk/error.hpp"
#include "hmk/gallery.hpp"

namespace hmk::gallery {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

// Nearest point of the circle arc c + R e^{it}, t in [t0, t0 + span].
double arc_distance(Complex w, double R, double t0, double span, Complex* nearest) {
  const double rho = std::abs(w);
  if (rho > 0 && wrap_2pi(std::arg(w) - t0) <= span) {
    if (nearest) *nearest = w * (R / rho);
    return std::abs(rho - R);
  }
  const Complex e0 = std::polar(R, t0), e1 = std::polar(R, t0 + span);
  const double d0 = std::abs(w - e0), d1 = std::abs(w - e1);
  if (nearest) *nearest = d0 <= d1 ? e0 : e1;
  return std::min(d0, d1);
}

double segment_distance(Complex w, Complex a, Complex b, Complex* nearest) {
  const Complex ab = b - a;
  const double len2 = std::norm(ab);
  double t = len2 > 0 ? ((w - a) * std::conj(ab)).real() / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Complex q = a + t * ab;
  if (nearest) *nearest = q;
  return std::abs(w - q);
}

struct Best {
  double d = INFINITY;
  Complex q;
  void take(double dd, Complex qq) {
    if (dd < d) {
      d = dd;
      q = qq;
    }
  }
};

double box_min_dist2(const DiskBox& b, Complex c) {
  const double dx = std::max({b.x0 - c.real(), 0.0, c.real() - b.x1});
  const double dy = std::max({b.y0 - c.imag(), 0.0, c.imag() - b.y1});
  return dx * dx + dy * dy;
}

double box_max_dist2(const DiskBox& b, Complex c) {
  const double dx = std::max(std::abs(b.x0 - c.real()), std::abs(b.x1 - c.real()));
  const double dy = std::max(std::abs(b.y0 - c.imag()), std::abs(b.y1 - c.imag()));
  return dx * dx + dy * dy;
}

bool annulus_may_meet(const DiskBox& b, Complex c, double r0, double r1) {
  return box_min_dist2(b, c) <= r1 * r1 && box_max_dist2(b, c) >= r0 * r0;
}

}  // namespace

Vec2 to_square(Complex z) { return {(z.real() + 1) / 2, (z.imag() + 1) / 2}; }
Complex to_disk(Vec2 p) { return {2 * p.x - 1, 2 * p.y - 1}; }

// ---------------------------------------------------------------------------
// Shapes

Shape Shape::disk(Complex c, double r, std::string label) {
  Shape s;
  s.kind_ = Kind::Disk;
  s.c_ = c;
  s.r1_ = r;
  s.label_ = std::move(label);
  return s;
}

Shape Shape::arc(Complex c, double r, double gap_dir, double gap_half, std::string label) {
  Shape s;
  s.kind_ = Kind::Arc;
  s.c_ = c;
  s.r0_ = s.r1_ = r;
  s.a_ = gap_dir;
  s.b_ = gap_half;
  s.label_ = std::move(label);
  return s;
}

Shape Shape::sector(Complex c, double r0, double r1, double a0, double a1, std::string label) {
  if (!(a0 < a1) || !(0 <= r0 && r0 < r1))
    throw input_error("InvalidShape", "sector needs a0 < a1 and 0 <= r0 < r1");
  Shape s;
  s.kind_ = Kind::Sector;
  s.c_ = c;
  s.r0_ = r0;
  s.r1_ = r1;
  s.a_ = a0;
  s.b_ = a1;
  s.label_ = std::move(label);
  return s;
}

Shape Shape::slit_annulus(Complex c, double r0, double r1, double d, std::string label) {
  if (!(0 < r0 && r0 < r1 && 0 <= d && d < r0))
    throw input_error("InvalidShape", "slit annulus needs 0 <= d < r0 < r1");
  Shape s;
  s.kind_ = Kind::SlitAnnulus;
  s.c_ = c;
  s.r0_ = r0;
  s.r1_ = r1;
  s.a_ = d;
  s.label_ = std::move(label);
  return s;
}

Shape Shape::strip(double x0, double h, std::string label) {
  Shape s;
  s.kind_ = Kind::Strip;
  s.c_ = {x0, 0};
  s.a_ = h;
  s.label_ = std::move(label);
  return s;
}

bool Shape::contains(Complex z) const {
  const Complex w = z - c_;
  const double rho = std::abs(w);
  switch (kind_) {
    case Kind::Disk:
      return rho <= r1_;
    case Kind::Arc:
      return rho == r1_ && std::abs(std::remainder(std::arg(w) - a_, 2 * kPi)) >= b_;
    case Kind::Sector: {
      if (rho < r0_ || rho > r1_) return false;
      if (rho == 0) return true;
      const double t = std::arg(w);
      return (a_ <= t && t <= b_) || (a_ <= t + 2 * kPi && t + 2 * kPi <= b_);
    }
    case Kind::SlitAnnulus:
      return r0_ <= rho && rho <= r1_ && std::abs(w.imag()) >= a_;
    case Kind::Strip:
      return z.real() >= c_.real() && std::abs(z.imag()) <= a_;
  }
  return false;
}

double Shape::distance(Complex z, Complex* nearest) const {
  const Complex w = z - c_;
  Best best;
  Complex q;
  switch (kind_) {
    case Kind::Disk: {
      const double rho = std::abs(w);
      if (rho <= r1_) {
        if (nearest) *nearest = z;
        return 0;
      }
      if (nearest) *nearest = c_ + w * (r1_ / rho);
      return rho - r1_;
    }
    case Kind::Arc: {
      const double d = arc_distance(w, r1_, a_ + b_, 2 * kPi - 2 * b_, &q);
      if (nearest) *nearest = c_ + q;
      return d;
    }
    case Kind::Sector: {
      if (contains(z)) {
        if (nearest) *nearest = z;
        return 0;
      }
      const double span = b_ - a_;
      best.take(arc_distance(w, r1_, a_, span, &q), q);
      if (r0_ > 0) best.take(arc_distance(w, r0_, a_, span, &q), q);
      if (span < 2 * kPi) {
        best.take(segment_distance(w, std::polar(r0_, a_), std::polar(r1_, a_), &q), q);
        best.take(segment_distance(w, std::polar(r0_, b_), std::polar(r1_, b_), &q), q);
      }
      break;
    }
    case Kind::SlitAnnulus: {
      if (contains(z)) {
        if (nearest) *nearest = z;
        return 0;
      }
      // Upper piece; the lower one by reflection.
      const double d = a_;
      const double t1 = std::asin(d / r1_), t0 = std::asin(d / r0_);
      const double x1 = std::sqrt(r1_ * r1_ - d * d), x0 = std::sqrt(r0_ * r0_ - d * d);
      for (int side : {1, -1}) {
        const Complex v = side > 0 ? w : std::conj(w);
        Best b;
        b.take(arc_distance(v, r1_, t1, kPi - 2 * t1, &q), q);
        b.take(arc_distance(v, r0_, t0, kPi - 2 * t0, &q), q);
        b.take(segment_distance(v, {x0, d}, {x1, d}, &q), q);
        b.take(segment_distance(v, {-x1, d}, {-x0, d}, &q), q);
        best.take(b.d, side > 0 ? b.q : std::conj(b.q));
      }
      break;
    }
    case Kind::Strip: {
      const double x = std::max(z.real(), c_.real());
      const double y = std::clamp(z.imag(), -a_, a_);
      best.take(std::abs(z - Complex(x, y)), Complex(x, y) - c_);
      break;
    }
  }
  if (nearest) *nearest = c_ + best.q;
  return best.d;
}

bool Shape::may_meet(const DiskBox& b) const {
  switch (kind_) {
    case Kind::Disk:
      return box_min_dist2(b, c_) <= r1_ * r1_;
    case Kind::Arc:
    case Kind::SlitAnnulus:
      return annulus_may_meet(b, c_, r0_, r1_);
    case Kind::Sector: {
      // Half-plane sectors are clipped exactly; others use the annulus.
      if (a_ == -kPi / 2 && b_ == kPi / 2) {
        if (b.x1 < c_.real()) return false;
        DiskBox clip = b;
        clip.x0 = std::max(b.x0, c_.real());
        return annulus_may_meet(clip, c_, r0_, r1_);
      }
      return annulus_may_meet(b, c_, r0_, r1_);
    }
    case Kind::Strip:
      return b.x1 >= c_.real() && b.y0 <= a_ && b.y1 >= -a_;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Regions

bool Region::contains(Complex z) const {
  if (!(std::norm(z) < 1)) return false;
  return std::none_of(removed_.begin(), removed_.end(), [&](const Shape& s) { return s.contains(z); });
}

double Region::distance(Complex z, Complex* nearest) const {
  const double rho = std::abs(z);
  double best = 1 - rho;
  if (nearest) *nearest = rho > 0 ? z / rho : Complex(1, 0);
  Complex q;
  for (const auto& s : removed_) {
    const double d = s.distance(z, &q);
    if (d < best) {
      best = d;
      if (nearest) *nearest = q;
    }
  }
  return std::max(best, 0.0);
}

bool Region::box_inside(const DiskBox& b) const {
  if (!(box_max_dist2(b, {0, 0}) < 1)) return false;
  return std::none_of(removed_.begin(), removed_.end(), [&](const Shape& s) { return s.may_meet(b); });
}

double SquareField::distance(Vec2 p, Vec2* nearest) const {
  Complex q;
  const double d = region_.distance(to_disk(p), &q);
  if (nearest) *nearest = to_square(q);
  return d / 2;
}

DyadicPolygon rasterize(const Region& r, int rank, Complex ref, int max_rank) {
  if (rank < 1 || rank > max_rank)
    throw input_error("RankBudget", "rasterization rank outside 1.." + std::to_string(max_rank));
  std::vector<DyadicCube> leaves;
  auto box_of = [](const DyadicCube& c) {
    return DiskBox{2 * c.lower(0).to_double() - 1, 2 * c.lower(1).to_double() - 1,
                   2 * c.upper(0).to_double() - 1, 2 * c.upper(1).to_double() - 1};
  };
  std::vector<DyadicCube> stack{DyadicCube(0, 0, 0)};
  while (!stack.empty()) {
    const DyadicCube c = stack.back();
    stack.pop_back();
    const DiskBox b = box_of(c);
    if (box_min_dist2(b, {0, 0}) >= 1) continue;
    if (r.box_inside(b)) {
      leaves.push_back(c);
      continue;
    }
    if (c.rank == rank) continue;
    for (const auto& ch : c.children()) stack.push_back(ch);
  }
  if (leaves.empty()) throw numeric_error("EmptyRaster", "no cube of this rank fits the region");
  const DyadicPolygon all = DyadicPolygon::from_leaves(2, rank, leaves, false);
  const Vec2 p = to_square(ref);
  auto comp = leaf_component(all, RationalPoint::from_doubles(p.x, p.y, rank + 20));
  if (comp.empty()) throw numeric_error("EmptyRaster", "reference point is not in the raster");
  return DyadicPolygon::from_leaves(2, rank, std::move(comp), true);
}

// ---------------------------------------------------------------------------
// Closed forms

double disk_hole_measure(double p, double r, Complex z) {
  const double u = p - r, v = p + r;
  if (!(std::abs(u) < 1 && std::abs(v) < 1 && r > 0))
    throw input_error("DomainOfValidity", "hole must lie inside the unit disk");
  // Real c with phi_c(z) = (z - c)/(1 - c z) sending both circles to
  // concentric ones: c^2 (u+v) - 2c (1+uv) + (u+v) = 0.
  double c = 0;
  if (u + v != 0) c = ((1 + u * v) - std::sqrt((1 - u * u) * (1 - v * v))) / (u + v);
  auto phi = [c](Complex w) { return (w - c) / (1.0 - c * w); };
  const double rho = std::abs(phi(Complex(v, 0)));
  const double m = std::abs(phi(z));
  if (m <= rho) return 1.0;
  return std::log(m) / std::log(rho);
}

double poisson_disk(Complex z, double theta) {
  return (1 - std::norm(z)) / std::norm(std::polar(1.0, theta) - z) / (2 * kPi);
}

// ---------------------------------------------------------------------------
// SVG

std::string render_svg(const DyadicPolygon* raster, const Region& region, const std::string& title,
                       int px) {
  std::ostringstream os;
  os.precision(10);
  const double s = px;
  // Square frame with y up.
  auto X = [&](double x) { return x * s; };
  auto Y = [&](double y) { return (1 - y) * s; };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px + 24
     << "\" viewBox=\"0 -24 " << px << " " << px + 24 << "\">\n";
  os << "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
        "patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" "
        "stroke=\"#b03030\" stroke-width=\"2\"/></pattern></defs>\n";
  os << "<text x=\"4\" y=\"-6\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << px << "\" height=\"" << px
     << "\" fill=\"white\" stroke=\"#999\"/>\n";
  if (raster) {
    os << "<g fill=\"#9ec5e8\" stroke=\"none\">\n";
    for (const auto& c : raster->leaves()) {
      const double x0 = c.lower(0).to_double(), x1 = c.upper(0).to_double();
      const double y0 = c.lower(1).to_double(), y1 = c.upper(1).to_double();
      os << "<rect x=\"" << X(x0) << "\" y=\"" << Y(y1) << "\" width=\"" << X(x1) - X(x0)
         << "\" height=\"" << Y(y0) - Y(y1) << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "<circle cx=\"" << X(0.5) << "\" cy=\"" << Y(0.5) << "\" r=\"" << s / 2
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  // Removed sets: hatched, with a minimum drawn size so tiny ones stay visible.
  const double min_r = 2.0 / s;
  for (const auto& sh : region.removed()) {
    const Vec2 c = to_square(sh.center());
    const double r1 = std::max(sh.r1() / 2, min_r), r0 = sh.r0() / 2;
    switch (sh.kind()) {
      case Shape::Kind::Disk:
      case Shape::Kind::Arc:
      case Shape::Kind::SlitAnnulus:
        os << "<circle cx=\"" << X(c.x) << "\" cy=\"" << Y(c.y) << "\" r=\"" << r1 * s
           << "\" fill=\"url(#hatch)\" stroke=\"#b03030\"/>\n";
        if (r0 > min_r && sh.kind() == Shape::Kind::SlitAnnulus)
          os << "<circle cx=\"" << X(c.x) << "\" cy=\"" << Y(c.y) << "\" r=\"" << r0 * s
             << "\" fill=\"white\" stroke=\"#b03030\"/>\n";
        break;
      case Shape::Kind::Sector: {
        const int N = 64;
        os << "<path fill=\"url(#hatch)\" stroke=\"#b03030\" d=\"";
        for (int i = 0; i <= N; ++i) {
          const double t = sh.param_a() + (sh.param_b() - sh.param_a()) * i / N;
          const Vec2 p = to_square(sh.center() + std::polar(sh.r1(), t));
          os << (i ? " L " : "M ") << X(p.x) << " " << Y(p.y);
        }
        for (int i = N; i >= 0; --i) {
          const double t = sh.param_a() + (sh.param_b() - sh.param_a()) * i / N;
          const Vec2 p = to_square(sh.center() + std::polar(sh.r0(), t));
          os << " L " << X(p.x) << " " << Y(p.y);
        }
        os << " Z\"/>\n";
        break;
      }
      case Shape::Kind::Strip: {
        const double h = std::max(sh.param_a() / 2, min_r);
        os << "<rect x=\"" << X(c.x) << "\" y=\"" << Y(0.5 + h) << "\" width=\"" << X(1) - X(c.x)
           << "\" height=\"" << 2 * h * s << "\" fill=\"url(#hatch)\" stroke=\"#b03030\"/>\n";
        break;
      }
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hmk::gallery
