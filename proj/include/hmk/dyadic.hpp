#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace hmk {

/// Exact rational with a power-of-two denominator: mantissa * 2^-exponent.
///
/// Values are kept normalized (odd mantissa or zero, exponent >= 0), so two
/// Dyadic values are equal iff their fields are equal.
class Dyadic {
 public:
  constexpr Dyadic() = default;
  constexpr Dyadic(std::int64_t integer) : mant_(integer) {}  // NOLINT implicit
  static Dyadic from_parts(std::int64_t mantissa, int exponent);
  /// Largest dyadic with denominator 2^precision that is <= x.
  static Dyadic floor_of(double x, int precision);
  /// Nearest dyadic with denominator 2^precision.
  static Dyadic round_of(double x, int precision);

  std::int64_t mantissa() const { return mant_; }
  int exponent() const { return exp_; }
  double to_double() const;
  std::string to_string() const;

  Dyadic operator-() const { return from_parts(-mant_, exp_); }
  friend Dyadic operator+(const Dyadic& a, const Dyadic& b);
  friend Dyadic operator-(const Dyadic& a, const Dyadic& b) { return a + (-b); }
  friend Dyadic operator*(const Dyadic& a, const Dyadic& b);
  Dyadic& operator+=(const Dyadic& o) { return *this = *this + o; }
  Dyadic& operator-=(const Dyadic& o) { return *this = *this - o; }
  /// Exact division by 2^k.
  Dyadic shifted_down(int k) const { return from_parts(mant_, exp_ + k); }

  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);
  friend bool operator==(const Dyadic& a, const Dyadic& b) = default;

  /// floor(value * 2^rank) as an integer.
  std::int64_t floor_scaled(int rank) const;
  /// True when value * 2^rank is an integer.
  bool on_lattice(int rank) const { return exp_ <= rank; }

 private:
  std::int64_t mant_ = 0;
  int exp_ = 0;
};

Dyadic abs(const Dyadic& x);
Dyadic min(const Dyadic& a, const Dyadic& b);
Dyadic max(const Dyadic& a, const Dyadic& b);

struct DyadicInterval {
  Dyadic lo;
  Dyadic hi;
  Dyadic width() const { return hi - lo; }
  bool contains(const Dyadic& v) const { return lo <= v && v <= hi; }
};

/// Enclosure of sqrt(value) with both ends on the 2^-precision lattice.
/// Width is 0 when the root is exact at that precision, otherwise 2^-precision.
DyadicInterval sqrt_enclosure(const Dyadic& value, int precision);

inline constexpr int kMaxDim = 4;

/// Point of R^d with dyadic coordinates, 2 <= d <= kMaxDim.
struct RationalPoint {
  int dim = 2;
  std::array<Dyadic, kMaxDim> coords{};

  RationalPoint() = default;
  RationalPoint(Dyadic x, Dyadic y) : dim(2), coords{x, y} {}
  static RationalPoint zeros(int dim);
  static RationalPoint from_doubles(const double* xs, int dim, int precision);
  static RationalPoint from_doubles(double x, double y, int precision);

  const Dyadic& operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
  Dyadic& operator[](int i) { return coords[static_cast<std::size_t>(i)]; }
  double coord(int i) const { return (*this)[i].to_double(); }
  /// Smallest rank r such that every coordinate lies on the 2^-r lattice.
  int lattice_rank() const;
  std::string to_string() const;

  friend bool operator==(const RationalPoint& a, const RationalPoint& b);
  friend auto operator<=>(const RationalPoint& a, const RationalPoint& b) {
    for (int i = 0; i < kMaxDim; ++i) {
      if (auto c = a.coords[static_cast<std::size_t>(i)] <=> b.coords[static_cast<std::size_t>(i)];
          c != 0)
        return c;
    }
    return a.dim <=> b.dim;
  }
};

/// Exact squared Euclidean distance.
Dyadic squared_distance(const RationalPoint& a, const RationalPoint& b);

/// Oracle for a real point: query(n) is within 2^-n of the point.
class PointOracle {
 public:
  using Query = std::function<RationalPoint(int)>;
  explicit PointOracle(Query q) : query_(std::move(q)) {}
  static PointOracle exact(const RationalPoint& p);
  /// Oracle for a real point given in double precision; answers are rounded
  /// to the 2^-(n+1) lattice (exact beyond double resolution).
  static PointOracle of_doubles(double x, double y);

  RationalPoint operator()(int n) const { return query_(n); }
  /// Checks |q(n) - q(n+1)| < 2^-n + 2^-n-1 for n in [0, max_n).
  bool consistent_up_to(int max_n) const;

 private:
  Query query_;
};

}  // namespace hmk
