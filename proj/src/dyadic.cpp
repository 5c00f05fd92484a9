#include "hmk/dyadic.hpp"

#include <cmath>
#include <sstream>

#include "hmk/error.hpp"

namespace hmk {

namespace {

using i128 = __int128;
using u128 = unsigned __int128;

constexpr int kMaxExponent = 120;

std::int64_t checked_narrow(i128 v) {
  if (v > INT64_MAX || v < INT64_MIN)
    throw numeric_error("DyadicOverflow", "mantissa exceeds 64 bits");
  return static_cast<std::int64_t>(v);
}

Dyadic from_wide(i128 mant, int exp) {
  if (mant == 0) return Dyadic{};
  while (exp > 0 && (mant & 1) == 0) {
    mant >>= 1;
    --exp;
  }
  return Dyadic::from_parts(checked_narrow(mant), exp);
}

u128 isqrt(u128 n) {
  if (n == 0) return 0;
  auto x = static_cast<u128>(std::sqrt(static_cast<long double>(n)));
  while (x * x > n) --x;
  while ((x + 1) * (x + 1) <= n) ++x;
  return x;
}

}  // namespace

Dyadic Dyadic::from_parts(std::int64_t mantissa, int exponent) {
  Dyadic d;
  if (mantissa == 0) return d;
  while (exponent < 0) {
    if (mantissa > INT64_MAX / 2 || mantissa < INT64_MIN / 2)
      throw numeric_error("DyadicOverflow", "integer part exceeds 64 bits");
    mantissa *= 2;
    ++exponent;
  }
  while (exponent > 0 && (mantissa & 1) == 0) {
    mantissa /= 2;
    --exponent;
  }
  if (exponent > kMaxExponent)
    throw numeric_error("DyadicOverflow", "denominator exceeds 2^120");
  d.mant_ = mantissa;
  d.exp_ = exponent;
  return d;
}

Dyadic Dyadic::floor_of(double x, int precision) {
  const double scaled = std::floor(std::ldexp(x, precision));
  return from_parts(static_cast<std::int64_t>(scaled), precision);
}

Dyadic Dyadic::round_of(double x, int precision) {
  const double scaled = std::nearbyint(std::ldexp(x, precision));
  return from_parts(static_cast<std::int64_t>(scaled), precision);
}

double Dyadic::to_double() const { return std::ldexp(static_cast<double>(mant_), -exp_); }

std::string Dyadic::to_string() const {
  if (exp_ == 0) return std::to_string(mant_);
  return std::to_string(mant_) + "/2^" + std::to_string(exp_);
}

Dyadic operator+(const Dyadic& a, const Dyadic& b) {
  const int e = std::max(a.exp_, b.exp_);
  const i128 ma = static_cast<i128>(a.mant_) << (e - a.exp_);
  const i128 mb = static_cast<i128>(b.mant_) << (e - b.exp_);
  return from_wide(ma + mb, e);
}

Dyadic operator*(const Dyadic& a, const Dyadic& b) {
  return from_wide(static_cast<i128>(a.mant_) * b.mant_, a.exp_ + b.exp_);
}

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
  const int e = std::max(a.exp_, b.exp_);
  const i128 ma = static_cast<i128>(a.mant_) << (e - a.exp_);
  const i128 mb = static_cast<i128>(b.mant_) << (e - b.exp_);
  if (ma < mb) return std::strong_ordering::less;
  if (ma > mb) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::int64_t Dyadic::floor_scaled(int rank) const {
  if (exp_ <= rank) return checked_narrow(static_cast<i128>(mant_) << (rank - exp_));
  const int shift = exp_ - rank;
  if (shift >= 63) return mant_ < 0 ? -1 : 0;
  // Arithmetic shift rounds toward -inf.
  return mant_ >> shift;
}

Dyadic abs(const Dyadic& x) { return x < Dyadic{} ? -x : x; }
Dyadic min(const Dyadic& a, const Dyadic& b) { return b < a ? b : a; }
Dyadic max(const Dyadic& a, const Dyadic& b) { return a < b ? b : a; }

DyadicInterval sqrt_enclosure(const Dyadic& value, int precision) {
  if (value < Dyadic{}) throw numeric_error("NegativeRadicand", value.to_string());
  // sqrt(m 2^-e) 2^p = sqrt(m 2^(2p-e))
  const int shift = 2 * precision - value.exponent();
  const i128 m = value.mantissa();
  u128 t;
  bool exact_t = true;
  if (shift >= 0) {
    if (shift > 60) throw numeric_error("DyadicOverflow", "sqrt precision too high");
    t = static_cast<u128>(m) << shift;
  } else {
    const int s = -shift;
    t = s >= 127 ? 0 : static_cast<u128>(m) >> s;
    exact_t = s >= 127 ? m == 0 : (static_cast<u128>(m) & ((static_cast<u128>(1) << s) - 1)) == 0;
  }
  const u128 r = isqrt(t);
  const auto lo = Dyadic::from_parts(checked_narrow(static_cast<i128>(r)), precision);
  if (exact_t && r * r == t) return {lo, lo};
  return {lo, Dyadic::from_parts(checked_narrow(static_cast<i128>(r) + 1), precision)};
}

RationalPoint RationalPoint::zeros(int dim) {
  RationalPoint p;
  p.dim = dim;
  return p;
}

RationalPoint RationalPoint::from_doubles(const double* xs, int dim, int precision) {
  RationalPoint p = zeros(dim);
  for (int i = 0; i < dim; ++i) p[i] = Dyadic::round_of(xs[i], precision);
  return p;
}

RationalPoint RationalPoint::from_doubles(double x, double y, int precision) {
  const double xs[2] = {x, y};
  return from_doubles(xs, 2, precision);
}

int RationalPoint::lattice_rank() const {
  int r = 0;
  for (int i = 0; i < dim; ++i) r = std::max(r, (*this)[i].exponent());
  return r;
}

std::string RationalPoint::to_string() const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim; ++i) {
    if (i) os << ' ';
    os << (*this)[i].to_double();
  }
  os << ')';
  return os.str();
}

bool operator==(const RationalPoint& a, const RationalPoint& b) {
  if (a.dim != b.dim) return false;
  for (int i = 0; i < a.dim; ++i)
    if (a[i] != b[i]) return false;
  return true;
}

Dyadic squared_distance(const RationalPoint& a, const RationalPoint& b) {
  Dyadic s;
  for (int i = 0; i < a.dim; ++i) {
    const Dyadic d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

PointOracle PointOracle::exact(const RationalPoint& p) {
  return PointOracle([p](int) { return p; });
}

PointOracle PointOracle::of_doubles(double x, double y) {
  return PointOracle([x, y](int n) {
    return RationalPoint::from_doubles(x, y, std::min(n + 1, 52));
  });
}

bool PointOracle::consistent_up_to(int max_n) const {
  for (int n = 0; n < max_n; ++n) {
    const RationalPoint a = (*this)(n);
    const RationalPoint b = (*this)(n + 1);
    // |a-b|^2 < (3 * 2^-(n+1))^2
    const Dyadic bound = Dyadic::from_parts(9, 2 * n + 2);
    if (!(squared_distance(a, b) < bound)) return false;
  }
  return true;
}

}  // namespace hmk
