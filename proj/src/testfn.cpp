#include "hmk/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hmk/error.hpp"

namespace hmk {

namespace {
constexpr double kPi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// TestFunction

TestFunction::TestFunction()
    : TestFunction(
          "zero", [](double, double) { return 0.0; }, [](double, double) { return Grad2{}; },
          [](double, double) { return 0.0; }, 0, 0, true) {}

TestFunction::TestFunction(std::string id, Eval value, GradEval gradient, Eval laplacian,
                           double lip, double sup, bool subharmonic)
    : id_(std::move(id)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      laplacian_(std::move(laplacian)),
      lip_(lip),
      sup_(sup),
      subharmonic_(subharmonic) {}

TestFunction TestFunction::scaled(double a) const {
  auto f = *this;
  return TestFunction(
      id_ + "*" + std::to_string(a), [f, a](double x, double y) { return a * f(x, y); },
      [f, a](double x, double y) {
        const auto g = f.gradient(x, y);
        return Grad2{a * g.x, a * g.y};
      },
      [f, a](double x, double y) { return a * f.laplacian(x, y); }, std::abs(a) * lip_,
      std::abs(a) * sup_, subharmonic_ && a >= 0);
}

TestFunction TestFunction::plus(const TestFunction& g) const {
  auto f = *this;
  return TestFunction(
      id_ + "+" + g.id_, [f, g](double x, double y) { return f(x, y) + g(x, y); },
      [f, g](double x, double y) {
        const auto a = f.gradient(x, y), b = g.gradient(x, y);
        return Grad2{a.x + b.x, a.y + b.y};
      },
      [f, g](double x, double y) { return f.laplacian(x, y) + g.laplacian(x, y); },
      lip_ + g.lip_, sup_ + g.sup_, subharmonic_ && g.subharmonic_);
}

TestFunction TestFunction::with_id(std::string id) const {
  auto f = *this;
  f.id_ = std::move(id);
  return f;
}

TestFunction TestFunction::constant(double c) {
  std::ostringstream os;
  os << "const(" << c << ")";
  return TestFunction(
      os.str(), [c](double, double) { return c; }, [](double, double) { return Grad2{}; },
      [](double, double) { return 0.0; }, 0, std::abs(c), true);
}

TestFunction TestFunction::coordinate(int axis) {
  if (axis != 0 && axis != 1) throw input_error("InvalidAxis", "coordinate axis must be 0 or 1");
  return TestFunction(
      axis == 0 ? "x" : "y", [axis](double x, double y) { return axis == 0 ? x : y; },
      [axis](double, double) { return axis == 0 ? Grad2{1, 0} : Grad2{0, 1}; },
      [](double, double) { return 0.0; }, 1, 1, true);
}

TestFunction TestFunction::cone(double qx, double qy, double c, double s, double delta) {
  std::ostringstream os;
  os << "cone(" << qx << "," << qy << ";" << c << "," << s << "," << delta << ")";
  // Max over [0,1]^2 is attained at a corner.
  double far = 0;
  for (double cx : {0.0, 1.0})
    for (double cy : {0.0, 1.0}) far = std::max(far, std::hypot(cx - qx, cy - qy));
  const double sup = std::max(std::abs(c), std::abs(c + s * (std::hypot(far, delta) - delta)));
  return TestFunction(
      os.str(),
      [=](double x, double y) {
        const double r2 = (x - qx) * (x - qx) + (y - qy) * (y - qy);
        return c + s * (std::sqrt(r2 + delta * delta) - delta);
      },
      [=](double x, double y) {
        const double dx = x - qx, dy = y - qy;
        const double q = std::sqrt(dx * dx + dy * dy + delta * delta);
        return Grad2{s * dx / q, s * dy / q};
      },
      [=](double x, double y) {
        const double r2 = (x - qx) * (x - qx) + (y - qy) * (y - qy);
        const double q2 = r2 + delta * delta;
        return s * (r2 + 2 * delta * delta) / (q2 * std::sqrt(q2));
      },
      std::abs(s), sup, s >= 0);
}

TestFunction TestFunction::squared_distance(double qx, double qy) {
  double far = 0;
  for (double cx : {0.0, 1.0})
    for (double cy : {0.0, 1.0}) far = std::max(far, std::hypot(cx - qx, cy - qy));
  return TestFunction(
      "sqdist", [=](double x, double y) { return (x - qx) * (x - qx) + (y - qy) * (y - qy); },
      [=](double x, double y) { return Grad2{2 * (x - qx), 2 * (y - qy)}; },
      [](double, double) { return 4.0; }, 2 * far, far * far, true);
}

double discrete_laplacian(const TestFunction::Eval& f, double x, double y, double h) {
  return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / (h * h);
}

ProbeReport probe_invariants(const TestFunction& f, int rank, double tau_sub) {
  ProbeReport rep;
  rep.min_laplacian = std::numeric_limits<double>::infinity();
  double fine_mismatch = 0;
  const int m = 1 << rank;
  const double h = 1.0 / m;
  for (int i = 0; i <= m; ++i) {
    for (int j = 0; j <= m; ++j) {
      const double x = i * h, y = j * h;
      const double v = f(x, y);
      const auto g = f.gradient(x, y);
      rep.max_abs = std::max(rep.max_abs, std::abs(v));
      rep.max_gradient = std::max(rep.max_gradient, std::hypot(g.x, g.y));
      if (i > 0 && j > 0 && i < m && j < m) {
        rep.min_laplacian = std::min(rep.min_laplacian, discrete_laplacian(f.evaluator(), x, y, h));
        // Central differences at h and h/2.
        const double h2 = h / 2;
        const double fx1 = (f(x + h, y) - f(x - h, y)) / (2 * h);
        const double fy1 = (f(x, y + h) - f(x, y - h)) / (2 * h);
        const double fx2 = (f(x + h2, y) - f(x - h2, y)) / (2 * h2);
        const double fy2 = (f(x, y + h2) - f(x, y - h2)) / (2 * h2);
        rep.max_fd_mismatch = std::max(rep.max_fd_mismatch, std::hypot(g.x - fx1, g.y - fy1));
        fine_mismatch = std::max(fine_mismatch, std::hypot(g.x - fx2, g.y - fy2));
      }
    }
  }
  // The mismatch must shrink with h (a wrong gradient leaves an O(1) gap).
  if (fine_mismatch > 0.6 * rep.max_fd_mismatch + 1e-9 * (1 + rep.max_gradient)) {
    rep.ok = false;
    rep.failure = "gradient disagrees with finite differences";
  }
  if (f.subharmonic() && rep.min_laplacian < -tau_sub) {
    rep.ok = false;
    rep.failure = "negative discrete Laplacian";
  }
  if (rep.max_gradient > f.lip_bound() * (1 + 1e-9) + 1e-12) {
    rep.ok = false;
    rep.failure = "gradient exceeds Lipschitz bound";
  }
  if (rep.max_abs > f.sup_bound() * (1 + 1e-9) + 1e-12) {
    rep.ok = false;
    rep.failure = "value exceeds sup bound";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Mollifier

namespace {

// (1-r^2)^8 and its first two radial derivatives. Its Fourier transform
// decays algebraically at a high order, which keeps lattice sums accurate.
constexpr int kBumpPower = 8;

struct Bump {
  double v, d1, d2, d1_over_r;
};

Bump bump(double r) {
  if (r >= 1) return {0, 0, 0, 0};
  const double q = 1 - r * r;
  const double q6 = std::pow(q, kBumpPower - 2);
  const double q7 = q6 * q;
  const double d1_over_r = -2.0 * kBumpPower * q7;
  return {q7 * q, d1_over_r * r, d1_over_r + 4.0 * kBumpPower * (kBumpPower - 1) * r * r * q6, d1_over_r};
}

double bump_mass() { return kPi / (kBumpPower + 1); }

}  // namespace

double mollifier_profile(double r) { return bump(r).v / bump_mass(); }

TestFunction mollify(const TestFunction::Eval& g, int n, MollifyOptions opts, std::string id) {
  if (n < 0 || n > 20) throw input_error("InvalidScale", "mollifier scale out of range");
  const int per = std::max(2, opts.radial_nodes);
  const double eps = std::ldexp(1.0, -n);
  const double h = eps / per;
  // Lattice nodes i*h; table covers [-eps, 1+eps]^2 plus one layer.
  const long lo = static_cast<long>(std::floor(-eps / h)) - 1;
  const long hi = static_cast<long>(std::ceil((1 + eps) / h)) + 1;
  const long side = hi - lo + 1;
  if (static_cast<std::uint64_t>(side) * static_cast<std::uint64_t>(side) > opts.budget)
    throw budget_error("QuadratureBudgetExceeded", "mollifier table too large");
  auto ext = [g](double x, double y) { return g(std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)); };
  auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(side * side));
  double sup = 0;
  for (long i = 0; i < side; ++i)
    for (long j = 0; j < side; ++j) {
      const double v = ext((lo + i) * h, (lo + j) * h);
      (*table)[static_cast<std::size_t>(i * side + j)] = v;
      sup = std::max(sup, std::abs(v));
    }
  auto node_value = [=](long i, long j) {
    if (i >= lo && i <= hi && j >= lo && j <= hi)
      return (*table)[static_cast<std::size_t>((i - lo) * side + (j - lo))];
    return ext(i * h, j * h);
  };

  struct Sums {
    double n = 0, d = 0;
    double nx = 0, ny = 0, dx = 0, dy = 0;
    double nl = 0, dl = 0;
  };
  const double inv = 1 / eps;
  auto sums = [=](double x, double y, bool derivs) {
    Sums s;
    const long i0 = static_cast<long>(std::floor((x - eps) / h)), i1 = static_cast<long>(std::ceil((x + eps) / h));
    const long j0 = static_cast<long>(std::floor((y - eps) / h)), j1 = static_cast<long>(std::ceil((y + eps) / h));
    for (long i = i0; i <= i1; ++i) {
      const double ux = (x - i * h) * inv;
      for (long j = j0; j <= j1; ++j) {
        const double uy = (y - j * h) * inv;
        const double r = std::sqrt(ux * ux + uy * uy);
        if (r >= 1) continue;
        const Bump b = bump(r);
        const double gv = node_value(i, j);
        s.n += b.v * gv;
        s.d += b.v;
        if (derivs) {
          // grad_z W = phi'(r)/r * u / eps ; lap_z W = (phi'' + phi'/r) / eps^2
          const double gx = b.d1_over_r * ux * inv, gy = b.d1_over_r * uy * inv;
          const double lap = (b.d2 + b.d1_over_r) * inv * inv;
          s.nx += gx * gv;
          s.ny += gy * gv;
          s.dx += gx;
          s.dy += gy;
          s.nl += lap * gv;
          s.dl += lap;
        }
      }
    }
    return s;
  };

  // Quadrature slack: for linear g the gradient is M grad g with
  // M = sum grad W (w - z)^T / D, which is I for the exact convolution.
  // Sampled over one lattice cell (the node pattern is translation invariant).
  double slack = 0;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const double x = 0.5 + (a + 0.5) * h / 8, y = 0.5 + (b + 0.5) * h / 8;
      const long i0 = static_cast<long>(std::floor((x - eps) / h)), i1 = static_cast<long>(std::ceil((x + eps) / h));
      const long j0 = static_cast<long>(std::floor((y - eps) / h)), j1 = static_cast<long>(std::ceil((y + eps) / h));
      double d = 0, dgx = 0, dgy = 0, mxx = 0, mxy = 0, myx = 0, myy = 0;
      for (long i = i0; i <= i1; ++i)
        for (long j = j0; j <= j1; ++j) {
          const double ux = (x - i * h) * inv, uy = (y - j * h) * inv;
          const double r = std::sqrt(ux * ux + uy * uy);
          if (r >= 1) continue;
          const Bump bb = bump(r);
          d += bb.v;
          const double gx = bb.d1_over_r * ux * inv, gy = bb.d1_over_r * uy * inv;
          dgx += gx;
          dgy += gy;
          mxx -= gx * ux * eps;
          mxy -= gx * uy * eps;
          myx -= gy * ux * eps;
          myy -= gy * uy * eps;
        }
      const double dev = std::abs(mxx / d - 1) + std::abs(myy / d - 1) + std::abs(mxy / d) + std::abs(myx / d);
      slack = std::max(slack, dev + eps * std::hypot(dgx, dgy) / d);
    }
  double lip_g = 0;
  // Lipschitz constant of g from the node table (adjacent differences).
  for (long i = 0; i + 1 < side; ++i)
    for (long j = 0; j + 1 < side; ++j) {
      const double v = (*table)[static_cast<std::size_t>(i * side + j)];
      lip_g = std::max(lip_g, std::abs((*table)[static_cast<std::size_t>((i + 1) * side + j)] - v) / h);
      lip_g = std::max(lip_g, std::abs((*table)[static_cast<std::size_t>(i * side + j + 1)] - v) / h);
    }

  return TestFunction(
      std::move(id),
      [=](double x, double y) {
        const Sums s = sums(x, y, false);
        return s.n / s.d;
      },
      [=](double x, double y) {
        const Sums s = sums(x, y, true);
        const double f = s.n / s.d;
        return Grad2{(s.nx - f * s.dx) / s.d, (s.ny - f * s.dy) / s.d};
      },
      [=](double x, double y) {
        const Sums s = sums(x, y, true);
        const double f = s.n / s.d;
        const double fx = (s.nx - f * s.dx) / s.d, fy = (s.ny - f * s.dy) / s.d;
        return (s.nl - 2 * (fx * s.dx + fy * s.dy) - f * s.dl) / s.d;
      },
      lip_g * (1 + slack) * (1 + 1e-6), sup, false);
}

// ---------------------------------------------------------------------------
// Collar

namespace {

// Quintic smoothstep S(u) for u in [0,1], with derivatives.
void smoothstep(double u, double* s, double* d1, double* d2) {
  if (u <= 0) {
    *s = *d1 = *d2 = 0;
    return;
  }
  if (u >= 1) {
    *s = 1;
    *d1 = *d2 = 0;
    return;
  }
  *s = u * u * u * (10 - 15 * u + 6 * u * u);
  *d1 = 30 * u * u * (1 - u) * (1 - u);
  *d2 = 60 * u * (1 - u) * (1 - 2 * u);
}

// 1 on [-1.5,1.5], 0 outside (-2,2).
void plateau1(double t, double* s, double* d1, double* d2) {
  const double a = std::abs(t);
  const double u = (2 - a) / 0.5;
  double v, g1, g2;
  smoothstep(u, &v, &g1, &g2);
  const double sign = t < 0 ? -1.0 : 1.0;
  *s = v;
  *d1 = -2 * g1 * sign;  // du/dt = -2 sign(t)
  *d2 = 4 * g2;
}

}  // namespace

double collar(double x, double y) {
  double a, b, c, d, e, f;
  plateau1(x, &a, &b, &c);
  plateau1(y, &d, &e, &f);
  return a * d;
}

Grad2 collar_gradient(double x, double y) {
  double a, b, c, d, e, f;
  plateau1(x, &a, &b, &c);
  plateau1(y, &d, &e, &f);
  return {b * d, a * e};
}

double collar_laplacian(double x, double y) {
  double a, b, c, d, e, f;
  plateau1(x, &a, &b, &c);
  plateau1(y, &d, &e, &f);
  return c * d + a * f;
}

// ---------------------------------------------------------------------------
// Green's function of [-2,2]^2

double green_cube(double x1, double x2, double y1, double y2, double tol) {
  const double L = 4;
  const double d1 = std::abs(x1 - y1), d2 = std::abs(x2 - y2);
  if (d1 == 0 && d2 == 0) throw numeric_error("CoincidentPoints", "green_cube at x = y");
  for (double v : {x1, x2, y1, y2})
    if (!(v > -2 && v < 2)) throw input_error("OutsideCube", "green_cube needs points in (-2,2)^2");
  // Expand in the eigenfunctions of the axis along which the points are
  // closer; the other axis carries the exponentially decaying 1D kernel.
  double a, b, t, s;
  if (d1 >= d2) {
    a = x2 + 2;
    b = y2 + 2;
    t = x1 + 2;
    s = y1 + 2;
  } else {
    a = x1 + 2;
    b = y1 + 2;
    t = x2 + 2;
    s = y2 + 2;
  }
  const double lo = std::min(t, s), hi = std::max(t, s);
  const double delta = hi - lo;
  double sum = 0;
  for (int m = 1; m < 1'000'000; ++m) {
    const double k = m * kPi / L;
    // sinh(k lo) sinh(k (L-hi)) / sinh(k L) in overflow-free form.
    const double ratio = 0.5 * std::exp(-k * delta) * (-std::expm1(-2 * k * lo)) *
                         (-std::expm1(-2 * k * (L - hi))) / (-std::expm1(-2 * k * L));
    sum += (2 / L) * std::sin(k * a) * std::sin(k * b) * ratio / k;
    const double kn = (m + 1) * kPi / L;
    const double tail = (1 / L) * std::exp(-kn * delta) /
                        (kn * (-std::expm1(-2 * kPi)) * (-std::expm1(-kPi * delta / L)));
    if (tail < tol) break;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Subharmonic decomposition

namespace {

// Sine series on [a, a+L]^2: u = sum B_mn phi_m(x) phi_n(y), phi_m(t) =
// sin(m pi (t-a)/L). Evaluated with separable tables.
struct SineSeries {
  int M = 0;
  double a = 0, L = 1;
  std::vector<double> B;    // potential coefficients (m-1)*M + (n-1)
  std::vector<double> lap;  // Laplacian coefficients

  void tables(double t, std::vector<double>& s, std::vector<double>& c) const {
    const double w = kPi / L;
    s.resize(static_cast<std::size_t>(M));
    c.resize(static_cast<std::size_t>(M));
    // Angle-addition recurrence for sin(m theta), cos(m theta).
    const double th = w * (t - a), s1 = std::sin(th), c1 = std::cos(th);
    double sm = s1, cm = c1;
    for (int m = 1; m <= M; ++m) {
      s[static_cast<std::size_t>(m - 1)] = sm;
      c[static_cast<std::size_t>(m - 1)] = m * w * cm;
      const double sn = sm * c1 + cm * s1;
      cm = cm * c1 - sm * s1;
      sm = sn;
    }
  }
  double value(double x, double y) const { return eval(B, x, y, 0); }
  Grad2 grad(double x, double y) const { return {eval(B, x, y, 1), eval(B, x, y, 2)}; }
  double laplacian(double x, double y) const { return eval(lap, x, y, 0); }
  double eval(const std::vector<double>& coef, double x, double y, int mode) const {
    std::vector<double> sx, cx, sy, cy;
    tables(x, sx, cx);
    tables(y, sy, cy);
    const auto& ax = mode == 1 ? cx : sx;
    const auto& ay = mode == 2 ? cy : sy;
    double total = 0;
    for (int m = 0; m < M; ++m) {
      double row = 0;
      for (int n = 0; n < M; ++n)
        row += coef[static_cast<std::size_t>(m * M + n)] * ay[static_cast<std::size_t>(n)];
      total += ax[static_cast<std::size_t>(m)] * row;
    }
    return total;
  }
  // Values on the tensor grid xs x ys (mode as in eval).
  std::vector<double> grid(const std::vector<double>& coef, const std::vector<double>& xs, int mode) const {
    const std::size_t G = xs.size();
    std::vector<double> ax(G * M), ay(G * M), sx, cx;
    for (std::size_t i = 0; i < G; ++i) {
      tables(xs[i], sx, cx);
      for (int m = 0; m < M; ++m) {
        ax[i * M + m] = mode == 1 ? cx[m] : sx[m];
        ay[i * M + m] = mode == 2 ? cx[m] : sx[m];
      }
    }
    // T[i][n] = sum_m ax[i][m] coef[m][n]
    std::vector<double> T(G * M, 0.0), out(G * G, 0.0);
    for (std::size_t i = 0; i < G; ++i)
      for (int m = 0; m < M; ++m) {
        const double a = ax[i * M + m];
        for (int n = 0; n < M; ++n) T[i * M + n] += a * coef[static_cast<std::size_t>(m * M + n)];
      }
    for (std::size_t i = 0; i < G; ++i)
      for (std::size_t j = 0; j < G; ++j) {
        double s = 0;
        for (int n = 0; n < M; ++n) s += T[i * M + n] * ay[j * M + n];
        out[i * G + j] = s;
      }
    return out;
  }
};

}  // namespace

SubharmonicPair subharmonic_parts(const TestFunction& f, double tol) {
  if (!(tol > 0)) throw input_error("InvalidTolerance", "tol must be positive");
  // C^2 sanity: analytic Laplacian against 5-point stencils at two scales.
  for (double px : {0.25, 0.5, 0.75})
    for (double py : {0.3, 0.6}) {
      const double lap = f.laplacian(px, py);
      const double a = discrete_laplacian(f.evaluator(), px, py, 1.0 / 64);
      const double b = discrete_laplacian(f.evaluator(), px, py, 1.0 / 128);
      const double scale = 1 + std::abs(lap);
      if (std::abs(a - b) > 0.5 * scale || std::abs(b - lap) > 0.5 * scale)
        throw numeric_error("NotC2", "finite-difference Laplacian inconsistent across scales");
    }

  auto fhat = [f](double x, double y) { return f(x, y) * collar(x, y); };
  auto fhat_grad = [f](double x, double y) {
    const auto g = f.gradient(x, y);
    const auto c = collar_gradient(x, y);
    const double v = f(x, y), w = collar(x, y);
    return Grad2{g.x * w + v * c.x, g.y * w + v * c.y};
  };
  auto fhat_lap = [f](double x, double y) {
    const double w = collar(x, y);
    const auto c = collar_gradient(x, y);
    double lap = f.laplacian(x, y) * w + f(x, y) * collar_laplacian(x, y);
    if (c.x != 0 || c.y != 0) {
      const auto g = f.gradient(x, y);
      lap += 2 * (g.x * c.x + g.y * c.y);
    }
    return lap;
  };

  // Smooth positive part: |D+ - max(D,0)| <= tol/2. The target is tapered
  // to zero away from [0,1]^2, where the pair's properties are not required;
  // this keeps the collar's sign changes out of the sine series. v = u - fhat
  // makes the reconstruction exact regardless.
  auto taper = [](double t) {
    // 1 on [-0.25, 1.25], 0 outside (-0.5, 1.5); C-infinity step.
    const double u = (1.0 - std::abs(t - 0.5)) / 0.25;
    if (u <= 0) return 0.0;
    if (u >= 1) return 1.0;
    const double a = std::exp(-1 / u), b = std::exp(-1 / (1 - u));
    return a / (a + b);
  };
  const double eps = tol;
  // Poisson box [-0.75, 1.75]^2 contains the tapered target.
  const int M = 128, N = 256;
  const double A = -0.75, L = 2.5, hq = L / N;
  std::vector<double> tq(N);
  for (int i = 0; i < N; ++i) tq[static_cast<std::size_t>(i)] = A + (i + 0.5) * hq;
  std::vector<double> dplus(static_cast<std::size_t>(N * N));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double w = taper(tq[static_cast<std::size_t>(i)]) * taper(tq[static_cast<std::size_t>(j)]);
      if (w == 0) {
        dplus[static_cast<std::size_t>(i * N + j)] = 0;
        continue;
      }
      const double d = fhat_lap(tq[static_cast<std::size_t>(i)], tq[static_cast<std::size_t>(j)]);
      dplus[static_cast<std::size_t>(i * N + j)] = 0.5 * (d + std::sqrt(d * d + eps * eps)) * w;
    }
  std::vector<double> phi(static_cast<std::size_t>(M * N));
  for (int m = 1; m <= M; ++m)
    for (int i = 0; i < N; ++i)
      phi[static_cast<std::size_t>((m - 1) * N + i)] = std::sin(m * kPi / L * (tq[static_cast<std::size_t>(i)] - A));
  std::vector<double> T(static_cast<std::size_t>(M * N), 0.0);
  for (int m = 0; m < M; ++m)
    for (int i = 0; i < N; ++i) {
      const double p = phi[static_cast<std::size_t>(m * N + i)];
      for (int j = 0; j < N; ++j)
        T[static_cast<std::size_t>(m * N + j)] += p * dplus[static_cast<std::size_t>(i * N + j)];
    }
  auto series = std::make_shared<SineSeries>();
  series->M = M;
  series->a = A;
  series->L = L;
  series->B.assign(static_cast<std::size_t>(M * M), 0.0);
  series->lap.assign(static_cast<std::size_t>(M * M), 0.0);
  const double norm = (2 / L) * (2 / L) * hq * hq;
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n) {
      double s = 0;
      for (int j = 0; j < N; ++j)
        s += T[static_cast<std::size_t>(m * N + j)] * phi[static_cast<std::size_t>(n * N + j)];
      const double b = s * norm;
      const double lambda = (kPi / L) * (kPi / L) * ((m + 1) * (m + 1) + (n + 1) * (n + 1));
      series->lap[static_cast<std::size_t>(m * M + n)] = b;
      series->B[static_cast<std::size_t>(m * M + n)] = -b / lambda;
    }

  // u = series (Laplacian ~ D+), v = u - fhat (Laplacian ~ D-).
  // Probe grids of [0,1]^2 at ranks 6 and 7 fix the quadratic lift eta,
  // the positivity shift c and the scale S.
  double eta = 0;
  double umin = 1e300, vmin = 1e300, umax = -1e300, vmax = -1e300, gmax = 0;
  for (int rank : {6, 7}) {
    const int G = (1 << rank) + 1;
    const double h = 1.0 / (G - 1);
    std::vector<double> xs(static_cast<std::size_t>(G));
    for (int i = 0; i < G; ++i) xs[static_cast<std::size_t>(i)] = i * h;
    const auto U = series->grid(series->B, xs, 0);
    const auto Ux = series->grid(series->B, xs, 1);
    const auto Uy = series->grid(series->B, xs, 2);
    std::vector<double> V(U.size());
    for (int i = 0; i < G; ++i)
      for (int j = 0; j < G; ++j) {
        const auto k = static_cast<std::size_t>(i * G + j);
        const double x = xs[static_cast<std::size_t>(i)], y = xs[static_cast<std::size_t>(j)];
        V[k] = U[k] - fhat(x, y);
        const auto fg = fhat_grad(x, y);
        gmax = std::max({gmax, std::hypot(Ux[k], Uy[k]), std::hypot(Ux[k] - fg.x, Uy[k] - fg.y)});
        umin = std::min(umin, U[k]);
        vmin = std::min(vmin, V[k]);
        umax = std::max(umax, U[k]);
        vmax = std::max(vmax, V[k]);
      }
    for (int i = 1; i + 1 < G; ++i)
      for (int j = 1; j + 1 < G; ++j) {
        auto at = [&](const std::vector<double>& A, int a, int b) {
          return A[static_cast<std::size_t>(a * G + b)];
        };
        const double lu = (at(U, i + 1, j) + at(U, i - 1, j) + at(U, i, j + 1) + at(U, i, j - 1) - 4 * at(U, i, j)) / (h * h);
        const double lv = (at(V, i + 1, j) + at(V, i - 1, j) + at(V, i, j + 1) + at(V, i, j - 1) - 4 * at(V, i, j)) / (h * h);
        eta = std::max({eta, -lu / 4, -lv / 4});
      }
  }
  eta += 1e-7;
  // Quadratic lift eta |z|^2 on [0,1]^2: value <= 2 eta, gradient <= 2 sqrt2 eta.
  const double h7 = 1.0 / 128;
  const double lift_grad = 2 * std::sqrt(2.0) * eta;
  const double grad_bound = gmax * 1.02 + lift_grad + 1e-12;
  const double c = -std::min(umin, vmin) + grad_bound * h7 + 1e-9;
  const double top = std::max(umax, vmax) + c + 2 * eta + grad_bound * h7;
  const double S = std::max({top, grad_bound, 1e-300}) * (1 + 1e-6);

  auto make = [=](bool is_u) {
    return TestFunction(
        is_u ? "u_tilde" : "v_tilde",
        [=](double x, double y) {
          const double u = series->value(x, y);
          const double base = is_u ? u : u - fhat(x, y);
          return (base + eta * (x * x + y * y) + c) / S;
        },
        [=](double x, double y) {
          auto g = series->grad(x, y);
          if (!is_u) {
            const auto fg = fhat_grad(x, y);
            g.x -= fg.x;
            g.y -= fg.y;
          }
          return Grad2{(g.x + 2 * eta * x) / S, (g.y + 2 * eta * y) / S};
        },
        [=](double x, double y) {
          const double l = series->laplacian(x, y);
          const double base = is_u ? l : l - fhat_lap(x, y);
          return (base + 4 * eta) / S;
        },
        1.0, 1.0, true);
  };
  SubharmonicPair out{make(true), make(false), S, tol, 0};
  const int G = 65;
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j) {
      const double x = i / 64.0, y = j / 64.0;
      out.reconstruction_error = std::max(
          out.reconstruction_error, std::abs(f(x, y) - S * (out.u_tilde(x, y) - out.v_tilde(x, y))));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Net

std::vector<NetMember> lipschitz_subharmonic_net(int n, NetOptions opts) {
  if (n < 0) throw input_error("InvalidLevel", "net level must be nonnegative");
  if (n > opts.max_n) throw budget_error("NetBudgetExceeded", "net level beyond configured budget");
  const double step = std::ldexp(1.0, -n - 2);
  const double delta = std::ldexp(1.0, -n - 4);
  std::vector<NetMember> net;
  const int levels = 1 << (n + 2);
  for (int k = 0; k <= levels; ++k) {
    NetMember m;
    m.c = k * step;
    m.f = TestFunction::constant(m.c);
    net.push_back(m);
  }
  for (int i = 0; i <= levels; ++i)
    for (int j = 0; j <= levels; ++j)
      for (double s : {0.5, 1.0}) {
        const double qx = i * step, qy = j * step;
        auto f = TestFunction::cone(qx, qy, 0, s, delta);
        if (f.sup_bound() > 1) continue;
        net.push_back({f, qx, qy, 0, s, delta});
      }
  return net;
}

std::string net_manifest(int n, const std::vector<NetMember>& net) {
  std::ostringstream os;
  os.precision(17);
  os << "# hmk net v1 n=" << n << " members=" << net.size() << "\n";
  for (const auto& m : net) {
    if (m.s == 0) os << "const " << m.c << "\n";
    else os << "cone " << m.qx << " " << m.qy << " " << m.c << " " << m.s << " " << m.delta << "\n";
  }
  return os.str();
}

}  // namespace hmk
