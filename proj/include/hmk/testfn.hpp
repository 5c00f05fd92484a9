#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hmk {

struct Grad2 {
  double x = 0;
  double y = 0;
};

/// Planar C^2 test function with its derivatives and a-priori bounds.
class TestFunction {
 public:
  using Eval = std::function<double(double, double)>;
  using GradEval = std::function<Grad2(double, double)>;

  TestFunction();  // zero
  TestFunction(std::string id, Eval value, GradEval gradient, Eval laplacian, double lip,
               double sup, bool subharmonic = false);

  double operator()(double x, double y) const { return value_(x, y); }
  Grad2 gradient(double x, double y) const { return gradient_(x, y); }
  double laplacian(double x, double y) const { return laplacian_(x, y); }
  double lip_bound() const { return lip_; }
  double sup_bound() const { return sup_; }
  bool subharmonic() const { return subharmonic_; }
  const std::string& id() const { return id_; }
  const Eval& evaluator() const { return value_; }

  TestFunction scaled(double a) const;
  TestFunction plus(const TestFunction& g) const;
  TestFunction with_id(std::string id) const;

  static TestFunction constant(double c);
  /// x_axis (axis 0) or y (axis 1).
  static TestFunction coordinate(int axis);
  /// c + s * (sqrt(|z-q|^2 + delta^2) - delta): smooth subharmonic cone.
  static TestFunction cone(double qx, double qy, double c, double s, double delta);
  /// |z - q|^2.
  static TestFunction squared_distance(double qx, double qy);

 private:
  std::string id_;
  Eval value_;
  GradEval gradient_;
  Eval laplacian_;
  double lip_ = 0;
  double sup_ = 0;
  bool subharmonic_ = false;
};

struct ProbeReport {
  bool ok = true;
  double min_laplacian = 0;   // min 5-point Laplacian at interior nodes
  double max_gradient = 0;    // max |grad|
  double max_abs = 0;         // max |value|
  double max_fd_mismatch = 0; // max |grad - central FD|
  std::string failure;
};

/// Checks the TestFunction invariants on the rank-`rank` grid of [0,1]^2.
ProbeReport probe_invariants(const TestFunction& f, int rank = 6, double tau_sub = 1e-8);

/// Five-point Laplacian of f at (x, y) with step h.
double discrete_laplacian(const TestFunction::Eval& f, double x, double y, double h);

// ---------------------------------------------------------------------------
// Mollification

/// Radial bump c (1 - r^2)^8 on the unit disk with unit integral.
double mollifier_profile(double r);

struct MollifyOptions {
  /// Lattice nodes per kernel radius.
  int radial_nodes = 12;
  std::uint64_t budget = 1u << 24;  // size of the node table
};

/// Convolution with phi_n(z) = 2^{2n} phi(2^n z) discretized on a lattice of
/// pitch 2^-n / radial_nodes and normalized node-wise, so constants are
/// reproduced exactly and |f - g| < 2^-n Lip(g). The input is extended off
/// [0,1]^2 by its value at the nearest point.
TestFunction mollify(const TestFunction::Eval& g, int n, MollifyOptions opts = {},
                     std::string id = "mollified");

/// Smooth plateau: 1 on [-1.5,1.5]^2, 0 outside (-2,2)^2.
double collar(double x, double y);
Grad2 collar_gradient(double x, double y);
double collar_laplacian(double x, double y);

// ---------------------------------------------------------------------------
// Green's function of the square [-2,2]^2 and the subharmonic decomposition

/// G(x,y) with -Delta G(., y) = delta_y and zero boundary values.
double green_cube(double x1, double x2, double y1, double y2, double tol = 1e-12);

struct SubharmonicPair {
  TestFunction u_tilde;
  TestFunction v_tilde;
  double scale = 1;
  double tol = 0;
  /// Max of |f - S(u - v)| on the rank-6 grid of [0,1]^2.
  double reconstruction_error = 0;
};

/// Splits f (C^2 on [0,1]^2) into S (u - v) with u, v positive, subharmonic,
/// 1-Lipschitz and bounded by 1.
SubharmonicPair subharmonic_parts(const TestFunction& f, double tol);

// ---------------------------------------------------------------------------
// Nets

struct NetOptions {
  int max_n = 4;
};

struct NetMember {
  TestFunction f;
  double qx = 0, qy = 0, c = 0, s = 0, delta = 0;  // cone parameters
};

/// Finite family of subharmonic, 1-Lipschitz, |f| <= 1 functions used as a
/// weak-convergence test class at level n.
std::vector<NetMember> lipschitz_subharmonic_net(int n, NetOptions opts = {});

/// Deterministic text manifest for a net (one member per line).
std::string net_manifest(int n, const std::vector<NetMember>& net);

}  // namespace hmk
