#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hmk/geometry.hpp"
#include "hmk/harmonic.hpp"

namespace hmk {

/// Upper bound log(2R/dist) / log(R/diam) for the harmonic measure of a
/// compact boundary piece K of diameter diam seen from distance dist, for
/// planar domains inside a disk of radius R. Throws DomainOfValidity unless
/// 0 < diam <= R/2 and dist > 0.
double beurling_bound(double R, double diam, double dist);

/// Per-step ball constant 3^{2d} used as the worst-case Harnack factor.
inline constexpr double kHarnackBase = 81.0;

struct HarnackStep {
  Vec2 from;
  Vec2 to;
  double radius = 0;  // certified clearance of the ball centre
  double factor = 1;  // (R + rho) / (R - rho)
};

/// Multiplicative Harnack bound between two points of a connector.
struct HarnackBound {
  double tau = 1;
  std::vector<DyadicCube> chain;  // cubes visited, in order
  std::vector<HarnackStep> steps;
  double base = kHarnackBase;
  int chain_rank = 0;
  /// Number of ball steps; tau <= base^exponent.
  std::size_t exponent = 0;
  /// Cube count of the chain rank in [0,1]^2; tau <= base^worst_exponent.
  std::uint64_t worst_exponent = 0;
  double log2_tau() const;
};

/// Q a rank-ell polygon, gamma a connected union of closed dyadic cubes in Q
/// with dist(y, dQ) > d 2^{1-ell} for every y in gamma.
struct Connector {
  DyadicPolygon Q;
  std::vector<DyadicCube> gamma;
  int ell = 0;
  RationalPoint x0;
  RationalPoint x;
  /// Exact check of the clearance, containment and connectivity conditions.
  bool valid(std::string* why = nullptr) const;
  /// True when p lies in one of the closed gamma cubes.
  bool on_gamma(const RationalPoint& p) const;
};

/// Chains ball Harnack inequalities through the rank-(ell+1) cubes meeting
/// gamma. Throws ClearanceViolated when a point is not on gamma or a ball
/// leaves Q.
HarnackBound harnack_chain(const Connector& conn, const RationalPoint& x1,
                           const RationalPoint& x2);
HarnackBound harnack_chain(const DyadicPolygon& Q, const std::vector<DyadicCube>& gamma, int ell,
                           const RationalPoint& x1, const RationalPoint& x2);

struct ConnectorOptions {
  int max_rank = 10;
  std::uint64_t budget = 1u << 16;  // enumeration terms
};

/// Searches the enumeration for a polygon holding both points, then the
/// coarsest rank at which a clearance path joins them.
Connector find_connector(const DomainEnumeration& dom, const PointOracle& x0,
                         const PointOracle& x, ConnectorOptions opts = {});

/// Outer domain for subdomain comparison: may_meet(c) must return true
/// whenever the closed cube c meets the outer domain.
struct OuterDomain {
  std::function<bool(const DyadicCube&)> may_meet;
  /// Optional nesting check: true when the open cube lies in the outer domain.
  std::function<bool(const DyadicCube&)> covers;
  int rank = 0;  // resolution at which faces are tested
  static OuterDomain polygon(const DyadicPolygon& p);
};

struct ComparisonBound {
  double bound = 0;             // 2 * upper bound of omega(interface)
  Estimate interface_mass;      // integral of the interface plateau
  std::size_t interface_faces = 0;
};

/// |int f d omega_x^inner - int f d omega_x^outer| <= bound for |f| <= 1.
/// Throws NotNested when inner is not contained in the outer domain.
ComparisonBound compare_subdomains(const DyadicPolygon& inner, const OuterDomain& outer,
                                   const RationalPoint& x, double tol,
                                   GridOptions grid = {});
ComparisonBound compare_subdomains(const DyadicPolygon& inner, const DyadicPolygon& outer,
                                   const RationalPoint& x, double tol,
                                   GridOptions grid = {});

struct TransferOptions {
  int max_net_level = 4;
  std::uint64_t search_budget = 64;  // candidate polygons examined
  int max_candidate_rank = 14;
  GridOptions grid;
};

/// Full error ledger of a transfer.
struct TransferResult {
  double value = 0;
  double error = 0;  // contract: 2^-n
  double tau = 1;
  std::size_t chain_steps = 0;
  int k = 0;                  // index of the harmonic approximation member
  int net_level = 0;
  int member_rank = 0;        // rank of P_k
  std::uint64_t member_cubes = 0;
  double boundary_mass = 0;   // certified bound on omega_x0(dOmega near P_k)
  double harnack_term = 0;    // C * 2^-k
  Estimate member_estimate;   // int f d omega_x^{P_k}
};

/// int f d omega_x^Omega from the measure at x0 through the connector.
TransferResult transfer_measure(const WeakMeasure& mu0, const Connector& conn,
                                const PointOracle& x, const TestFunction& f, int n,
                                TransferOptions opts = {});

/// Text certificate for a connector and a Harnack bound.
std::string connector_manifest(const Connector& conn, const HarnackBound& hb);

}  // namespace hmk
