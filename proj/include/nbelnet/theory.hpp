#pragma once

#include <cstdint>

#include "nbelnet/types.hpp"

namespace nbelnet {

/// Error-direction set on which a design constant is evaluated.
///   epsilon == 0: S(slope, H)    = { b : ||b_Hc||_1 <= slope ||b_H||_1 }
///   epsilon >  0: V(slope, eps)  = { b : ||b_Hc||_1 <= slope ||b_H||_1 + eps }
struct ConeSpec {
  double slope = 1.0;
  IndexSet support;
  double epsilon = 0.0;

  void validate(Index p) const;
  Index d_star() const noexcept { return static_cast<Index>(support.size()); }
};

struct TheoryConfig {
  double B = 1.0;          ///< sup-norm bound on the true coefficients
  double L_or_K = 1.0;     ///< covariate sup bound
  double epsilon_n = 0.0;
  double zeta = 3.0;       ///< cone slope for S(zeta, H); must exceed 1
  int samples = 20000;     ///< restart budget of the cone searches
  std::uint64_t seed = 0;

  void validate() const;
  /// Localization radius 16B + 2 eps_n.
  double M() const noexcept { return 16.0 * B + 2.0 * epsilon_n; }
  /// Search radius for the Stabil constant, max(1, 2M).
  double stabil_radius() const noexcept;
};

// Cone constants. Each is an infimum over a nonconvex set, so the returned
// value is the best (smallest) objective found by multi-start projected
// gradient: an upper-bound estimate of the true constant. Restart i uses
// seed derive_seed(seed, i), so a larger budget only adds restarts and can
// only lower the estimate.

/// inf_{b in S} sqrt(d* b'Sb) / ||b_H||_1.
/// Per sign pattern of b_H the normalized problem is a convex QP, and all
/// 2^{d*-1} patterns are enumerated whenever the budget allows.
double compatibility_factor(const Matrix& sigma, const ConeSpec& cone, int budget,
                            std::uint64_t seed);

/// inf_{b in S} d*^{1/q} b'Sb / (||b_H||_1 ||b||_q).
double weak_cif(const Matrix& sigma, const ConeSpec& cone, double q, int budget,
                std::uint64_t seed);

struct StabilEstimate {
  double k = 0.0;
  /// Set when the smallest ratio found was <= 0 and k had to be clipped.
  bool degenerate = false;
};

/// Largest k in (0, 1] with b'Sb >= k ||b_H||_2^2 - eps over sampled
/// b in V(c, eps), ||b||_1 <= radius.
StabilEstimate stabil_constant(const Matrix& sigma, const ConeSpec& cone, double radius,
                               int budget, std::uint64_t seed);

/// Smaller root of a e^{-2a} = tau, for 0 <= tau <= e^{-1}/2.
double a_tau_root(double tau);

inline constexpr double kTauMax = 0.18393972058572117;  // e^{-1} / 2

struct CompatibilityBounds {
  double tau = 0.0;
  double a_tau = 0.0;
  double l1_bound = 0.0;
  double lq_bound = 0.0;
};

/// l1 and lq error bounds from the compatibility factor C and weak CIF C_q.
/// Throws InapplicableBound when tau > e^{-1}/2.
CompatibilityBounds oracle_bounds_t32(double K, double zeta, Index d_star, double lambda1,
                                      double compat, double cif_q, double q);

/// Same, with C and C_q estimated on sigma (normally the Hessian at the truth).
CompatibilityBounds oracle_bounds_t32(const Matrix& sigma, const ConeSpec& cone,
                                      const Penalty& pen, const TheoryConfig& cfg, double q);

/// min over |x| <= L(M+B), |y| <= LB of theta e^x (e^y + theta) / (2 (theta + e^x)^2).
double a_constant(double theta, double L, double B, double epsilon_n);

struct StabilBounds {
  double l1_bound = 0.0;
  double pred_bound = 0.0;
  double a_const = 0.0;
  /// lambda2 == lambda1 / (8B), as the bounds assume.
  bool lambda2_rule_ok = false;
};

StabilBounds oracle_bounds_t34(const Penalty& pen, const TheoryConfig& cfg, double theta,
                               Index d_star, double stabil_k);

struct EventE {
  double z_star = 0.0;
  double threshold = 0.0;
  bool holds = false;
};

/// z* = ||score(b*) + 2 lambda2 b*||_inf against lambda1 (zeta-1)/(zeta+1).
EventE event_E_check(const Vector& beta_star, const Dataset& data, const Penalty& pen,
                     double zeta);

struct EventA {
  double stat_at_truth = 0.0;
  double stat_at_estimate = 0.0;
  bool holds = false;
  /// The inequality is evaluated at the two endpoints of the segment, not at
  /// the unobservable intermediate point.
  bool endpoint_approximation = true;
};

EventA event_A_check(const Vector& beta_hat, const Vector& beta_star, const Dataset& data,
                     double lambda1);

struct GroupingBound {
  double lhs = 0.0;
  double rhs = 0.0;
  double rho = 0.0;
  bool holds(double slack) const noexcept { return lhs <= rhs + slack; }
};

/// |b_k - b_l| against (1/(2 n lambda2)) sum_i theta |x_ik - x_il| |e^{u_i} - y_i| / (theta + e^{u_i}).
GroupingBound grouping_bound(const Vector& beta_hat, const Dataset& data, const Penalty& pen,
                             Index k, Index l);

/// p solving 5 p (2p)^{-A^2} = delta.
double honest_dimension(double A, double delta);

struct TheoryReport {
  double K = 0.0;
  Index d_star = 0;
  double q = 2.0;
  double compat = 0.0;
  double cif_q = 0.0;            ///< NaN when tau rules the bound out
  double stabil_k = 0.0;
  bool stabil_degenerate = false;
  bool t32_applicable = false;
  double tau = 0.0;
  double a_tau = 0.0;            ///< NaN when inapplicable
  double l1_bound_t32 = 0.0;     ///< NaN when inapplicable
  double lq_bound_t32 = 0.0;     ///< NaN when inapplicable
  double l1_bound_t34 = 0.0;
  double pred_bound_t34 = 0.0;
  double a_const = 0.0;
  double z_star = 0.0;
  bool event_E = false;
};

/// Every constant and bound for one instance with known truth. The
/// compatibility constants use the Hessian at the truth; the Stabil constant
/// uses stabil_sigma on V(3.5, eps_n). cfg.L_or_K serves as both K and L.
TheoryReport theory_report(const Dataset& data, const Vector& beta_star, const Penalty& pen,
                           const TheoryConfig& cfg, double q, const Matrix& stabil_sigma,
                           int stabil_budget);

}  // namespace nbelnet
