#include "nbelnet/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nbelnet/model.hpp"
#include "nbelnet/rng.hpp"

namespace nbelnet {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void TheoryConfig::validate() const {
  if (!(B > 0.0)) throw std::invalid_argument("theory B must be positive");
  if (!(L_or_K > 0.0)) throw std::invalid_argument("theory L/K must be positive");
  if (!(epsilon_n >= 0.0)) throw std::invalid_argument("theory epsilon_n must be nonnegative");
  if (!(zeta > 1.0)) throw std::invalid_argument("theory zeta must exceed 1");
  if (samples < 1) throw std::invalid_argument("theory samples must be at least 1");
}

double TheoryConfig::stabil_radius() const noexcept { return std::max(1.0, 2.0 * M()); }

double a_tau_root(double tau) {
  if (!(tau >= 0.0) || tau > kTauMax * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "tau = " << tau << " outside [0, e^{-1}/2]";
    throw InapplicableBound(os.str());
  }
  if (tau == 0.0) return 0.0;
  if (tau >= kTauMax) return 0.5;
  // a e^{-2a} increases on [0, 1/2].
  double lo = 0.0;
  double hi = 0.5;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mid * std::exp(-2.0 * mid) < tau) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rl = std::abs(lo * std::exp(-2.0 * lo) - tau);
  const double rh = std::abs(hi * std::exp(-2.0 * hi) - tau);
  return rl <= rh ? lo : hi;
}

CompatibilityBounds oracle_bounds_t32(double K, double zeta, Index d_star, double lambda1,
                                      double compat, double cif_q, double q) {
  if (!(K > 0.0) || !(zeta > 1.0) || d_star < 1 || !(lambda1 >= 0.0) || !(q >= 1.0)) {
    throw std::invalid_argument("oracle_bounds_t32: invalid arguments");
  }
  if (!(compat > 0.0)) throw InapplicableBound("compatibility factor is zero");
  CompatibilityBounds out;
  const double d = static_cast<double>(d_star);
  out.tau = K * (zeta + 1.0) * d * lambda1 / (2.0 * compat * compat);
  if (out.tau > kTauMax) {
    std::ostringstream os;
    os << "tau = " << out.tau << " exceeds e^{-1}/2; the compatibility bound does not apply";
    throw InapplicableBound(os.str());
  }
  out.a_tau = a_tau_root(out.tau);
  const double growth = std::exp(2.0 * out.a_tau);
  out.l1_bound = growth * (zeta + 1.0) * d * lambda1 / (2.0 * compat * compat);
  out.lq_bound = cif_q > 0.0
                     ? 2.0 * growth * zeta * std::pow(d, 1.0 / q) * lambda1 / ((zeta + 1.0) * cif_q)
                     : kInf;
  return out;
}

CompatibilityBounds oracle_bounds_t32(const Matrix& sigma, const ConeSpec& cone,
                                      const Penalty& pen, const TheoryConfig& cfg, double q) {
  cfg.validate();
  pen.validate();
  const double c = compatibility_factor(sigma, cone, cfg.samples, cfg.seed);
  const double cq = weak_cif(sigma, cone, q, cfg.samples, derive_seed(cfg.seed, 1));
  return oracle_bounds_t32(cfg.L_or_K, cone.slope, cone.d_star(), pen.lambda1, c, cq, q);
}

namespace {

// theta e^x / (theta + e^x)^2 without overflow.
double x_factor(double x, double theta) {
  return theta * kernel::mean_fraction(x, theta) * kernel::inv_theta_plus_exp(x, theta);
}

}  // namespace

double a_constant(double theta, double L, double B, double epsilon_n) {
  if (!(theta > 0.0) || !(L > 0.0) || !(B > 0.0) || !(epsilon_n >= 0.0)) {
    throw std::invalid_argument("a_constant: invalid arguments");
  }
  const double M = 16.0 * B + 2.0 * epsilon_n;
  const double xb = L * (M + B);
  const double yb = L * B;
  auto g = [&](double x, double y) { return 0.5 * x_factor(x, theta) * (std::exp(y) + theta); };
  double best = kInf;
  for (double x : {-xb, xb}) {
    for (double y : {-yb, yb}) best = std::min(best, g(x, y));
  }
  const double crit = std::log(theta);
  if (std::abs(crit) < xb) {
    for (double y : {-yb, yb}) best = std::min(best, g(crit, y));
  }
  return best;
}

StabilBounds oracle_bounds_t34(const Penalty& pen, const TheoryConfig& cfg, double theta,
                               Index d_star, double stabil_k) {
  pen.validate();
  cfg.validate();
  if (!(stabil_k > 0.0)) throw std::invalid_argument("Stabil constant k must be positive");
  if (d_star < 0) throw std::invalid_argument("d_star must be nonnegative");
  StabilBounds out;
  out.a_const = a_constant(theta, cfg.L_or_K, cfg.B, cfg.epsilon_n);
  const double target = pen.lambda1 / (8.0 * cfg.B);
  out.lambda2_rule_ok =
      std::abs(pen.lambda2 - target) <= 1e-12 * std::max({1.0, pen.lambda2, target});

  const double a = out.a_const;
  const double d = static_cast<double>(d_star);
  const double l1 = pen.lambda1;
  const double eps = cfg.epsilon_n;
  const double denom = a * stabil_k + 2.0 * pen.lambda2;
  auto eps_term = [&](double coef) {
    if (eps == 0.0) return 0.0;
    return coef * eps;
  };
  const double first_l1 = denom > 0.0 ? 2.25 * 2.25 * l1 * d / denom : (l1 * d > 0.0 ? kInf : 0.0);
  const double one_plus = l1 > 0.0 ? 1.0 + a / l1 : kInf;
  out.l1_bound = first_l1 + eps_term(one_plus);

  const double a_denom = a * denom;
  const double first_pred =
      a_denom > 0.0 ? 17.71875 * d * l1 * l1 / a_denom : (d * l1 > 0.0 ? kInf : 0.0);
  const double pred_coef = a > 0.0 ? 4.5 * l1 / a + 3.5 : kInf;
  out.pred_bound = first_pred + eps_term(pred_coef);
  return out;
}

EventE event_E_check(const Vector& beta_star, const Dataset& data, const Penalty& pen,
                     double zeta) {
  pen.validate();
  if (!(zeta > 1.0)) throw std::invalid_argument("event E needs zeta > 1");
  EventE out;
  out.z_star = (nb_score(beta_star, data) + 2.0 * pen.lambda2 * beta_star).lpNorm<Eigen::Infinity>();
  out.threshold = pen.lambda1 * (zeta - 1.0) / (zeta + 1.0);
  out.holds = out.z_star <= out.threshold;
  return out;
}

EventA event_A_check(const Vector& beta_hat, const Vector& beta_star, const Dataset& data,
                     double lambda1) {
  const Vector eta_star = kernel::linear_predictor(beta_star, data);
  const Vector eta_hat = kernel::linear_predictor(beta_hat, data);
  const double theta = data.theta();
  const double inv_n = 1.0 / static_cast<double>(data.n());
  auto stat = [&](const Vector& eta_tilde) {
    Vector r(data.n());
    for (Index i = 0; i < data.n(); ++i) {
      const double mean = std::exp(eta_star[i]);
      r[i] = (data.y()[i] - mean) * theta * kernel::inv_theta_plus_exp(eta_tilde[i], theta);
    }
    return (data.X().transpose() * r * inv_n).lpNorm<Eigen::Infinity>();
  };
  EventA out;
  out.stat_at_truth = stat(eta_star);
  out.stat_at_estimate = stat(eta_hat);
  const double limit = lambda1 / 4.0;
  out.holds = out.stat_at_truth <= limit && out.stat_at_estimate <= limit;
  return out;
}

GroupingBound grouping_bound(const Vector& beta_hat, const Dataset& data, const Penalty& pen,
                             Index k, Index l) {
  pen.validate();
  if (!(pen.lambda2 > 0.0)) throw std::invalid_argument("grouping bound needs lambda2 > 0");
  if (k < 0 || l < 0 || k >= data.p() || l >= data.p()) {
    throw std::out_of_range("grouping bound column index out of range");
  }
  const Vector eta = kernel::linear_predictor(beta_hat, data);
  const Vector r = kernel::residual(eta, data.y(), data.theta());
  const auto xk = data.X().col(k);
  const auto xl = data.X().col(l);
  const double n = static_cast<double>(data.n());
  GroupingBound out;
  out.lhs = std::abs(beta_hat[k] - beta_hat[l]);
  // |theta (e^u - y) / (theta + e^u)| is |r_i|.
  out.rhs = (xk - xl).cwiseAbs().dot(r.cwiseAbs()) / (2.0 * n * pen.lambda2);
  out.rho = xk.dot(xl) / n;
  return out;
}

double honest_dimension(double A, double delta) {
  if (!(A > 1.0)) throw std::invalid_argument("honest_dimension needs A > 1");
  if (!(delta > 0.0)) throw std::invalid_argument("honest_dimension needs delta > 0");
  const double a2 = A * A;
  return std::exp(std::log(5.0 / (std::pow(2.0, a2) * delta)) / (a2 - 1.0));
}

TheoryReport theory_report(const Dataset& data, const Vector& beta_star, const Penalty& pen,
                           const TheoryConfig& cfg, double q, const Matrix& stabil_sigma,
                           int stabil_budget) {
  cfg.validate();
  pen.validate();
  TheoryReport rep;
  rep.K = cfg.L_or_K;
  rep.q = q;
  const IndexSet H = support_of(beta_star);
  rep.d_star = static_cast<Index>(H.size());

  const EventE e = event_E_check(beta_star, data, pen, cfg.zeta);
  rep.z_star = e.z_star;
  rep.event_E = e.holds;

  rep.a_tau = rep.l1_bound_t32 = rep.lq_bound_t32 = kNaN;
  if (H.empty()) {
    rep.tau = 0.0;
    rep.l1_bound_t34 = rep.pred_bound_t34 = kNaN;
    rep.a_const = a_constant(data.theta(), cfg.L_or_K, cfg.B, cfg.epsilon_n);
    return rep;
  }

  const Matrix hess = nb_hessian(beta_star, data);
  const ConeSpec cone{cfg.zeta, H, 0.0};
  rep.compat = compatibility_factor(hess, cone, cfg.samples, cfg.seed);
  if (rep.compat > 0.0) {
    const double d = static_cast<double>(rep.d_star);
    rep.tau = rep.K * (cfg.zeta + 1.0) * d * pen.lambda1 / (2.0 * rep.compat * rep.compat);
  } else {
    rep.tau = kInf;
  }
  rep.cif_q = rep.tau <= kTauMax ? weak_cif(hess, cone, q, cfg.samples, derive_seed(cfg.seed, 1)) : kNaN;
  try {
    const auto b = oracle_bounds_t32(rep.K, cfg.zeta, rep.d_star, pen.lambda1, rep.compat,
                                     rep.cif_q, q);
    rep.t32_applicable = true;
    rep.a_tau = b.a_tau;
    rep.l1_bound_t32 = b.l1_bound;
    rep.lq_bound_t32 = b.lq_bound;
  } catch (const InapplicableBound&) {
    rep.t32_applicable = false;
  }

  const ConeSpec stabil_cone{3.5, H, cfg.epsilon_n};
  const StabilEstimate st = stabil_constant(stabil_sigma, stabil_cone, cfg.stabil_radius(),
                                            stabil_budget, derive_seed(cfg.seed, 2));
  rep.stabil_k = st.k;
  rep.stabil_degenerate = st.degenerate;
  if (st.k > 0.0) {
    const StabilBounds sb = oracle_bounds_t34(pen, cfg, data.theta(), rep.d_star, st.k);
    rep.l1_bound_t34 = sb.l1_bound;
    rep.pred_bound_t34 = sb.pred_bound;
    rep.a_const = sb.a_const;
  } else {
    rep.l1_bound_t34 = rep.pred_bound_t34 = kInf;
    rep.a_const = a_constant(data.theta(), cfg.L_or_K, cfg.B, cfg.epsilon_n);
  }
  return rep;
}

}  // namespace nbelnet
