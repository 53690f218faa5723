#include "nbelnet/selection.hpp"

#include <algorithm>
#include <cmath>

#include "nbelnet/model.hpp"

namespace nbelnet {

SelectionReport support_and_signs(const Vector& beta_hat, double zero_tol) {
  if (!(zero_tol >= 0.0)) throw std::invalid_argument("zero_tol must be nonnegative");
  SelectionReport rep;
  rep.signs = Vector::Zero(beta_hat.size());
  for (Index j = 0; j < beta_hat.size(); ++j) {
    if (std::abs(beta_hat[j]) > zero_tol) {
      rep.H_hat.push_back(j);
      rep.signs[j] = beta_hat[j] > 0.0 ? 1.0 : -1.0;
    }
  }
  return rep;
}

void compare_to_truth(SelectionReport& report, const Vector& beta_star) {
  require_length(beta_star, report.signs.size(), "beta_star");
  const IndexSet H = support_of(beta_star);
  const auto& Hh = report.H_hat;
  report.contains_H = std::includes(Hh.begin(), Hh.end(), H.begin(), H.end());
  report.subset_of_H = std::includes(H.begin(), H.end(), Hh.begin(), Hh.end());
  report.equals_H = report.contains_H && report.subset_of_H;
  report.sign_match = true;
  for (Index j = 0; j < beta_star.size(); ++j) {
    const double s = beta_star[j] > 0.0 ? 1.0 : (beta_star[j] < 0.0 ? -1.0 : 0.0);
    if (s != report.signs[j]) {
      report.sign_match = false;
      break;
    }
  }
  report.min_signal = std::numeric_limits<double>::quiet_NaN();
  for (Index j : H) {
    const double m = std::abs(beta_star[j]);
    if (!(report.min_signal <= m)) report.min_signal = m;
  }
}

DetectionThresholds detection_thresholds(const Penalty& pen, const TheoryConfig& cfg,
                                         Index d_star, double stabil_k, double a_const) {
  pen.validate();
  cfg.validate();
  DetectionThresholds out;
  const double l1 = pen.lambda1;
  const double eps_part =
      cfg.epsilon_n == 0.0 ? 0.0 : (l1 > 0.0 ? 1.0 + a_const / l1 : std::numeric_limits<double>::infinity()) * cfg.epsilon_n;
  const double denom = a_const * stabil_k + 2.0 * pen.lambda2;
  const double d = static_cast<double>(d_star);
  const double first = denom > 0.0 ? 2.25 * 2.25 * l1 * d / denom
                                   : (l1 * d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  out.B0 = first + eps_part;
  out.free_threshold = 3.0 * l1 + 3.0 * eps_part;
  return out;
}

namespace {

struct WeightedStats {
  double offdiag = 0.0;
  double diag = 0.0;
};

WeightedStats weighted_correlations(const Matrix& XH, const Vector& w) {
  const double n = static_cast<double>(XH.rows());
  const Matrix G = XH.transpose() * w.asDiagonal() * XH / n;
  WeightedStats s;
  for (Index k = 0; k < G.rows(); ++k) {
    s.diag = std::max(s.diag, std::abs(G(k, k)));
    for (Index l = 0; l < G.cols(); ++l) {
      if (k != l) s.offdiag = std::max(s.offdiag, std::abs(G(k, l)));
    }
  }
  return s;
}

}  // namespace

ConditionReport check_design_conditions(const Dataset& data, const Vector& beta_hat,
                                        const Vector& beta_star, const IndexSet& H, double h,
                                        double theta, double L1, double L2, double ussc_bound) {
  if (H.empty()) throw std::invalid_argument("check_design_conditions needs a nonempty H");
  require_length(beta_hat, data.p(), "beta_hat");
  require_length(beta_star, data.p(), "beta_star");
  if (!(h > 0.0) || !(theta > 0.0)) throw std::invalid_argument("h and theta must be positive");
  if (!(L1 >= 1.0) || !(L2 >= 1.0)) throw std::invalid_argument("L1 and L2 must be at least 1");
  for (Index j : H) {
    if (j < 0 || j >= data.p()) throw std::out_of_range("H index out of range");
  }
  const Index n = data.n();
  const double d = static_cast<double>(H.size());
  const double base = h / (theta * d);

  Matrix XH(n, static_cast<Index>(H.size()));
  Vector bh_H(XH.cols());
  Vector bs_H(XH.cols());
  for (std::size_t c = 0; c < H.size(); ++c) {
    XH.col(static_cast<Index>(c)) = data.X().col(H[c]);
    bh_H[static_cast<Index>(c)] = beta_hat[H[c]];
    bs_H[static_cast<Index>(c)] = beta_star[H[c]];
  }

  ConditionReport rep;
  rep.max_offdiag_rho = weighted_correlations(XH, Vector::Ones(n)).offdiag;
  rep.identifiable_ok = rep.max_offdiag_rho <= base;

  const Vector eta_hat = kernel::linear_predictor(beta_hat, data);
  const Vector eta_star = kernel::linear_predictor(beta_star, data);
  for (const Vector* eta : {&eta_hat, &eta_star}) {
    Vector w1(n);
    Vector w2(n);
    for (Index i = 0; i < n; ++i) {
      const double u = (*eta)[i];
      const double inv = kernel::inv_theta_plus_exp(u, theta);
      const double frac = kernel::mean_fraction(u, theta);
      w1[i] = theta * frac * inv;
      w2[i] = data.y()[i] * frac * inv;
    }
    for (const Vector& w : {w1, Vector((1.0 - w1.array()).matrix())}) {
      const WeightedStats s = weighted_correlations(XH, w);
      rep.wcc1_offdiag = std::max(rep.wcc1_offdiag, s.offdiag);
      rep.wcc1_diag = std::max(rep.wcc1_diag, s.diag);
    }
    const WeightedStats s2 = weighted_correlations(XH, w2);
    rep.wcc2_offdiag = std::max(rep.wcc2_offdiag, s2.offdiag);
    rep.wcc2_diag = std::max(rep.wcc2_diag, s2.diag);
  }
  rep.wcc1_ok = rep.wcc1_offdiag <= base && rep.wcc1_diag <= base * L1;
  rep.wcc2_ok = rep.wcc2_offdiag <= base && rep.wcc2_diag <= base * L2;

  const Vector u_hat = XH * bh_H;
  const Vector v = XH * (bh_H - bs_H);
  for (Index i = 0; i < n; ++i) {
    if (std::abs(u_hat[i]) > kEtaClamp) throw DomainError("linear predictor on H overflows");
    const double ratio = std::abs(v[i]) < 1e-12 ? 1.0 + 0.5 * v[i] : std::expm1(v[i]) / v[i];
    const double lead = theta * (theta + data.y()[i]) * kernel::inv_theta_plus_exp(u_hat[i], theta);
    rep.irrepresentable_I = std::max(rep.irrepresentable_I, std::abs(lead * ratio));
  }

  rep.min_signal = std::numeric_limits<double>::infinity();
  for (Index j : H) rep.min_signal = std::min(rep.min_signal, std::abs(beta_star[j]));
  rep.ussc_ok = rep.min_signal >= ussc_bound;
  return rep;
}

ReplicationSummary sign_consistency_experiment(const SimSpec& sim, const Penalty& pen,
                                               int replicates, std::uint64_t seed,
                                               ExperimentParams params, int threads) {
  params.penalty = pen;
  return run_replications(sim, "sign-consistency", replicates, seed, params, threads);
}

ReplicationSummary honest_selection_experiment(const SimSpec& sim, const Penalty& pen,
                                               int replicates, std::uint64_t seed,
                                               ExperimentParams params, int threads) {
  params.penalty = pen;
  return run_replications(sim, "honest-selection", replicates, seed, params, threads);
}

}  // namespace nbelnet
