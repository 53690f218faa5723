// Replication engine and the registered Monte Carlo experiments.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "nbelnet/debias.hpp"
#include "nbelnet/model.hpp"
#include "nbelnet/parallel.hpp"
#include "nbelnet/selection.hpp"
#include "nbelnet/simulate.hpp"

namespace nbelnet {

Penalty ExperimentParams::resolve(Index n, Index p) const {
  Penalty pen = penalty;
  if (lambda1_rate > 0.0) {
    pen.lambda1 = lambda1_rate * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
  }
  if (lambda2_ratio > 0.0) pen.lambda2 = lambda2_ratio * pen.lambda1;
  pen.validate();
  return pen;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double flag(bool b) { return b ? 1.0 : 0.0; }

using Row = std::vector<double>;
using Runner = std::function<Row(const SimInstance&, const Penalty&, const ExperimentParams&,
                                 std::uint64_t)>;

struct Experiment {
  std::string name;
  std::vector<std::string> columns;
  Runner run;
};

Matrix sample_gram(const Dataset& data) {
  Matrix G = Matrix::Zero(data.p(), data.p());
  G.selfadjointView<Eigen::Lower>().rankUpdate(data.X().transpose(), 1.0 / static_cast<double>(data.n()));
  return G.selfadjointView<Eigen::Lower>();
}

Row run_fit_error(const SimInstance& inst, const Penalty& pen, const ExperimentParams& prm,
                  std::uint64_t) {
  const Fit f = fit(inst.data, pen, prm.solver);
  const Vector err = f.beta - inst.beta_star;
  return {err.lpNorm<1>(), err.norm(), err.lpNorm<Eigen::Infinity>(),
          static_cast<double>(support_of(f.beta, prm.zero_tol).size()), flag(f.converged),
          static_cast<double>(f.iterations), f.kkt.max_violation};
}

Row run_oracle_check(const SimInstance& inst, const Penalty& pen, const ExperimentParams& prm,
                     std::uint64_t sub_seed) {
  const Dataset& data = inst.data;
  const Fit f = fit(data, pen, prm.solver);
  const Vector err = f.beta - inst.beta_star;
  const double l1_error = err.lpNorm<1>();
  const double pred_error = (data.X() * err).squaredNorm() / static_cast<double>(data.n());

  TheoryConfig cfg = prm.theory;
  cfg.L_or_K = data.max_abs_x();
  cfg.seed = derive_seed(sub_seed, 7);
  const TheoryReport rep =
      theory_report(data, inst.beta_star, pen, cfg, 2.0, sample_gram(data), prm.stabil_budget);
  const EventA ev_a = event_A_check(f.beta, inst.beta_star, data, pen.lambda1);

  const bool eligible = rep.event_E && rep.t32_applicable;
  const bool violated_t32 = eligible && l1_error > rep.l1_bound_t32;
  const bool within_t34 = l1_error <= rep.l1_bound_t34;
  const bool pred_within = pred_error <= rep.pred_bound_t34;
  return {l1_error,
          pred_error,
          flag(rep.event_E),
          rep.z_star,
          flag(rep.t32_applicable),
          rep.tau,
          rep.compat,
          rep.l1_bound_t32,
          flag(eligible),
          flag(violated_t32),
          rep.stabil_k,
          rep.a_const,
          rep.l1_bound_t34,
          flag(within_t34),
          rep.pred_bound_t34,
          flag(pred_within),
          flag(ev_a.holds),
          flag(f.converged)};
}

Row run_sign_consistency(const SimInstance& inst, const Penalty& pen, const ExperimentParams& prm,
                         std::uint64_t) {
  const Dataset& data = inst.data;
  const Fit f = fit(data, pen, prm.solver);
  SelectionReport sel = support_and_signs(f.beta, prm.zero_tol);
  compare_to_truth(sel, inst.beta_star);
  const IndexSet H = support_of(inst.beta_star);
  const IndexSet Hc = complement(H, data.p());
  const double linf = (f.beta - inst.beta_star).lpNorm<Eigen::Infinity>();

  const bool e1 = H.empty() || linf < sel.min_signal;
  const Vector g_star = nb_score(inst.beta_star, data);
  Vector beta_H = Vector::Zero(data.p());
  for (Index j : H) beta_H[j] = f.beta[j];
  const Vector g_H = nb_score(beta_H, data);
  double e2_stat = 0.0;
  double e3_stat = 0.0;
  for (Index j : Hc) {
    e2_stat = std::max(e2_stat, std::abs(g_star[j]));
    e3_stat = std::max(e3_stat, std::abs(g_H[j] - g_star[j]));
  }
  const bool e2 = e2_stat <= prm.eta * pen.lambda1;
  const bool e3 = e3_stat <= (1.0 - prm.eta) * pen.lambda1;
  return {flag(sel.sign_match), flag(e1), flag(e2), flag(e3), linf,
          static_cast<double>(sel.H_hat.size()), flag(f.converged)};
}

Row run_honest_selection(const SimInstance& inst, const Penalty& pen, const ExperimentParams& prm,
                         std::uint64_t sub_seed) {
  const Dataset& data = inst.data;
  const Fit f = fit(data, pen, prm.solver);
  SelectionReport sel = support_and_signs(f.beta, prm.zero_tol);
  compare_to_truth(sel, inst.beta_star);
  const IndexSet H = support_of(inst.beta_star);
  const double l1_error = (f.beta - inst.beta_star).lpNorm<1>();

  TheoryConfig cfg = prm.theory;
  cfg.L_or_K = data.max_abs_x();
  const double a_const = a_constant(data.theta(), cfg.L_or_K, cfg.B, cfg.epsilon_n);
  double stabil_k = kNaN;
  double B0 = kNaN;
  double free_threshold = 3.0 * pen.lambda1;
  if (!H.empty()) {
    const ConeSpec cone{3.5, H, cfg.epsilon_n};
    const StabilEstimate st = stabil_constant(sample_gram(data), cone, cfg.stabil_radius(),
                                              prm.stabil_budget, derive_seed(sub_seed, 11));
    stabil_k = st.k;
    const DetectionThresholds th = detection_thresholds(
        pen, cfg, static_cast<Index>(H.size()), st.k, a_const);
    B0 = th.B0;
    free_threshold = th.free_threshold;
  }
  const bool l1_ge = !H.empty() && l1_error >= sel.min_signal;
  const bool hvs_ok = sel.contains_H || l1_ge;
  const bool clears_free = H.empty() || sel.min_signal >= free_threshold;
  const bool clears_B0 = H.empty() || sel.min_signal >= B0;
  return {flag(sel.contains_H), flag(sel.subset_of_H), flag(sel.equals_H), l1_error,
          flag(l1_ge),          flag(hvs_ok),          flag(clears_free), flag(clears_B0),
          free_threshold,       B0,                    stabil_k,          flag(f.converged)};
}

Row run_debias_coverage(const SimInstance& inst, const Penalty& pen, const ExperimentParams& prm,
                        std::uint64_t) {
  const Dataset& data = inst.data;
  if (prm.target < 0 || prm.target >= data.p()) throw std::out_of_range("debias target out of range");
  const Fit f = fit(data, pen, prm.solver);
  const double lam_node = prm.lambda_node >= 0.0 ? prm.lambda_node : default_lambda_node(data.n(), data.p());
  const Matrix theta_hat = nodewise_inverse(data, f.beta, lam_node);
  const DebiasResult d = debias(f.beta, data, theta_hat, prm.level);
  const Vector kkt_form = debias_kkt_form(f.beta, data, pen, theta_hat);
  const double gap = (d.b_hat - kkt_form).lpNorm<Eigen::Infinity>();
  const double tol = debias_form_tolerance(theta_hat, prm.solver.tol);
  const Index t = prm.target;
  const double truth = inst.beta_star[t];
  const bool covered = d.ci_low[t] <= truth && truth <= d.ci_high[t];
  return {flag(covered), d.b_hat[t], d.se[t], d.b_hat[t] - truth, gap, tol,
          flag(f.converged && gap <= tol), flag(f.converged)};
}

const std::vector<Experiment>& registry() {
  static const std::vector<Experiment> reg = {
      {"fit-error",
       {"l1_error", "l2_error", "linf_error", "support_size", "converged", "iterations",
        "kkt_max_violation"},
       run_fit_error},
      {"oracle-check",
       {"l1_error", "pred_error", "event_E", "z_star", "t32_applicable", "tau", "compat",
        "l1_bound_t32", "eligible_t32", "violated_t32", "stabil_k", "a_const", "l1_bound_t34",
        "within_t34", "pred_bound_t34", "pred_within_t34", "event_A", "converged"},
       run_oracle_check},
      {"sign-consistency",
       {"sign_match", "E1", "E2", "E3", "linf_error", "support_size", "converged"},
       run_sign_consistency},
      {"honest-selection",
       {"contains_H", "subset_of_H", "equals_H", "l1_error", "l1_error_ge_min_signal",
        "hvs_implication_ok", "clears_free_threshold", "clears_B0", "free_threshold", "B0",
        "stabil_k", "converged"},
       run_honest_selection},
      {"debias-coverage",
       {"covered", "b_hat", "se", "bias", "form_gap", "form_tol", "form_ok", "converged"},
       run_debias_coverage},
  };
  return reg;
}

std::size_t column_of(const ReplicationSummary& s, const std::string& name) {
  const auto it = std::find(s.columns.begin(), s.columns.end(), name);
  return static_cast<std::size_t>(it - s.columns.begin());
}

double column_sum(const ReplicationSummary& s, const std::string& name) {
  const std::size_t c = column_of(s, name);
  double total = 0.0;
  for (const auto& row : s.rows) total += row[c];
  return total;
}

// Mean over finite entries; NaN when there are none.
double column_mean(const ReplicationSummary& s, std::size_t c) {
  double total = 0.0;
  int count = 0;
  for (const auto& row : s.rows) {
    if (std::isfinite(row[c])) {
      total += row[c];
      ++count;
    }
  }
  return count > 0 ? total / count : kNaN;
}

double column_median(const ReplicationSummary& s, std::size_t c) {
  std::vector<double> v;
  for (const auto& row : s.rows) {
    if (std::isfinite(row[c])) v.push_back(row[c]);
  }
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void add_experiment_metrics(ReplicationSummary& s) {
  const double R = static_cast<double>(s.replicates);
  auto& m = s.metrics;
  if (s.experiment == "oracle-check") {
    const double eligible = column_sum(s, "eligible_t32");
    const double violations = column_sum(s, "violated_t32");
    m["event_E_rate"] = column_sum(s, "event_E") / R;
    m["event_A_rate"] = column_sum(s, "event_A") / R;
    m["t32_applicable_count"] = column_sum(s, "t32_applicable");
    m["t32_eligible_count"] = eligible;
    m["t32_violation_count"] = violations;
    m["t32_validity_rate"] = eligible > 0.0 ? 1.0 - violations / eligible : kNaN;
    m["t34_within_rate"] = column_sum(s, "within_t34") / R;
    m["t34_pred_within_rate"] = column_sum(s, "pred_within_t34") / R;
    const std::size_t cE = column_of(s, "event_E");
    const std::size_t cW = column_of(s, "within_t34");
    double e_count = 0.0;
    double e_within = 0.0;
    for (const auto& row : s.rows) {
      if (row[cE] > 0.5) {
        e_count += 1.0;
        e_within += row[cW];
      }
    }
    m["t34_within_rate_given_E"] = e_count > 0.0 ? e_within / e_count : kNaN;
  } else if (s.experiment == "sign-consistency") {
    m["sign_match_rate"] = column_sum(s, "sign_match") / R;
    m["E1_rate"] = column_sum(s, "E1") / R;
    m["E2_rate"] = column_sum(s, "E2") / R;
    m["E3_rate"] = column_sum(s, "E3") / R;
  } else if (s.experiment == "honest-selection") {
    m["P_contains_H"] = column_sum(s, "contains_H") / R;
    m["P_subset_of_H"] = column_sum(s, "subset_of_H") / R;
    m["P_equals_H"] = column_sum(s, "equals_H") / R;
    m["P_l1_error_ge_min_signal"] = column_sum(s, "l1_error_ge_min_signal") / R;
    m["hvs_implication_failures"] = R - column_sum(s, "hvs_implication_ok");
    m["clears_free_threshold_rate"] = column_sum(s, "clears_free_threshold") / R;
    m["clears_B0_rate"] = column_sum(s, "clears_B0") / R;
  } else if (s.experiment == "debias-coverage") {
    m["coverage"] = column_sum(s, "covered") / R;
    m["form_ok_rate"] = column_sum(s, "form_ok") / R;
    const std::size_t c = column_of(s, "b_hat");
    const double mean = column_mean(s, c);
    double ss = 0.0;
    for (const auto& row : s.rows) ss += (row[c] - mean) * (row[c] - mean);
    m["sd_b_hat"] = s.replicates > 1 ? std::sqrt(ss / (R - 1.0)) : kNaN;
  } else if (s.experiment == "fit-error") {
    m["converged_rate"] = column_sum(s, "converged") / R;
  }
}

}  // namespace

std::vector<std::string> registered_experiments() {
  std::vector<std::string> names;
  for (const auto& e : registry()) names.push_back(e.name);
  return names;
}

ReplicationSummary run_replications(const SimSpec& sim, const std::string& experiment,
                                    int replicates, std::uint64_t seed,
                                    const ExperimentParams& params, int threads) {
  sim.validate();
  params.solver.validate();
  params.theory.validate();
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  const auto& reg = registry();
  const auto it = std::find_if(reg.begin(), reg.end(),
                               [&](const Experiment& e) { return e.name == experiment; });
  if (it == reg.end()) {
    std::string known;
    for (const auto& e : reg) known += (known.empty() ? "" : ", ") + e.name;
    throw std::invalid_argument("unknown experiment '" + experiment + "' (known: " + known + ")");
  }
  const Penalty pen = params.resolve(sim.n, sim.p);

  ReplicationSummary s;
  s.experiment = experiment;
  s.replicates = replicates;
  s.columns = it->columns;
  s.rows.assign(static_cast<std::size_t>(replicates), {});
  parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
    const std::uint64_t sub = derive_seed(seed, r);
    const SimInstance inst = simulate(sim, sub);
    s.rows[r] = it->run(inst, pen, params, sub);
  });

  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    s.metrics["mean_" + s.columns[c]] = column_mean(s, c);
    s.metrics["median_" + s.columns[c]] = column_median(s, c);
  }
  s.metrics["lambda1"] = pen.lambda1;
  s.metrics["lambda2"] = pen.lambda2;
  add_experiment_metrics(s);
  return s;
}

}  // namespace nbelnet
