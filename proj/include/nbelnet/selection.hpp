#pragma once

#include <cstdint>
#include <limits>

#include "nbelnet/simulate.hpp"
#include "nbelnet/theory.hpp"
#include "nbelnet/types.hpp"

namespace nbelnet {

struct SelectionReport {
  IndexSet H_hat;
  Vector signs;  ///< entries in {-1, 0, +1}
  double min_signal = std::numeric_limits<double>::quiet_NaN();
  bool contains_H = false;
  bool subset_of_H = false;
  bool equals_H = false;
  bool sign_match = false;
  double threshold_B0 = std::numeric_limits<double>::quiet_NaN();
  double threshold_free = std::numeric_limits<double>::quiet_NaN();
};

/// H_hat = { j : |b_j| > zero_tol } and the matching sign vector.
SelectionReport support_and_signs(const Vector& beta_hat, double zero_tol = 0.0);

/// Fills the truth comparison fields of `report` from beta_star.
void compare_to_truth(SelectionReport& report, const Vector& beta_star);

struct DetectionThresholds {
  double B0 = 0.0;
  double free_threshold = 0.0;
};

/// B0 is the l1 bound of oracle_bounds_t34 (same formula); the
/// constant-free threshold is 3 lambda1 + 3 (1 + a/lambda1) eps_n.
DetectionThresholds detection_thresholds(const Penalty& pen, const TheoryConfig& cfg,
                                         Index d_star, double stabil_k, double a_const);

struct ConditionReport {
  bool identifiable_ok = false;
  double max_offdiag_rho = 0.0;
  bool wcc1_ok = false;
  double wcc1_offdiag = 0.0;
  double wcc1_diag = 0.0;
  bool wcc2_ok = false;
  double wcc2_offdiag = 0.0;
  double wcc2_diag = 0.0;
  double irrepresentable_I = 0.0;
  bool ussc_ok = false;
  double min_signal = 0.0;
  /// The weighted correlations use the unobservable Taylor points; both
  /// endpoints x'b_hat and x'b* are evaluated and the worse one is kept.
  bool endpoint_approximation = true;
};

/// Identifiable, weighted correlation (1) and (2) and irrepresentable
/// statistics on H. Thresholds are h/(theta d*), h L1/(theta d*) and
/// h L2/(theta d*). The uniform signal strength check compares
/// min_{j in H} |b*_j| with ussc_bound.
ConditionReport check_design_conditions(const Dataset& data, const Vector& beta_hat,
                                        const Vector& beta_star, const IndexSet& H, double h,
                                        double theta, double L1 = 1.0, double L2 = 1.0,
                                        double ussc_bound = std::numeric_limits<double>::infinity());

/// Frequency of sgn(b_hat) = sgn(b*) together with the E1, E2, E3 events.
ReplicationSummary sign_consistency_experiment(const SimSpec& sim, const Penalty& pen,
                                               int replicates, std::uint64_t seed,
                                               ExperimentParams params = {}, int threads = 1);

/// Frequencies of H in H_hat, H_hat in H, H = H_hat and ||b_hat - b*||_1 >= beta_*.
ReplicationSummary honest_selection_experiment(const SimSpec& sim, const Penalty& pen,
                                               int replicates, std::uint64_t seed,
                                               ExperimentParams params = {}, int threads = 1);

}  // namespace nbelnet
