#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nbelnet/types.hpp"

namespace nbelnet {

struct SolverConfig {
  double tol = 1e-8;       ///< KKT tolerance, also the convergence criterion
  int max_iter = 10000;
  double step_init = 1.0;
  double backtrack = 0.5;  ///< step shrink factor in (0, 1)

  void validate() const;
};

/// Per-coordinate optimality residuals of the elastic-net KKT system.
struct KktReport {
  Vector residuals;
  double max_violation = 0.0;
  bool satisfied = false;
  /// False when lambda2 == 0: the residuals then certify a necessary
  /// condition only.
  bool exact = true;
};

struct Fit {
  Vector beta;
  Penalty penalty;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  KktReport kkt;
  /// Objective after every accepted step, starting with the initial point.
  std::vector<double> objective_history;
  std::vector<std::string> warnings;
};

/// Elastic-net penalized NB regression by proximal gradient with
/// backtracking. Converges when the KKT residual drops below config.tol.
Fit fit(const Dataset& data, const Penalty& pen, const SolverConfig& config = {},
        const std::optional<Vector>& beta0 = std::nullopt);

/// Nonzero coordinates: |g_k + sgn(b_k)(lambda1 + 2 lambda2 |b_k|)|.
/// Zero coordinates: max(0, |g_k| - lambda1). g is the loss gradient.
KktReport kkt_check(const Vector& beta, const Dataset& data, const Penalty& pen, double tol);

/// Warm-started path over a descending lambda1 grid at fixed lambda2.
std::vector<Fit> fit_path(const Dataset& data, const std::vector<double>& lambda1_grid,
                          double lambda2, const SolverConfig& config = {});

/// Exhaustive grid minimizer of the objective over [-box, box]^p for p <= 3.
/// Each refinement level re-grids a +-2 step window around the incumbent at
/// a tenth of the step.
Vector brute_force_fit(const Dataset& data, const Penalty& pen, double box, double step,
                       int refine_levels = 0);

/// Coordinatewise prox of t*(lambda1 ||.||_1 + lambda2 ||.||_2^2).
Vector elastic_net_prox(const Vector& z, double t, const Penalty& pen);

}  // namespace nbelnet
