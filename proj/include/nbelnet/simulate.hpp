#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nbelnet/rng.hpp"
#include "nbelnet/solver.hpp"
#include "nbelnet/theory.hpp"
#include "nbelnet/types.hpp"

namespace nbelnet {

enum class DesignKind { IidGaussian, Ar1, Equicorrelated, DuplicatedPairs };

DesignKind parse_design(const std::string& name);
std::string to_string(DesignKind kind);

struct SimSpec {
  Index n = 200;
  Index p = 50;
  Index d_star = 3;
  double beta_min = 1.0;
  double beta_max = 1.0;  ///< magnitudes are uniform on [beta_min, beta_max]
  DesignKind design = DesignKind::IidGaussian;
  double rho = 0.0;
  double clamp_L = 5.0;   ///< raw entries are truncated to [-L, L]
  double theta = 2.0;
  std::uint64_t seed = 0;
  bool random_signs = false;  ///< signs alternate +,-,+,... unless set

  void validate() const;
};

/// Clamped, centred columns with (1/n) sum_i x_ij^2 = 1. For duplicated
/// pairs, column 2k+1 is a copy of column 2k (0-based).
Matrix gen_design(const SimSpec& spec, Rng& rng);
Matrix gen_design(const SimSpec& spec);

/// True coefficients on the first d* coordinates.
Vector make_beta_star(const SimSpec& spec, Rng& rng);

/// NB(mu_i, theta) draws through the Gamma(theta, mu_i/theta) mixture of
/// Poissons.
Vector sample_nb(const Vector& mu, double theta, Rng& rng);
Vector sample_nb(const Vector& mu, double theta, std::uint64_t seed);

struct SimInstance {
  Dataset data;
  Vector beta_star;
};

/// Design, truth and response drawn from one stream seeded by `seed`.
SimInstance simulate(const SimSpec& spec, std::uint64_t seed);

enum class DispersionVariant { Linear, Quadratic };

struct DispersionTest {
  double alpha_hat = 0.0;
  double se = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

/// Auxiliary no-intercept regression of ((y - mu)^2 - y) / mu on g(mu) / mu,
/// g(mu) = mu or mu^2, with a two-sided t test of alpha = 0.
DispersionTest cameron_trivedi_test(const Vector& y, const Vector& mu_hat,
                                    DispersionVariant variant);

struct ReplicationSummary {
  std::string experiment;
  int replicates = 0;
  std::map<std::string, double> metrics;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  ///< one per replicate, in index order
};

/// Knobs shared by the registered experiments.
struct ExperimentParams {
  Penalty penalty;
  /// When positive, lambda1 = rate * sqrt(log p / n) replaces penalty.lambda1.
  double lambda1_rate = 0.0;
  /// When positive, lambda2 = ratio * lambda1 replaces penalty.lambda2;
  /// 1/(8B) gives the Stabil-bound rule.
  double lambda2_ratio = 0.0;
  SolverConfig solver;
  TheoryConfig theory;
  int stabil_budget = 32;
  double eta = 0.5;          ///< split of lambda1 between the E2 and E3 events
  double zero_tol = 0.0;
  double lambda_node = -1.0; ///< negative selects sqrt(log p / n)
  double level = 0.95;
  Index target = 0;          ///< coordinate whose interval coverage is tracked

  /// Penalty after applying the rate and the ratio for an n x p design.
  Penalty resolve(Index n, Index p) const;
};

std::vector<std::string> registered_experiments();

/// Runs `experiment` on replicates r = 0..R-1, each simulated with seed
/// derive_seed(seed, r). Metrics depend only on (sim, params, seed), never on
/// the thread count.
ReplicationSummary run_replications(const SimSpec& sim, const std::string& experiment,
                                    int replicates, std::uint64_t seed,
                                    const ExperimentParams& params = {}, int threads = 1);

}  // namespace nbelnet
