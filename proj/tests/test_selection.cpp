#include <gtest/gtest.h>

#include <cmath>

#include "nbelnet/model.hpp"
#include "nbelnet/selection.hpp"
#include "nbelnet/solver.hpp"

using namespace nbelnet;

TEST(Support, ZeroAndThresholded) {
  EXPECT_TRUE(support_and_signs(Vector::Zero(4)).H_hat.empty());
  Vector b(2);
  b << 1e-12, 0.5;
  const SelectionReport r = support_and_signs(b, 1e-8);
  ASSERT_EQ(r.H_hat.size(), 1u);
  EXPECT_EQ(r.H_hat[0], 1);
  EXPECT_EQ(support_and_signs(b).H_hat.size(), 2u);
  EXPECT_THROW(support_and_signs(b, -1.0), std::invalid_argument);
}

TEST(Support, CompareToTruth) {
  Vector est(4), truth(4);
  est << 0.5, -0.2, 0.1, 0.0;
  truth << 1.0, -1.0, 0.0, 0.0;
  SelectionReport r = support_and_signs(est);
  compare_to_truth(r, truth);
  EXPECT_TRUE(r.contains_H);
  EXPECT_FALSE(r.subset_of_H);
  EXPECT_FALSE(r.equals_H);
  EXPECT_FALSE(r.sign_match);
  EXPECT_EQ(r.min_signal, 1.0);
  est[2] = 0.0;
  r = support_and_signs(est);
  compare_to_truth(r, truth);
  EXPECT_TRUE(r.equals_H);
  EXPECT_TRUE(r.sign_match);
}

TEST(Thresholds, FreeThresholdAndSharedFormula) {
  TheoryConfig cfg;
  const Penalty pen{0.1, 0.0125};
  const double a = a_constant(2.0, cfg.L_or_K, cfg.B, cfg.epsilon_n);
  const DetectionThresholds t = detection_thresholds(pen, cfg, 3, 0.7, a);
  EXPECT_NEAR(t.free_threshold, 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(t.B0, oracle_bounds_t34(pen, cfg, 2.0, 3, 0.7).l1_bound);
}

namespace {

Matrix ar1_design(Index n, Index p, double rho, std::uint64_t seed) {
  SimSpec s;
  s.n = n;
  s.p = p;
  s.design = DesignKind::Ar1;
  s.rho = rho;
  s.seed = seed;
  return gen_design(s);
}

}  // namespace

TEST(Conditions, OrthogonalDesignIsIdentifiable) {
  Matrix X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  const Dataset d(X, Vector::Ones(4), 2.0);
  Vector b(2);
  b << 0.2, 0.1;
  const ConditionReport r = check_design_conditions(d, b, b, {0, 1}, 1e-3, 2.0);
  EXPECT_EQ(r.max_offdiag_rho, 0.0);
  EXPECT_TRUE(r.identifiable_ok);
}

TEST(Conditions, IrrepresentableAtTruth) {
  SimSpec s;
  s.n = 100;
  s.p = 5;
  s.d_star = 2;
  const SimInstance in = simulate(s, 4);
  const IndexSet H{0, 1};
  const ConditionReport r =
      check_design_conditions(in.data, in.beta_star, in.beta_star, H, 0.9, 2.0);
  double expected = 0.0;
  for (Index i = 0; i < in.data.n(); ++i) {
    const double u = in.data.X()(i, 0) * in.beta_star[0] + in.data.X()(i, 1) * in.beta_star[1];
    expected = std::max(expected, 2.0 * (2.0 + in.data.y()[i]) / (2.0 + std::exp(u)));
  }
  EXPECT_NEAR(r.irrepresentable_I, expected, 1e-12 * expected);
}

TEST(Conditions, Ar1MatchesDenseLoops) {
  const Index n = 300, p = 8;
  const Matrix X = ar1_design(n, p, 0.3, 5);
  Vector beta_star = Vector::Zero(p);
  beta_star.head(4) << 0.5, -0.5, 0.5, -0.5;
  const Vector mu = (X * beta_star).array().exp().matrix();
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = std::round(mu[i]);
  const Dataset d(X, y, 2.0);
  const Fit f = fit(d, Penalty{0.05, 0.005});
  const IndexSet H{0, 1, 2, 3};
  const double h = 0.9, theta = 2.0;
  const ConditionReport r = check_design_conditions(d, f.beta, beta_star, H, h, theta);

  const double base = h / (theta * 4.0);
  double rho = 0.0, w1_off = 0.0, w1_diag = 0.0, w2_off = 0.0, w2_diag = 0.0;
  for (const Vector* b : {&f.beta, static_cast<const Vector*>(&beta_star)}) {
    for (Index k : H) {
      for (Index l : H) {
        double plain = 0.0, a = 0.0, c = 0.0, e = 0.0;
        for (Index i = 0; i < n; ++i) {
          const double m = std::exp(X.row(i).dot(*b));
          const double w1 = theta * m / ((theta + m) * (theta + m));
          plain += X(i, k) * X(i, l);
          a += w1 * X(i, k) * X(i, l);
          c += (1.0 - w1) * X(i, k) * X(i, l);
          e += y[i] * m / ((theta + m) * (theta + m)) * X(i, k) * X(i, l);
        }
        plain /= n, a /= n, c /= n, e /= n;
        if (k != l) {
          rho = std::max(rho, std::abs(plain));
          w1_off = std::max({w1_off, std::abs(a), std::abs(c)});
          w2_off = std::max(w2_off, std::abs(e));
        } else {
          w1_diag = std::max({w1_diag, std::abs(a), std::abs(c)});
          w2_diag = std::max(w2_diag, std::abs(e));
        }
      }
    }
  }
  EXPECT_NEAR(r.max_offdiag_rho, rho, 1e-12);
  EXPECT_NEAR(r.wcc1_offdiag, w1_off, 1e-12);
  EXPECT_NEAR(r.wcc1_diag, w1_diag, 1e-12);
  EXPECT_NEAR(r.wcc2_offdiag, w2_off, 1e-12);
  EXPECT_NEAR(r.wcc2_diag, w2_diag, 1e-12);
  EXPECT_EQ(r.identifiable_ok, rho <= base);
  EXPECT_EQ(r.wcc1_ok, w1_off <= base && w1_diag <= base);
  EXPECT_EQ(r.wcc2_ok, w2_off <= base && w2_diag <= base);
  EXPECT_FALSE(r.ussc_ok);
  EXPECT_TRUE(check_design_conditions(d, f.beta, beta_star, H, h, theta, 1.0, 1.0, 0.4).ussc_ok);
}

TEST(SignConsistency, NullTruthAndDeterminism) {
  SimSpec s;
  s.n = 100;
  s.p = 10;
  s.d_star = 0;
  ExperimentParams prm;
  const ReplicationSummary null_run = sign_consistency_experiment(s, Penalty{10.0, 0.0}, 10, 3, prm);
  EXPECT_EQ(null_run.metrics.at("sign_match_rate"), 1.0);

  s.d_star = 3;
  prm.lambda1_rate = 2.5;
  const ReplicationSummary a = sign_consistency_experiment(s, {}, 10, 3, prm);
  const ReplicationSummary b = sign_consistency_experiment(s, {}, 10, 3, prm);
  EXPECT_EQ(a.metrics, b.metrics);
}

TEST(HonestSelection, EmptyTruthAndUnionBound) {
  SimSpec s;
  s.n = 100;
  s.p = 10;
  s.d_star = 0;
  ExperimentParams prm;
  prm.stabil_budget = 4;
  prm.theory.samples = 4;
  const ReplicationSummary e = honest_selection_experiment(s, Penalty{0.2, 0.0}, 6, 1, prm);
  EXPECT_EQ(e.metrics.at("P_contains_H"), 1.0);

  s.d_star = 3;
  prm.lambda1_rate = 1.0;
  const ReplicationSummary r = honest_selection_experiment(s, {}, 10, 2, prm);
  const auto& m = r.metrics;
  EXPECT_LE(1.0 - m.at("P_equals_H"), (1.0 - m.at("P_contains_H")) + (1.0 - m.at("P_subset_of_H")) + 1e-12);
  EXPECT_EQ(m.at("hvs_implication_failures"), 0.0);
}
