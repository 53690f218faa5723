#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "nbelnet/model.hpp"
#include "nbelnet/solver.hpp"
#include "nbelnet/theory.hpp"

using namespace nbelnet;
using nbelnet::fixtures::random_instance;
using nbelnet::fixtures::random_vector;

namespace {

Matrix equicorrelated(Index p, double rho) {
  return (1.0 - rho) * Matrix::Identity(p, p) + rho * Matrix::Ones(p, p);
}

}  // namespace

TEST(Cone, CompatibilityOnIdentityIsOne) {
  for (double zeta : {1.5, 3.0, 10.0}) {
    EXPECT_NEAR(compatibility_factor(Matrix::Identity(5, 5), ConeSpec{zeta, {0}, 0.0}, 16, 1), 1.0, 1e-6);
  }
}

TEST(Cone, CompatibilityOfDiagonal) {
  Matrix S = Matrix::Zero(2, 2);
  S.diagonal() << 4.0, 1.0;
  EXPECT_NEAR(compatibility_factor(S, ConeSpec{1.0, {0}, 0.0}, 32, 2), 2.0, 1e-6);
}

TEST(Cone, CompatibilityOfZeroMatrix) {
  EXPECT_NEAR(compatibility_factor(Matrix::Zero(3, 3), ConeSpec{2.0, {1}, 0.0}, 4, 3), 0.0, 1e-12);
}

TEST(Cone, WeakCifOnIdentity) {
  const Matrix I = Matrix::Identity(4, 4);
  EXPECT_NEAR(weak_cif(I, ConeSpec{3.0, {0}, 0.0}, 2.0, 16, 4), 1.0, 1e-6);
  EXPECT_NEAR(weak_cif(I, ConeSpec{1e-6, {0}, 0.0}, 2.0, 16, 4), 1.0, 1e-6);
  // b = (1, t): min over t in [0, 1] of (1 + t^2) / (1 + t).
  EXPECT_NEAR(weak_cif(Matrix::Identity(2, 2), ConeSpec{1.0, {0}, 0.0}, 1.0, 64, 5),
              0.8284271247461901, 1e-6);
}

TEST(Cone, StabilOnIdentity) {
  const StabilEstimate s = stabil_constant(Matrix::Identity(4, 4), ConeSpec{3.5, {0}, 0.0}, 1.0, 16, 6);
  EXPECT_NEAR(s.k, 1.0, 1e-6);
  EXPECT_FALSE(s.degenerate);
}

TEST(Cone, StabilEquicorrelatedAgreesWithOversampling) {
  const Matrix S = equicorrelated(4, 0.5);
  const ConeSpec cone{3.5, {0}, 0.0};
  const double k = stabil_constant(S, cone, 1.0, 32, 7).k;
  const double k10 = stabil_constant(S, cone, 1.0, 320, 7).k;
  EXPECT_GT(k, 0.0);
  EXPECT_LT(k, 1.0);
  EXPECT_NEAR(k, k10, 0.05 * k10);
  EXPECT_LE(k10, k);
  EXPECT_NEAR(k10, 0.625, 1e-6);
}

TEST(Cone, StabilOnZeroMatrixIsDegenerate) {
  const StabilEstimate s = stabil_constant(Matrix::Zero(3, 3), ConeSpec{3.5, {0}, 0.0}, 1.0, 4, 8);
  EXPECT_EQ(s.k, 0.0);
  EXPECT_TRUE(s.degenerate);
}

TEST(Cone, RejectsInvalidSigma) {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  EXPECT_THROW(compatibility_factor(asym, ConeSpec{2.0, {0}, 0.0}, 4, 1), std::invalid_argument);
  EXPECT_THROW(compatibility_factor(-Matrix::Identity(2, 2), ConeSpec{2.0, {0}, 0.0}, 4, 1),
               std::invalid_argument);
  EXPECT_THROW(compatibility_factor(Matrix::Identity(2, 2), ConeSpec{2.0, {}, 0.0}, 4, 1),
               std::invalid_argument);
}

TEST(ATau, EndpointsAndRoots) {
  EXPECT_EQ(a_tau_root(0.0), 0.0);
  EXPECT_NEAR(a_tau_root(0.5 * std::exp(-1.0)), 0.5, 1e-10);
  EXPECT_NEAR(a_tau_root(0.1), 0.12958555090953687, 1e-12);
  EXPECT_NEAR(a_tau_root(0.04), 0.04364886043078996, 1e-12);
  for (double tau : {1e-6, 0.01, 0.1, 0.18}) {
    const double a = a_tau_root(tau);
    EXPECT_LE(std::abs(a * std::exp(-2.0 * a) - tau), 1e-12);
  }
  EXPECT_THROW(a_tau_root(0.2), InapplicableBound);
  EXPECT_THROW(a_tau_root(-0.01), InapplicableBound);
}

TEST(CompatBounds, PlugInExample) {
  const CompatibilityBounds b = oracle_bounds_t32(1.0, 3.0, 2, 0.01, 1.0, 1.0, 2.0);
  EXPECT_NEAR(b.tau, 0.04, 1e-15);
  EXPECT_NEAR(b.a_tau, 0.04364886043078996, 1e-12);
  EXPECT_NEAR(b.l1_bound, std::exp(2.0 * b.a_tau) * 0.04, 1e-15);
  EXPECT_NEAR(b.l1_bound, 0.04364886043078996, 1e-12);
}

TEST(CompatBounds, VanishWithLambdaAndGrowingConstant) {
  const CompatibilityBounds small = oracle_bounds_t32(1.0, 3.0, 2, 1e-9, 1.0, 1.0, 2.0);
  EXPECT_LT(small.l1_bound, 1e-8);
  const CompatibilityBounds big_c = oracle_bounds_t32(1.0, 3.0, 2, 0.01, 1e4, 1e4, 2.0);
  EXPECT_LT(big_c.l1_bound, 1e-9);
  EXPECT_LT(big_c.lq_bound, 1e-5);
  EXPECT_THROW(oracle_bounds_t32(1.0, 3.0, 2, 1.0, 1.0, 1.0, 2.0), InapplicableBound);
}

TEST(AConstant, CornerExample) {
  EXPECT_NEAR(a_constant(1.0, 1.0, 1.0, 0.0), 2.831467612186219e-8, 1e-20);
}

TEST(StabilBounds, ReduceAndGrow) {
  TheoryConfig cfg;
  const Penalty pen{0.1, 0.1 / 8.0};
  const StabilBounds b = oracle_bounds_t34(pen, cfg, 2.0, 3, 0.5);
  const double a = a_constant(2.0, 1.0, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(b.a_const, a);
  EXPECT_NEAR(b.l1_bound, 2.25 * 2.25 * 0.1 * 3.0 / (a * 0.5 + 2.0 * pen.lambda2), 1e-12);
  EXPECT_TRUE(b.lambda2_rule_ok);
  const StabilBounds doubled = oracle_bounds_t34(Penalty{0.2, pen.lambda2}, cfg, 2.0, 3, 0.5);
  EXPECT_GT(doubled.l1_bound, b.l1_bound);
  EXPECT_FALSE(doubled.lambda2_rule_ok);
  cfg.epsilon_n = 0.01;
  const StabilBounds slack = oracle_bounds_t34(pen, cfg, 2.0, 3, 0.5);
  EXPECT_GT(slack.l1_bound, b.l1_bound);
}

TEST(EventE, ZeroScoreAtTruth) {
  Matrix X(4, 1);
  X << 0.0, std::log(2.0), std::log(3.0), std::log(7.0);
  Vector y(4);
  y << 1.0, 2.0, 3.0, 7.0;
  const Dataset d(X, y, 2.0);
  const EventE e = event_E_check(Vector::Ones(1), d, Penalty{0.01, 0.0}, 3.0);
  EXPECT_LT(e.z_star, 1e-14);
  EXPECT_TRUE(e.holds);
  const EventE tight = event_E_check(Vector::Ones(1), d, Penalty{0.01, 0.0}, 1.0 + 1e-12);
  EXPECT_LT(tight.threshold, 1e-13);
  EXPECT_THROW(event_E_check(Vector::Ones(1), d, Penalty{0.01, 0.0}, 1.0), std::invalid_argument);
}

TEST(EventA, MeanResponseAndZeroLambda) {
  Matrix X(3, 1);
  X << 0.0, std::log(4.0), std::log(2.0);
  Vector y(3);
  y << 1.0, 4.0, 2.0;
  const Dataset d(X, y, 2.0);
  EXPECT_TRUE(event_A_check(Vector::Constant(1, 0.7), Vector::Ones(1), d, 0.01).holds);
  const Dataset noisy = random_instance(30, 2, 2.0, 9);
  EXPECT_FALSE(event_A_check(Vector::Zero(2), Vector::Zero(2), noisy, 0.0).holds);
}

TEST(Grouping, IdenticalColumns) {
  const Dataset base = random_instance(40, 1, 2.0, 10, 0.8);
  Matrix X(40, 3);
  X << base.X(), base.X(), random_instance(40, 1, 2.0, 11).X();
  const Dataset d(X, base.y(), 2.0);
  const Penalty pen{0.01, 0.1};
  const Fit f = fit(d, pen);
  const GroupingBound g = grouping_bound(f.beta, d, pen, 0, 1);
  EXPECT_EQ(g.rhs, 0.0);
  EXPECT_NEAR(g.rho, base.X().squaredNorm() / 40.0, 1e-12);
  EXPECT_LE(g.lhs, 10.0 * 1e-8);
}

TEST(Grouping, MatchesDirectEvaluation) {
  const Dataset d = random_instance(50, 4, 2.0, 12);
  const Penalty pen{0.02, 0.05};
  const Fit f = fit(d, pen);
  ASSERT_TRUE(f.converged);
  for (Index k = 0; k < 4; ++k) {
    for (Index l = k + 1; l < 4; ++l) {
      const GroupingBound g = grouping_bound(f.beta, d, pen, k, l);
      double rhs = 0.0;
      for (Index i = 0; i < d.n(); ++i) {
        const double mu = std::exp(d.X().row(i).dot(f.beta));
        rhs += std::abs(d.X()(i, k) - d.X()(i, l)) * std::abs(2.0 * (mu - d.y()[i]) / (2.0 + mu));
      }
      rhs /= 2.0 * 50.0 * pen.lambda2;
      EXPECT_NEAR(g.rhs, rhs, 1e-12 * std::max(1.0, rhs));
      EXPECT_TRUE(g.holds(1e-7));
    }
  }
}

TEST(Grouping, OrthogonalPairHasZeroRho) {
  Matrix X(4, 2);
  X << 1, 1, 1, -1, -1, 1, -1, -1;
  const Dataset d(X, Vector::Ones(4), 2.0);
  EXPECT_EQ(grouping_bound(Vector::Zero(2), d, Penalty{0.1, 0.1}, 0, 1).rho, 0.0);
}

TEST(HonestDimension, Example) {
  const double A = std::sqrt(2.0);
  EXPECT_NEAR(honest_dimension(A, 1.25), 1.0, 1e-10);
  for (double delta : {0.5, 0.1, 0.01}) {
    const double p = honest_dimension(A, delta);
    EXPECT_LE(std::abs(5.0 * p * std::pow(2.0 * p, -A * A) - delta), 1e-10);
  }
  EXPECT_GT(honest_dimension(A, 0.01), honest_dimension(A, 0.1));
  EXPECT_THROW(honest_dimension(1.0, 0.1), std::invalid_argument);
}

TEST(TheoryReport, SmallInstance) {
  SimSpec spec;
  spec.n = 200;
  spec.p = 10;
  spec.d_star = 2;
  const SimInstance in = simulate(spec, 3);
  TheoryConfig cfg;
  cfg.samples = 8;
  cfg.L_or_K = in.data.max_abs_x();
  const Penalty pen{0.3, 0.3 / 8.0};
  const Matrix gram = in.data.X().transpose() * in.data.X() / 200.0;
  const TheoryReport r = theory_report(in.data, in.beta_star, pen, cfg, 2.0, gram, 8);
  EXPECT_EQ(r.d_star, 2);
  EXPECT_GT(r.compat, 0.0);
  EXPECT_GT(r.stabil_k, 0.0);
  EXPECT_GT(r.l1_bound_t34, 0.0);
  EXPECT_EQ(r.t32_applicable, r.tau <= kTauMax);
  if (!r.t32_applicable) {
    EXPECT_TRUE(std::isnan(r.l1_bound_t32));
  }
}
