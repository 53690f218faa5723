#include <gtest/gtest.h>

#include <boost/math/distributions/negative_binomial.hpp>

#include <cmath>

#include "nbelnet/rng.hpp"
#include "nbelnet/simulate.hpp"

using namespace nbelnet;

TEST(Design, StandardizedColumns) {
  for (DesignKind kind : {DesignKind::IidGaussian, DesignKind::Ar1, DesignKind::Equicorrelated,
                          DesignKind::DuplicatedPairs}) {
    SimSpec s;
    s.n = 300;
    s.p = 6;
    s.design = kind;
    s.rho = 0.4;
    const Matrix X = gen_design(s);
    for (Index j = 0; j < s.p; ++j) {
      EXPECT_LE(std::abs(X.col(j).mean()), 1e-12) << to_string(kind);
      EXPECT_NEAR(X.col(j).squaredNorm() / 300.0, 1.0, 1e-12) << to_string(kind);
    }
  }
}

TEST(Design, DuplicatedPairsAreExactCopies) {
  SimSpec s;
  s.n = 50;
  s.p = 6;
  s.design = DesignKind::DuplicatedPairs;
  const Matrix X = gen_design(s);
  for (Index j = 0; j < 6; j += 2) {
    EXPECT_EQ((X.col(j) - X.col(j + 1)).lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_NEAR(X.col(j).dot(X.col(j + 1)) / 50.0, 1.0, 1e-12);
  }
}

TEST(Design, Ar1LagOneCorrelation) {
  SimSpec s;
  s.n = 2000;
  s.p = 10;
  s.design = DesignKind::Ar1;
  s.rho = 0.5;
  s.seed = 3;
  const Matrix X = gen_design(s);
  EXPECT_NEAR(X.col(0).dot(X.col(1)) / 2000.0, 0.5, 0.05);
}

TEST(Design, ParseAndValidate) {
  EXPECT_EQ(parse_design("ar1"), DesignKind::Ar1);
  EXPECT_EQ(parse_design("iid"), DesignKind::IidGaussian);
  EXPECT_THROW(parse_design("banana"), std::invalid_argument);
  SimSpec s;
  s.design = DesignKind::Equicorrelated;
  s.rho = -0.1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  SimSpec t;
  t.d_star = t.p + 1;
  EXPECT_THROW(t.validate(), std::invalid_argument);
}

TEST(Sampler, MomentsMatchFormulas) {
  const Index N = 100000;
  const Vector mu = Vector::Constant(N, 3.0);
  const Vector y = sample_nb(mu, 2.0, 17);
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(N - 1);
  const double v = 3.0 + 9.0 / 2.0;
  EXPECT_NEAR(mean, 3.0, 3.0 * std::sqrt(v / N));
  const double m4 = (y.array() - mean).pow(4).mean();
  EXPECT_NEAR(var, v, 3.0 * std::sqrt((m4 - var * var) / N));
}

TEST(Sampler, PoissonLimit) {
  const Vector y = sample_nb(Vector::Constant(100000, 3.0), 1e8, 18);
  const double mean = y.mean();
  const double var = (y.array() - mean).square().mean();
  EXPECT_NEAR(var / mean, 1.0, 0.05);
}

TEST(Sampler, PmfCellFrequencies) {
  const Index N = 50000;
  const double mu = 2.5, theta = 1.5;
  const Vector y = sample_nb(Vector::Constant(N, mu), theta, 19);
  const boost::math::negative_binomial_distribution<double> nb(theta, theta / (theta + mu));
  for (int k = 0; k <= 8; ++k) {
    const double p = boost::math::pdf(nb, k);
    const double freq = (y.array() == static_cast<double>(k)).cast<double>().mean();
    EXPECT_LE(std::abs(freq - p), 4.0 * std::sqrt(p * (1.0 - p) / N)) << k;
  }
}

TEST(Sampler, SeededOutputIsBitIdentical) {
  const Vector mu = Vector::LinSpaced(100, 0.1, 10.0);
  EXPECT_EQ(sample_nb(mu, 2.0, 5), sample_nb(mu, 2.0, 5));
  SimSpec s;
  const SimInstance a = simulate(s, 9), b = simulate(s, 9);
  EXPECT_EQ(a.data.X(), b.data.X());
  EXPECT_EQ(a.data.y(), b.data.y());
}

TEST(Truth, AlternatingSignsOnLeadingCoordinates) {
  SimSpec s;
  s.p = 8;
  s.d_star = 3;
  s.beta_min = 1.0;
  s.beta_max = 2.0;
  Rng rng(4);
  const Vector b = make_beta_star(s, rng);
  EXPECT_GT(b[0], 0.0);
  EXPECT_LT(b[1], 0.0);
  EXPECT_GT(b[2], 0.0);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_GE(std::abs(b[j]), 1.0);
    EXPECT_LE(std::abs(b[j]), 2.0);
  }
  EXPECT_EQ(b.tail(5).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Dispersion, ZeroAuxiliaryResponse) {
  Vector y(4), mu(4);
  y << 4.0, 1.0, 4.0, 1.0;
  mu << 2.0, 2.0, 6.0, 2.0;
  const DispersionTest t = cameron_trivedi_test(y, mu, DispersionVariant::Quadratic);
  EXPECT_EQ(t.alpha_hat, 0.0);
  EXPECT_EQ(t.p_value, 1.0);
}

TEST(Dispersion, MeanEqualToResponse) {
  const Vector y = Vector::LinSpaced(5, 1.0, 5.0);
  const DispersionTest t = cameron_trivedi_test(y, y, DispersionVariant::Linear);
  EXPECT_NEAR(t.alpha_hat, -1.0, 1e-15);
}

TEST(Dispersion, SizeAndPower) {
  int rejections_poisson = 0, rejections_nb = 0;
  const int R = 200;
  for (int r = 0; r < R; ++r) {
    Rng rng(derive_seed(77, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> u(0.5, 5.0);
    Vector mu(500);
    for (Index i = 0; i < 500; ++i) mu[i] = u(rng);
    const Vector yp = sample_nb(mu, 1e9, rng);
    const Vector yn = sample_nb(mu, 2.0, rng);
    rejections_poisson += cameron_trivedi_test(yp, mu, DispersionVariant::Quadratic).p_value < 0.05;
    rejections_nb += cameron_trivedi_test(yn, mu, DispersionVariant::Quadratic).p_value < 0.05;
  }
  EXPECT_LE(rejections_poisson, 0.12 * R);
  EXPECT_GE(rejections_nb, 0.8 * R);
}

TEST(Dispersion, RejectsBadInput) {
  EXPECT_THROW(cameron_trivedi_test(Vector::Ones(3), Vector::Ones(2), DispersionVariant::Linear),
               DimensionError);
  EXPECT_THROW(cameron_trivedi_test(Vector::Ones(3), Vector::Zero(3), DispersionVariant::Linear),
               std::invalid_argument);
}

TEST(Replications, SingleReplicateAndDeterminism) {
  SimSpec s;
  s.n = 80;
  s.p = 10;
  ExperimentParams prm;
  prm.penalty = Penalty{0.1, 0.01};
  const ReplicationSummary one = run_replications(s, "fit-error", 1, 5, prm);
  ASSERT_EQ(one.rows.size(), 1u);
  EXPECT_EQ(one.metrics.at("mean_l1_error"), one.rows[0][0]);
  const ReplicationSummary a = run_replications(s, "fit-error", 6, 5, prm, 1);
  const ReplicationSummary b = run_replications(s, "fit-error", 6, 5, prm, 3);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(a.metrics, b.metrics);
  EXPECT_THROW(run_replications(s, "nope", 2, 5, prm), std::invalid_argument);
}

TEST(Replications, ResolvesRateAndRatio) {
  ExperimentParams prm;
  prm.lambda1_rate = 2.0;
  prm.lambda2_ratio = 0.125;
  const Penalty pen = prm.resolve(400, 1000);
  EXPECT_NEAR(pen.lambda1, 2.0 * std::sqrt(std::log(1000.0) / 400.0), 1e-15);
  EXPECT_NEAR(pen.lambda2, pen.lambda1 / 8.0, 1e-15);
}
