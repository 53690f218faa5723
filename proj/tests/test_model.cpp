#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "nbelnet/model.hpp"

using namespace nbelnet;
using nbelnet::fixtures::random_instance;
using nbelnet::fixtures::random_vector;

namespace {

Dataset one_point(double x, double y, double theta) {
  return Dataset(Matrix::Constant(1, 1, x), Vector::Constant(1, y), theta);
}

}  // namespace

TEST(Loss, NullCoefficientsClosedForm) {
  Matrix X(2, 3);
  X << 0.3, -1.0, 2.0, 1.5, 0.2, -0.7;
  Vector y(2);
  y << 1.0, 3.0;
  const Dataset d(X, y, 1.0);
  EXPECT_NEAR(nb_loss(Vector::Zero(3), d), 3.0 * std::log(2.0), 1e-14);
}

TEST(Loss, SinglePointValue) {
  const Dataset d = one_point(1.0, 2.0, 1.0);
  EXPECT_NEAR(nb_loss(Vector::Constant(1, 0.5), d), 1.922230952540320, 1e-14);
}

TEST(Loss, LargeThetaApproachesPoisson) {
  const Dataset d = random_instance(30, 4, 1e8, 11);
  const Vector b1 = random_vector(4, 12, 0.2);
  const Vector b2 = random_vector(4, 13, 0.2);
  auto poisson = [&](const Vector& b) {
    const Vector u = d.X() * b;
    return (u.array().exp() - d.y().array() * u.array()).mean();
  };
  // Differences cancel the beta-free constant.
  EXPECT_NEAR(nb_loss(b1, d) - nb_loss(b2, d), poisson(b1) - poisson(b2), 1e-4);
}

TEST(Loss, ClampRaisesDomainError) {
  const Dataset d = one_point(1.0, 1.0, 1.0);
  EXPECT_THROW(nb_loss(Vector::Constant(1, 701.0), d), DomainError);
  EXPECT_NO_THROW(nb_loss(Vector::Constant(1, 699.0), d));
}

TEST(Score, SinglePointAtZero) {
  const Dataset d = one_point(1.0, 2.0, 1.0);
  EXPECT_NEAR(nb_score(Vector::Zero(1), d)[0], -0.5, 1e-15);
}

TEST(Score, VanishesAtSaturatedFit) {
  Matrix X(3, 1);
  X << 0.0, std::log(2.0), std::log(5.0);
  Vector y(3);
  y << 1.0, 2.0, 5.0;
  const Dataset d(X, y, 3.0);
  EXPECT_LT(nb_score(Vector::Ones(1), d).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(Score, MatchesFiniteDifferences) {
  for (double theta : {0.5, 2.0, 10.0}) {
    const Dataset d = random_instance(50, 10, theta, 21);
    const Vector b = random_vector(10, 22);
    EXPECT_LT(fixtures::rel_err(nb_score(b, d), fixtures::fd_gradient(b, d)), 1e-6) << theta;
  }
}

TEST(Hessian, ScalarValue) {
  const Dataset d = one_point(1.0, 0.0, 1.0);
  EXPECT_NEAR(nb_hessian(Vector::Zero(1), d)(0, 0), 0.25, 1e-15);
}

TEST(Hessian, MatchesFiniteDifferencesAndIsPsd) {
  const Dataset d = random_instance(50, 10, 2.0, 31);
  const Vector b = random_vector(10, 32);
  const Matrix H = nb_hessian(b, d);
  EXPECT_LT(fixtures::rel_err(H, fixtures::fd_hessian(b, d)), 1e-5);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(H).eigenvalues().minCoeff(), -1e-10);
}

TEST(Objective, AddsPenalty) {
  const Dataset d = random_instance(20, 2, 2.0, 41);
  Vector b(2);
  b << 1.0, -2.0;
  EXPECT_DOUBLE_EQ(objective(b, d, Penalty{0.0, 0.0}), nb_loss(b, d));
  EXPECT_NEAR(objective(b, d, Penalty{0.1, 0.05}), nb_loss(b, d) + 0.3 + 0.25, 1e-14);
  EXPECT_DOUBLE_EQ(objective(Vector::Zero(2), d, Penalty{3.0, 4.0}), nb_loss(Vector::Zero(2), d));
}

TEST(Bregman, ZeroOnEqualArgumentsAndOrdered) {
  const Dataset d = random_instance(40, 5, 2.0, 51);
  const Penalty pen{0.1, 0.2};
  const Vector b1 = random_vector(5, 52);
  EXPECT_EQ(bregman_symmetric(b1, b1, d, pen, true), 0.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Vector a = random_vector(5, 100 + s);
    const Vector b = random_vector(5, 200 + s);
    const double plain = bregman_symmetric(a, b, d, pen, false);
    const double ridge = bregman_symmetric(a, b, d, pen, true);
    EXPECT_GE(plain, 0.0);
    EXPECT_GE(ridge, plain);
    const double direct = (a - b).dot(nb_score(a, d) - nb_score(b, d));
    EXPECT_NEAR(plain, direct, 1e-13);
    EXPECT_NEAR(ridge - plain, 2.0 * pen.lambda2 * (a - b).squaredNorm(), 1e-13);
  }
}

TEST(Kernel, LogThetaPlusExpIsStable) {
  EXPECT_NEAR(kernel::log_theta_plus_exp(600.0, 2.0), 600.0, 1e-12);
  EXPECT_NEAR(kernel::log_theta_plus_exp(0.0, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(kernel::mean_fraction(0.0, 1.0), 0.5, 1e-15);
}

TEST(ObservationScores, AverageToScore) {
  const Dataset d = random_instance(30, 4, 2.0, 61);
  const Vector b = random_vector(4, 62);
  const Matrix G = observation_scores(b, d);
  EXPECT_LT((G.colwise().mean().transpose() - nb_score(b, d)).norm(), 1e-14);
}

TEST(LambdaMax, IsScoreSupNormAtZero) {
  const Dataset d = random_instance(30, 4, 2.0, 71);
  EXPECT_DOUBLE_EQ(lambda_max(d), nb_score(Vector::Zero(4), d).lpNorm<Eigen::Infinity>());
}

TEST(Dataset, RejectsBadInput) {
  EXPECT_THROW(Dataset(Matrix::Ones(2, 1), Vector::Ones(3), 1.0), DimensionError);
  EXPECT_THROW(Dataset(Matrix::Ones(2, 1), Vector::Constant(2, -1.0), 1.0), std::invalid_argument);
  EXPECT_THROW(Dataset(Matrix::Ones(2, 1), Vector::Ones(2), 0.0), std::invalid_argument);
}
