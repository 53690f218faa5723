#include <gtest/gtest.h>

#include "helpers.hpp"
#include "nbelnet/debias.hpp"
#include "nbelnet/model.hpp"
#include "nbelnet/solver.hpp"

using namespace nbelnet;
using nbelnet::fixtures::random_instance;

TEST(Nodewise, ExactInverseWithoutPenalty) {
  const Dataset d = random_instance(200, 6, 2.0, 1);
  const Vector b = fixtures::random_vector(6, 2, 0.2);
  const Matrix theta_hat = nodewise_inverse(d, b, 0.0);
  EXPECT_LE((theta_hat - nb_hessian(b, d).inverse()).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Nodewise, DiagonalGram) {
  Matrix G = Matrix::Zero(3, 3);
  G.diagonal() << 2.0, 0.5, 4.0;
  for (double lam : {0.0, 0.1}) {
    const NodewiseResult r = nodewise_on_gram(G, lam);
    EXPECT_LE((r.theta_hat - Matrix(G.diagonal().cwiseInverse().asDiagonal())).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Nodewise, PenalizedKktBound) {
  const Dataset d = random_instance(150, 8, 2.0, 3);
  const Vector b = fixtures::random_vector(8, 4, 0.2);
  const double lam = 0.05;
  const Matrix H = nb_hessian(b, d);
  const NodewiseResult r = nodewise_on_gram(H, lam);
  const double worst = (r.theta_hat * H - Matrix::Identity(8, 8)).lpNorm<Eigen::Infinity>();
  EXPECT_LE(worst, lam * r.tau2.cwiseInverse().maxCoeff() + 1e-8);
}

TEST(Nodewise, DegenerateColumnNamesIt) {
  Matrix G = Matrix::Identity(3, 3);
  G(2, 2) = 0.0;
  try {
    nodewise_on_gram(G, 0.1);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos);
  }
}

TEST(Debias, UnpenalizedFitIsUnchanged) {
  const Dataset d = random_instance(300, 3, 2.0, 5);
  SolverConfig cfg;
  cfg.tol = 1e-12;
  const Fit f = fit(d, Penalty{0.0, 0.0}, cfg);
  ASSERT_TRUE(f.converged);
  const DebiasResult r = debias(f, d, nodewise_inverse(d, f.beta, 0.0));
  EXPECT_LE((r.b_hat - f.beta).lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_TRUE((r.ci_high.array() > r.ci_low.array()).all());
}

TEST(Debias, KktRewriteAgrees) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Dataset d = random_instance(200, 10, 2.0, 10 + s);
    const Penalty pen{0.04, 0.01};
    const SolverConfig cfg;
    const Fit f = fit(d, pen, cfg);
    ASSERT_TRUE(f.converged);
    const Matrix theta_hat = nodewise_inverse(d, f.beta, default_lambda_node(200, 10));
    const DebiasResult r = debias(f, d, theta_hat);
    const Vector alt = debias_kkt_form(f.beta, d, pen, theta_hat);
    EXPECT_LE((r.b_hat - alt).lpNorm<Eigen::Infinity>(), debias_form_tolerance(theta_hat, cfg.tol));
  }
}

TEST(Debias, RequiresConvergedFit) {
  const Dataset d = random_instance(50, 3, 2.0, 20);
  Fit f;
  f.beta = Vector::Zero(3);
  f.converged = false;
  EXPECT_THROW(debias(f, d, Matrix::Identity(3, 3)), std::invalid_argument);
  EXPECT_THROW(debias(f.beta, d, Matrix::Identity(2, 2)), DimensionError);
}

TEST(Debias, ThreadCountDoesNotMatter) {
  const Dataset d = random_instance(100, 12, 2.0, 21);
  const Vector b = fixtures::random_vector(12, 22, 0.2);
  EXPECT_EQ(nodewise_inverse(d, b, 0.05, 1), nodewise_inverse(d, b, 0.05, 4));
}
