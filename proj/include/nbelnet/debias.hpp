#pragma once

#include "nbelnet/solver.hpp"
#include "nbelnet/types.hpp"

namespace nbelnet {

/// sqrt(log p / n)
double default_lambda_node(Index n, Index p);

/// Nodewise lasso approximation of the inverse of the Hessian at beta_hat.
/// Column j of the weighted design is regressed on the others with penalty
/// lambda_node on the (1/2n) least-squares scale; row j of the result is
/// (-gamma_j with 1 at j) / tau_j^2. lambda_node = 0 solves each regression
/// exactly.
Matrix nodewise_inverse(const Dataset& data, const Vector& beta_hat, double lambda_node,
                        int threads = 1);

struct NodewiseResult {
  Matrix theta_hat;
  Vector tau2;
};

/// The same construction on an arbitrary positive semidefinite Gram matrix.
NodewiseResult nodewise_on_gram(const Matrix& gram, double lambda_node, int threads = 1);

struct DebiasResult {
  Vector b_hat;
  Matrix theta_hat;
  Vector se;
  Vector ci_low;
  Vector ci_high;
  double level = 0.95;
};

/// b = b_hat - Theta * score(b_hat) with sandwich standard errors
/// sqrt([Theta S Theta']_jj / n), S the mean outer product of the
/// per-observation scores at b_hat.
DebiasResult debias(const Fit& fit, const Dataset& data, const Matrix& theta_hat,
                    double level = 0.95);
DebiasResult debias(const Vector& beta_hat, const Dataset& data, const Matrix& theta_hat,
                    double level = 0.95);

/// b - Theta * grad
Vector debias_step(const Vector& beta, const Vector& grad, const Matrix& theta_hat);

/// (I + 2 lambda2 Theta) b_hat + lambda1 Theta s, with s the KKT subgradient:
/// sgn(b_j) on the support and -score_j / lambda1 (clipped to [-1, 1]) off it.
Vector debias_kkt_form(const Vector& beta_hat, const Dataset& data, const Penalty& pen,
                       const Matrix& theta_hat);

/// Agreement tolerance for the two forms: 10 tol ||Theta||_inf (max row sum).
double debias_form_tolerance(const Matrix& theta_hat, double tol);

}  // namespace nbelnet
