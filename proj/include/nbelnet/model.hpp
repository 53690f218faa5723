#pragma once

#include "nbelnet/types.hpp"

namespace nbelnet {

// Gradients and Hessians throughout are those of the average negative
// log-likelihood (the loss), not of the likelihood.

/// Linear predictors beyond this magnitude raise DomainError.
inline constexpr double kEtaClamp = 700.0;

/// (1/n) sum_i [(theta + y_i) log(theta + e^{x_i'b}) - y_i x_i'b]
double nb_loss(const Vector& beta, const Dataset& data);

/// (1/n) sum_i x_i theta (e^{x_i'b} - y_i) / (theta + e^{x_i'b})
Vector nb_score(const Vector& beta, const Dataset& data);

/// (1/n) sum_i x_i x_i' theta (theta + y_i) e^{x_i'b} / (theta + e^{x_i'b})^2
Matrix nb_hessian(const Vector& beta, const Dataset& data);

/// nb_loss + lambda1 ||b||_1 + lambda2 ||b||_2^2
double objective(const Vector& beta, const Dataset& data, const Penalty& pen);

/// (b1 - b2)'[score(b1) - score(b2)], plus 2 lambda2 ||b1 - b2||^2 when
/// include_ridge is set.
double bregman_symmetric(const Vector& beta1, const Vector& beta2, const Dataset& data,
                         const Penalty& pen, bool include_ridge);

/// Per-observation Hessian weights theta (theta + y_i) e^{u_i} / (theta + e^{u_i})^2.
Vector hessian_weights(const Vector& beta, const Dataset& data);

/// n x p matrix whose row i is the score contribution of observation i.
Matrix observation_scores(const Vector& beta, const Dataset& data);

/// ||score(0)||_inf, the smallest lambda1 giving the null fit.
double lambda_max(const Dataset& data);

// Kernels on a precomputed linear predictor eta = X b. They check the clamp
// and are what the solver uses to avoid recomputing X b.
namespace kernel {

Vector linear_predictor(const Vector& beta, const Dataset& data);

double loss(const Vector& eta, const Vector& y, double theta);

/// theta (e^{u_i} - y_i) / (theta + e^{u_i}); score = X' r / n.
Vector residual(const Vector& eta, const Vector& y, double theta);

/// log(theta + e^u), stable for large u.
double log_theta_plus_exp(double u, double theta);

/// e^u / (theta + e^u)
double mean_fraction(double u, double theta);

/// 1 / (theta + e^u)
double inv_theta_plus_exp(double u, double theta);

bool in_domain(const Vector& eta) noexcept;

}  // namespace kernel

}  // namespace nbelnet
