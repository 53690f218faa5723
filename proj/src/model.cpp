#include "nbelnet/model.hpp"

#include <cmath>
#include <sstream>

namespace nbelnet {
namespace kernel {

bool in_domain(const Vector& eta) noexcept {
  for (Index i = 0; i < eta.size(); ++i) {
    if (!(std::abs(eta[i]) <= kEtaClamp)) return false;
  }
  return true;
}

namespace {

void check_domain(const Vector& eta) {
  for (Index i = 0; i < eta.size(); ++i) {
    if (!(std::abs(eta[i]) <= kEtaClamp)) {
      std::ostringstream os;
      os << "linear predictor x_" << i << "'beta = " << eta[i] << " exceeds the overflow clamp "
         << kEtaClamp;
      throw DomainError(os.str());
    }
  }
}

}  // namespace

double log_theta_plus_exp(double u, double theta) {
  if (u > 0.0) return u + std::log1p(theta * std::exp(-u));
  return std::log(theta + std::exp(u));
}

double mean_fraction(double u, double theta) {
  if (u > 0.0) return 1.0 / (theta * std::exp(-u) + 1.0);
  const double e = std::exp(u);
  return e / (theta + e);
}

double inv_theta_plus_exp(double u, double theta) {
  if (u > 0.0) {
    const double em = std::exp(-u);
    return em / (theta * em + 1.0);
  }
  return 1.0 / (theta + std::exp(u));
}

Vector linear_predictor(const Vector& beta, const Dataset& data) {
  require_length(beta, data.p(), "beta");
  Vector eta = data.X() * beta;
  check_domain(eta);
  return eta;
}

double loss(const Vector& eta, const Vector& y, double theta) {
  check_domain(eta);
  double acc = 0.0;
  for (Index i = 0; i < eta.size(); ++i) {
    acc += (theta + y[i]) * log_theta_plus_exp(eta[i], theta) - y[i] * eta[i];
  }
  return acc / static_cast<double>(eta.size());
}

Vector residual(const Vector& eta, const Vector& y, double theta) {
  check_domain(eta);
  Vector r(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    // theta (e^u - y) / (theta + e^u) = theta [e^u/(theta+e^u) - y/(theta+e^u)]
    r[i] = theta * (mean_fraction(eta[i], theta) - y[i] * inv_theta_plus_exp(eta[i], theta));
  }
  return r;
}

}  // namespace kernel

double nb_loss(const Vector& beta, const Dataset& data) {
  return kernel::loss(kernel::linear_predictor(beta, data), data.y(), data.theta());
}

Vector nb_score(const Vector& beta, const Dataset& data) {
  const Vector r = kernel::residual(kernel::linear_predictor(beta, data), data.y(), data.theta());
  return data.X().transpose() * r / static_cast<double>(data.n());
}

Vector hessian_weights(const Vector& beta, const Dataset& data) {
  const Vector eta = kernel::linear_predictor(beta, data);
  const double theta = data.theta();
  Vector w(eta.size());
  for (Index i = 0; i < eta.size(); ++i) {
    w[i] = theta * (theta + data.y()[i]) * kernel::mean_fraction(eta[i], theta) *
           kernel::inv_theta_plus_exp(eta[i], theta);
  }
  return w;
}

Matrix nb_hessian(const Vector& beta, const Dataset& data) {
  const Vector w = hessian_weights(beta, data);
  const Matrix wx = w.cwiseSqrt().asDiagonal() * data.X();
  Matrix h = Matrix::Zero(data.p(), data.p());
  h.selfadjointView<Eigen::Lower>().rankUpdate(wx.transpose(), 1.0 / static_cast<double>(data.n()));
  return h.selfadjointView<Eigen::Lower>();
}

Matrix observation_scores(const Vector& beta, const Dataset& data) {
  const Vector r = kernel::residual(kernel::linear_predictor(beta, data), data.y(), data.theta());
  return r.asDiagonal() * data.X();
}

double objective(const Vector& beta, const Dataset& data, const Penalty& pen) {
  pen.validate();
  return nb_loss(beta, data) + pen.value(beta);
}

double bregman_symmetric(const Vector& beta1, const Vector& beta2, const Dataset& data,
                         const Penalty& pen, bool include_ridge) {
  require_length(beta1, data.p(), "beta1");
  require_length(beta2, data.p(), "beta2");
  const Vector diff = beta1 - beta2;
  double d = diff.dot(nb_score(beta1, data) - nb_score(beta2, data));
  if (include_ridge) d += 2.0 * pen.lambda2 * diff.squaredNorm();
  return d;
}

double lambda_max(const Dataset& data) {
  return nb_score(Vector::Zero(data.p()), data).lpNorm<Eigen::Infinity>();
}

}  // namespace nbelnet
