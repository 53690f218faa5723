#pragma once

#include <cstdint>

#include "nbelnet/model.hpp"
#include "nbelnet/rng.hpp"
#include "nbelnet/simulate.hpp"
#include "nbelnet/types.hpp"

namespace nbelnet::fixtures {

inline Dataset random_instance(Index n, Index p, double theta, std::uint64_t seed,
                               double beta_scale = 0.3) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = z(rng);
  Vector beta(p);
  for (Index j = 0; j < p; ++j) beta[j] = beta_scale * z(rng);
  const Vector mu = (X * beta).array().exp().matrix();
  Vector y = sample_nb(mu, theta, rng);
  return Dataset(std::move(X), std::move(y), theta);
}

inline Vector random_vector(Index p, std::uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, scale);
  Vector v(p);
  for (Index j = 0; j < p; ++j) v[j] = z(rng);
  return v;
}

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline double rel_err(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// Central differences of the score and the loss.
inline Vector fd_gradient(const Vector& beta, const Dataset& d, double h = 1e-5) {
  Vector g(beta.size());
  for (Index j = 0; j < beta.size(); ++j) {
    Vector up = beta, dn = beta;
    up[j] += h;
    dn[j] -= h;
    g[j] = (nb_loss(up, d) - nb_loss(dn, d)) / (2.0 * h);
  }
  return g;
}

inline Matrix fd_hessian(const Vector& beta, const Dataset& d, double h = 1e-5) {
  Matrix H(beta.size(), beta.size());
  for (Index j = 0; j < beta.size(); ++j) {
    Vector up = beta, dn = beta;
    up[j] += h;
    dn[j] -= h;
    H.col(j) = (nb_score(up, d) - nb_score(dn, d)) / (2.0 * h);
  }
  return H;
}

}  // namespace nbelnet::fixtures
