#include "nbelnet/simulate.hpp"

#include "nbelnet/model.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace nbelnet {

DesignKind parse_design(const std::string& name) {
  if (name == "iid_gaussian" || name == "iid") return DesignKind::IidGaussian;
  if (name == "ar1") return DesignKind::Ar1;
  if (name == "equicorrelated") return DesignKind::Equicorrelated;
  if (name == "duplicated_pairs") return DesignKind::DuplicatedPairs;
  throw std::invalid_argument("unknown design '" + name +
                              "' (expected iid_gaussian, ar1, equicorrelated, duplicated_pairs)");
}

std::string to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::IidGaussian: return "iid_gaussian";
    case DesignKind::Ar1: return "ar1";
    case DesignKind::Equicorrelated: return "equicorrelated";
    case DesignKind::DuplicatedPairs: return "duplicated_pairs";
  }
  return "unknown";
}

void SimSpec::validate() const {
  if (n < 2) throw std::invalid_argument("sim n must be at least 2");
  if (p < 1) throw std::invalid_argument("sim p must be at least 1");
  if (d_star < 0 || d_star > p) throw std::invalid_argument("sim d_star must lie in [0, p]");
  if (!(beta_min >= 0.0) || !(beta_max >= beta_min) || !std::isfinite(beta_max)) {
    throw std::invalid_argument("sim needs 0 <= beta_min <= beta_max < inf");
  }
  if (!(rho > -1.0 && rho < 1.0)) throw std::invalid_argument("sim rho must lie in (-1, 1)");
  if (design == DesignKind::Equicorrelated && rho < 0.0) {
    throw std::invalid_argument("equicorrelated design needs rho >= 0");
  }
  if (!(clamp_L > 0.0)) throw std::invalid_argument("sim clamp_L must be positive");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("sim theta must be positive");
}

Matrix gen_design(const SimSpec& spec, Rng& rng) {
  spec.validate();
  const Index n = spec.n;
  const Index p = spec.p;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix X(n, p);
  switch (spec.design) {
    case DesignKind::IidGaussian:
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) X(i, j) = gauss(rng);
      break;
    case DesignKind::Ar1: {
      const double innov = std::sqrt(1.0 - spec.rho * spec.rho);
      for (Index i = 0; i < n; ++i) {
        X(i, 0) = gauss(rng);
        for (Index j = 1; j < p; ++j) X(i, j) = spec.rho * X(i, j - 1) + innov * gauss(rng);
      }
      break;
    }
    case DesignKind::Equicorrelated: {
      const double common = std::sqrt(spec.rho);
      const double own = std::sqrt(1.0 - spec.rho);
      for (Index i = 0; i < n; ++i) {
        const double w = gauss(rng);
        for (Index j = 0; j < p; ++j) X(i, j) = common * w + own * gauss(rng);
      }
      break;
    }
    case DesignKind::DuplicatedPairs:
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; j += 2) {
          X(i, j) = gauss(rng);
          if (j + 1 < p) X(i, j + 1) = X(i, j);
        }
      }
      break;
  }

  const double L = spec.clamp_L;
  X = X.cwiseMax(-L).cwiseMin(L);
  for (Index j = 0; j < p; ++j) {
    auto col = X.col(j);
    col.array() -= col.mean();
    const double ms = col.squaredNorm() / static_cast<double>(n);
    if (!(ms > 1e-24)) {
      std::ostringstream os;
      os << "design column " << j << " is constant";
      throw std::invalid_argument(os.str());
    }
    col /= std::sqrt(ms);
  }
  return X;
}

Matrix gen_design(const SimSpec& spec) {
  Rng rng(spec.seed);
  return gen_design(spec, rng);
}

Vector make_beta_star(const SimSpec& spec, Rng& rng) {
  spec.validate();
  Vector beta = Vector::Zero(spec.p);
  std::uniform_real_distribution<double> mag(spec.beta_min, spec.beta_max);
  std::bernoulli_distribution coin(0.5);
  for (Index j = 0; j < spec.d_star; ++j) {
    const double m = spec.beta_max > spec.beta_min ? mag(rng) : spec.beta_min;
    double s = (j % 2 == 0) ? 1.0 : -1.0;
    if (spec.random_signs) s = coin(rng) ? 1.0 : -1.0;
    beta[j] = s * m;
  }
  return beta;
}

Vector sample_nb(const Vector& mu, double theta, Rng& rng) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw std::invalid_argument("sample_nb: theta must be positive");
  for (Index i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > 0.0) || !std::isfinite(mu[i])) {
      std::ostringstream os;
      os << "sample_nb: mu[" << i << "] = " << mu[i] << " is not a positive finite number";
      throw std::invalid_argument(os.str());
    }
  }
  Vector y(mu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    std::gamma_distribution<double> gamma(theta, mu[i] / theta);
    const double rate = gamma(rng);
    if (rate > 0.0) {
      std::poisson_distribution<long long> pois(rate);
      y[i] = static_cast<double>(pois(rng));
    } else {
      y[i] = 0.0;
    }
  }
  return y;
}

Vector sample_nb(const Vector& mu, double theta, std::uint64_t seed) {
  Rng rng(seed);
  return sample_nb(mu, theta, rng);
}

SimInstance simulate(const SimSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X = gen_design(spec, rng);
  Vector beta = make_beta_star(spec, rng);
  const Vector eta = X * beta;
  for (Index i = 0; i < eta.size(); ++i) {
    if (std::abs(eta[i]) > kEtaClamp) throw DomainError("simulated linear predictor overflows");
  }
  const Vector mu = eta.array().exp().matrix();
  Vector y = sample_nb(mu, spec.theta, rng);
  return SimInstance{Dataset(std::move(X), std::move(y), spec.theta), std::move(beta)};
}

DispersionTest cameron_trivedi_test(const Vector& y, const Vector& mu_hat,
                                    DispersionVariant variant) {
  if (y.size() != mu_hat.size()) throw DimensionError("cameron_trivedi_test: y and mu differ in length");
  const Index n = y.size();
  if (n < 2) throw std::invalid_argument("cameron_trivedi_test needs at least 2 observations");
  Vector z(n);
  Vector r(n);
  for (Index i = 0; i < n; ++i) {
    const double mu = mu_hat[i];
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("cameron_trivedi_test: mu must be positive");
    const double e = y[i] - mu;
    z[i] = (e * e - y[i]) / mu;
    r[i] = variant == DispersionVariant::Linear ? 1.0 : mu;
  }
  const double rr = r.squaredNorm();
  if (!(rr > 0.0)) throw std::invalid_argument("cameron_trivedi_test: regressor vector is zero");
  DispersionTest out;
  out.alpha_hat = r.dot(z) / rr;
  const double s2 = (z - out.alpha_hat * r).squaredNorm() / static_cast<double>(n - 1);
  out.se = std::sqrt(s2 / rr);
  if (out.alpha_hat == 0.0) {
    out.t_stat = 0.0;
    out.p_value = 1.0;
    return out;
  }
  if (out.se == 0.0) {
    out.t_stat = std::copysign(std::numeric_limits<double>::infinity(), out.alpha_hat);
    out.p_value = 0.0;
    return out;
  }
  out.t_stat = out.alpha_hat / out.se;
  const boost::math::students_t dist(static_cast<double>(n - 1));
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t_stat)));
  return out;
}

}  // namespace nbelnet
