#include "nbelnet/debias.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <sstream>

#include "nbelnet/model.hpp"
#include "nbelnet/parallel.hpp"

namespace nbelnet {

double default_lambda_node(Index n, Index p) {
  if (n < 1 || p < 1) throw std::invalid_argument("default_lambda_node: n and p must be positive");
  return std::sqrt(std::log(static_cast<double>(std::max<Index>(p, 2))) / static_cast<double>(n));
}

namespace {

constexpr int kMaxSweeps = 20000;
constexpr double kSweepTol = 1e-13;

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Coordinate descent for
//   min_g (1/2)(S_jj - 2 S_{-j,j}'g + g'S_{-j,-j}g) + lambda ||g||_1
// with g indexed over all p coordinates and g_j pinned at 0.
Vector nodewise_lasso(const Matrix& S, Index j, double lambda) {
  const Index p = S.rows();
  Vector g = Vector::Zero(p);
  Vector Sg = Vector::Zero(p);  // S g
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double biggest = 0.0;
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      const double skk = S(k, k);
      if (!(skk > 0.0)) continue;
      const double partial = S(k, j) - (Sg[k] - skk * g[k]);
      const double next = soft(partial, lambda) / skk;
      const double delta = next - g[k];
      if (delta != 0.0) {
        Sg += delta * S.col(k);
        g[k] = next;
        biggest = std::max(biggest, std::abs(delta) * std::sqrt(skk));
      }
    }
    if (biggest <= kSweepTol) break;
  }
  return g;
}

Vector nodewise_exact(const Matrix& S, Index j) {
  const Index p = S.rows();
  Matrix A(p - 1, p - 1);
  Vector b(p - 1);
  for (Index r = 0, rr = 0; r < p; ++r) {
    if (r == j) continue;
    b[rr] = S(r, j);
    for (Index c = 0, cc = 0; c < p; ++c) {
      if (c == j) continue;
      A(rr, cc++) = S(r, c);
    }
    ++rr;
  }
  Vector g = Vector::Zero(p);
  if (p == 1) return g;
  const Vector sol = A.ldlt().solve(b);
  for (Index r = 0, rr = 0; r < p; ++r) {
    if (r == j) continue;
    g[r] = sol[rr++];
  }
  return g;
}

}  // namespace

NodewiseResult nodewise_on_gram(const Matrix& gram, double lambda_node, int threads) {
  if (gram.rows() != gram.cols()) throw DimensionError("nodewise: Gram matrix must be square");
  if (!(lambda_node >= 0.0) || !std::isfinite(lambda_node)) {
    throw std::invalid_argument("nodewise: lambda_node must be nonnegative");
  }
  if (!gram.allFinite()) throw std::invalid_argument("nodewise: Gram matrix has non-finite entries");
  const Index p = gram.rows();
  NodewiseResult out;
  out.theta_hat = Matrix::Zero(p, p);
  out.tau2 = Vector::Zero(p);
  parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t jj) {
    const Index j = static_cast<Index>(jj);
    const Vector g = lambda_node > 0.0 ? nodewise_lasso(gram, j, lambda_node) : nodewise_exact(gram, j);
    const Vector sg = gram * g;
    const double quad = gram(j, j) - 2.0 * g.dot(gram.col(j)) + g.dot(sg);
    const double tau2 = quad + lambda_node * g.lpNorm<1>();
    if (!(tau2 > 0.0)) {
      std::ostringstream os;
      os << "nodewise: tau^2 = " << tau2 << " for column " << j << " (degenerate column)";
      throw std::invalid_argument(os.str());
    }
    out.tau2[j] = tau2;
    Vector row = -g;
    row[j] = 1.0;
    out.theta_hat.row(j) = row.transpose() / tau2;
  });
  return out;
}

Matrix nodewise_inverse(const Dataset& data, const Vector& beta_hat, double lambda_node,
                        int threads) {
  return nodewise_on_gram(nb_hessian(beta_hat, data), lambda_node, threads).theta_hat;
}

DebiasResult debias(const Vector& beta_hat, const Dataset& data, const Matrix& theta_hat,
                    double level) {
  require_length(beta_hat, data.p(), "beta_hat");
  if (theta_hat.rows() != data.p() || theta_hat.cols() != data.p()) {
    throw DimensionError("debias: Theta must be p x p");
  }
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("debias: level must lie in (0, 1)");
  DebiasResult out;
  out.level = level;
  out.theta_hat = theta_hat;
  out.b_hat = debias_step(beta_hat, nb_score(beta_hat, data), theta_hat);
  const Matrix G = observation_scores(beta_hat, data);
  const double n = static_cast<double>(data.n());
  const Matrix TG = theta_hat * G.transpose();  // p x n
  out.se = (TG.array().square().rowwise().sum() / (n * n)).sqrt().matrix();
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + 0.5 * level);
  out.ci_low = out.b_hat - z * out.se;
  out.ci_high = out.b_hat + z * out.se;
  return out;
}

DebiasResult debias(const Fit& fit, const Dataset& data, const Matrix& theta_hat, double level) {
  if (!fit.converged) throw std::invalid_argument("debias needs a converged fit");
  return debias(fit.beta, data, theta_hat, level);
}

Vector debias_step(const Vector& beta, const Vector& grad, const Matrix& theta_hat) {
  if (grad.size() != beta.size() || theta_hat.rows() != beta.size() ||
      theta_hat.cols() != beta.size()) {
    throw DimensionError("debias_step: dimension mismatch");
  }
  return beta - theta_hat * grad;
}

Vector debias_kkt_form(const Vector& beta_hat, const Dataset& data, const Penalty& pen,
                       const Matrix& theta_hat) {
  pen.validate();
  require_length(beta_hat, data.p(), "beta_hat");
  if (theta_hat.rows() != data.p() || theta_hat.cols() != data.p()) {
    throw DimensionError("debias: Theta must be p x p");
  }
  const Vector g = nb_score(beta_hat, data);
  Vector s(beta_hat.size());
  for (Index j = 0; j < s.size(); ++j) {
    if (beta_hat[j] != 0.0) {
      s[j] = beta_hat[j] > 0.0 ? 1.0 : -1.0;
    } else {
      s[j] = pen.lambda1 > 0.0 ? std::clamp(-g[j] / pen.lambda1, -1.0, 1.0) : 0.0;
    }
  }
  return beta_hat + theta_hat * (2.0 * pen.lambda2 * beta_hat + pen.lambda1 * s);
}

double debias_form_tolerance(const Matrix& theta_hat, double tol) {
  return 10.0 * tol * theta_hat.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace nbelnet
