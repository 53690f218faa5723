#include "nbelnet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nbelnet/model.hpp"

namespace nbelnet {

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("solver max_iter must be at least 1");
  if (!(step_init > 0.0)) throw std::invalid_argument("solver step_init must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) {
    throw std::invalid_argument("solver backtrack must lie in (0, 1)");
  }
}

Vector elastic_net_prox(const Vector& z, double t, const Penalty& pen) {
  const double thr = t * pen.lambda1;
  const double shrink = 1.0 / (1.0 + 2.0 * t * pen.lambda2);
  Vector out(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    const double a = std::abs(z[j]) - thr;
    out[j] = a > 0.0 ? std::copysign(a * shrink, z[j]) : 0.0;
  }
  return out;
}

namespace {

KktReport kkt_from_gradient(const Vector& beta, const Vector& grad, const Penalty& pen,
                            double tol) {
  KktReport rep;
  rep.residuals.resize(beta.size());
  for (Index k = 0; k < beta.size(); ++k) {
    const double b = beta[k];
    if (b != 0.0) {
      rep.residuals[k] =
          std::abs(grad[k] + std::copysign(pen.lambda1 + 2.0 * pen.lambda2 * std::abs(b), b));
    } else {
      rep.residuals[k] = std::max(0.0, std::abs(grad[k]) - pen.lambda1);
    }
  }
  rep.max_violation = beta.size() > 0 ? rep.residuals.maxCoeff() : 0.0;
  rep.satisfied = rep.max_violation <= tol;
  rep.exact = pen.lambda2 > 0.0;
  return rep;
}

// Newton iterations on the smooth restriction of the objective to the current
// orthant (support and signs of beta fixed). Steps are truncated so no
// coordinate crosses zero and must satisfy an Armijo decrease; returns false
// when no progress is made.
// Below this predicted decrease the objective cannot resolve a Newton step.
constexpr double kRoundingSlope = 1e-12;

bool polish_on_support(const Dataset& data, const Penalty& pen, Vector& beta, Vector& eta,
                       double& smooth, double& total) {
  const IndexSet S = support_of(beta);
  const Index m = static_cast<Index>(S.size());
  if (m == 0 || m > 2000) return false;
  const auto& X = data.X();
  const double theta = data.theta();
  const double inv_n = 1.0 / static_cast<double>(data.n());
  Matrix XS(data.n(), m);
  Vector b(m);
  Vector sgn(m);
  for (Index c = 0; c < m; ++c) {
    XS.col(c) = X.col(S[static_cast<std::size_t>(c)]);
    b[c] = beta[S[static_cast<std::size_t>(c)]];
    sgn[c] = b[c] > 0.0 ? 1.0 : -1.0;
  }
  bool moved = false;
  for (int it = 0; it < 30; ++it) {
    const Vector r = kernel::residual(eta, data.y(), theta);
    const Vector g = XS.transpose() * r * inv_n + pen.lambda1 * sgn + 2.0 * pen.lambda2 * b;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-14) break;
    Vector w(data.n());
    for (Index i = 0; i < data.n(); ++i) {
      const double frac = kernel::mean_fraction(eta[i], theta);
      w[i] = theta * (theta + data.y()[i]) * frac * kernel::inv_theta_plus_exp(eta[i], theta);
    }
    Matrix Hs = Matrix::Zero(m, m);
    Hs.selfadjointView<Eigen::Lower>().rankUpdate((w.cwiseSqrt().asDiagonal() * XS).transpose(), inv_n);
    Hs.diagonal().array() += 2.0 * pen.lambda2;
    const Eigen::LDLT<Matrix> ldlt(Hs.selfadjointView<Eigen::Lower>());
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) return moved;
    const Vector d = -ldlt.solve(g);
    if (!d.allFinite()) return moved;
    double alpha = 1.0;
    for (Index c = 0; c < m; ++c) {
      if (b[c] * d[c] < 0.0) alpha = std::min(alpha, 0.999 * -b[c] / d[c]);
    }
    const double slope = g.dot(d);
    if (!(slope < 0.0)) return moved;
    bool accepted = false;
    for (int bt = 0; bt < 40 && alpha > 1e-12; ++bt, alpha *= 0.5) {
      const Vector bn = b + alpha * d;
      const Vector en = XS * bn;
      if (!kernel::in_domain(en)) continue;
      const double sn = kernel::loss(en, data.y(), theta);
      Vector full = beta;
      for (Index c = 0; c < m; ++c) full[S[static_cast<std::size_t>(c)]] = bn[c];
      const double tn = sn + pen.value(full);
      bool ok = tn <= total + 1e-4 * alpha * slope;
      if (!ok && -slope <= kRoundingSlope * std::max(1.0, std::abs(total)) &&
          tn <= total + 16.0 * std::numeric_limits<double>::epsilon() * std::abs(total)) {
        const Vector rn = kernel::residual(en, data.y(), theta);
        const Vector gn = XS.transpose() * rn * inv_n + pen.lambda1 * sgn + 2.0 * pen.lambda2 * bn;
        ok = gn.lpNorm<Eigen::Infinity>() < 0.5 * g.lpNorm<Eigen::Infinity>();
      }
      if (ok) {
        b = bn;
        beta = std::move(full);
        eta = en;
        smooth = sn;
        total = tn;
        accepted = true;
        moved = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return moved;
}

}  // namespace

KktReport kkt_check(const Vector& beta, const Dataset& data, const Penalty& pen, double tol) {
  pen.validate();
  require_length(beta, data.p(), "beta");
  return kkt_from_gradient(beta, nb_score(beta, data), pen, tol);
}

Fit fit(const Dataset& data, const Penalty& pen, const SolverConfig& config,
        const std::optional<Vector>& beta0) {
  pen.validate();
  config.validate();

  Fit out;
  out.penalty = pen;
  if (pen.lambda1 == 0.0 && pen.lambda2 == 0.0 && data.p() > data.n()) {
    out.warnings.emplace_back("unpenalized fit with p > n: the MLE may not exist");
  }

  const auto& X = data.X();
  const auto& y = data.y();
  const double theta = data.theta();
  const double inv_n = 1.0 / static_cast<double>(data.n());

  Vector beta = beta0 ? *beta0 : Vector::Zero(data.p());
  require_length(beta, data.p(), "beta0");

  Vector eta = kernel::linear_predictor(beta, data);
  double smooth = kernel::loss(eta, y, theta);
  Vector grad = X.transpose() * kernel::residual(eta, y, theta) * inv_n;
  double total = smooth + pen.value(beta);
  out.objective_history.push_back(total);

  double step = config.step_init;
  constexpr double kMinStep = 1e-300;
  constexpr double kMaxStep = 1e12;

  int it = 0;
  bool stalled = false;
  // Accepted steps in a row with an unchanged sign pattern, and the count at
  // which the next active-set Newton polish is tried.
  int stable = 0;
  int next_polish = 5;
  KktReport kkt = kkt_from_gradient(beta, grad, pen, config.tol);
  while (!kkt.satisfied && it < config.max_iter) {
    ++it;
    bool accepted = false;
    Vector cand;
    Vector cand_eta;
    double cand_smooth = 0.0;
    while (step > kMinStep) {
      cand = elastic_net_prox(beta - step * grad, step, pen);
      cand_eta = X * cand;
      if (kernel::in_domain(cand_eta)) {
        cand_smooth = kernel::loss(cand_eta, y, theta);
        const Vector d = cand - beta;
        const double model = smooth + grad.dot(d) + d.squaredNorm() / (2.0 * step);
        // Relative slack absorbs rounding in the loss evaluation only.
        if (cand_smooth <= model + 1e-15 * std::abs(smooth)) {
          accepted = true;
          break;
        }
      }
      step *= config.backtrack;
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    const double cand_total = cand_smooth + pen.value(cand);
    if (cand_total > total) {
      // The majorization guarantees descent up to rounding; never move uphill.
      if (cand == beta) {
        stalled = true;
        break;
      }
      step *= config.backtrack;
      continue;
    }
    const bool same_pattern = (cand.array() > 0.0).matrix() == (beta.array() > 0.0).matrix() &&
                              (cand.array() < 0.0).matrix() == (beta.array() < 0.0).matrix();
    if (same_pattern) {
      ++stable;
    } else {
      stable = 0;
      next_polish = 5;
    }
    beta = std::move(cand);
    eta = std::move(cand_eta);
    smooth = cand_smooth;
    total = cand_total;
    grad = X.transpose() * kernel::residual(eta, y, theta) * inv_n;
    out.objective_history.push_back(total);
    kkt = kkt_from_gradient(beta, grad, pen, config.tol);
    step = std::min(step / config.backtrack, kMaxStep);
    if (!kkt.satisfied && stable >= next_polish) {
      if (polish_on_support(data, pen, beta, eta, smooth, total)) {
        grad = X.transpose() * kernel::residual(eta, y, theta) * inv_n;
        out.objective_history.push_back(total);
        kkt = kkt_from_gradient(beta, grad, pen, config.tol);
      }
      next_polish = stable + 2 * next_polish;
    }
  }
  if (stalled) out.warnings.emplace_back("line search stalled before reaching the KKT tolerance");

  out.beta = std::move(beta);
  out.iterations = it;
  out.kkt = kkt_check(out.beta, data, pen, config.tol);
  out.converged = out.kkt.satisfied;
  out.objective_value = total;
  return out;
}

std::vector<Fit> fit_path(const Dataset& data, const std::vector<double>& lambda1_grid,
                          double lambda2, const SolverConfig& config) {
  if (!std::is_sorted(lambda1_grid.begin(), lambda1_grid.end(), std::greater<>())) {
    throw std::invalid_argument("lambda1 grid must be sorted in descending order");
  }
  std::vector<Fit> path;
  path.reserve(lambda1_grid.size());
  std::optional<Vector> warm;
  for (double l1 : lambda1_grid) {
    path.push_back(fit(data, Penalty{l1, lambda2}, config, warm));
    warm = path.back().beta;
  }
  return path;
}

namespace {

// Visits every point of the grid center + k*step, |k| <= half, per coordinate.
template <typename F>
void for_each_grid_point(const Vector& center, double step, long half, F&& visit) {
  const Index p = center.size();
  std::vector<long> k(static_cast<std::size_t>(p), -half);
  Vector point(p);
  while (true) {
    for (Index j = 0; j < p; ++j) point[j] = center[j] + static_cast<double>(k[j]) * step;
    visit(point);
    Index j = 0;
    while (j < p && ++k[static_cast<std::size_t>(j)] > half) {
      k[static_cast<std::size_t>(j)] = -half;
      ++j;
    }
    if (j == p) break;
  }
}

double safe_objective(const Vector& beta, const Dataset& data, const Penalty& pen) {
  const Vector eta = data.X() * beta;
  if (!kernel::in_domain(eta)) return std::numeric_limits<double>::infinity();
  return kernel::loss(eta, data.y(), data.theta()) + pen.value(beta);
}

}  // namespace

Vector brute_force_fit(const Dataset& data, const Penalty& pen, double box, double step,
                       int refine_levels) {
  pen.validate();
  if (data.p() > 3) throw std::invalid_argument("brute_force_fit supports p <= 3 only");
  if (!(step > 0.0) || !(box > 0.0)) {
    throw std::invalid_argument("brute_force_fit needs positive box and step");
  }
  const long half = static_cast<long>(std::floor(box / step + 1e-9));
  Vector best = Vector::Zero(data.p());
  double best_val = safe_objective(best, data, pen);
  auto visit = [&](const Vector& pt) {
    const double v = safe_objective(pt, data, pen);
    if (v < best_val) {
      best_val = v;
      best = pt;
    }
  };
  for_each_grid_point(Vector::Zero(data.p()), step, half, visit);
  double h = step;
  for (int level = 0; level < refine_levels; ++level) {
    const Vector center = best;
    h /= 10.0;
    for_each_grid_point(center, h, 20, visit);
  }
  return best;
}

}  // namespace nbelnet
