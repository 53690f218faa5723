// Multi-start searches for the compatibility factor, the weak cone
// invertibility factor and the Stabil constant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nbelnet/rng.hpp"
#include "nbelnet/theory.hpp"

namespace nbelnet {

void ConeSpec::validate(Index p) const {
  if (!(slope > 0.0) || !std::isfinite(slope)) throw std::invalid_argument("cone slope must be positive");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("cone epsilon must be nonnegative");
  if (support.empty()) throw std::invalid_argument("cone support H must be nonempty");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < 0 || support[i] >= p) throw std::invalid_argument("cone support index out of range");
    if (i > 0 && support[i] <= support[i - 1]) {
      throw std::invalid_argument("cone support must be sorted and duplicate-free");
    }
  }
}

namespace {

constexpr int kMaxInnerIter = 3000;
// Local searches stop once an iteration lowers the value by less than this
// relative amount.
constexpr double kRelDrop = 1e-9;

void validate_sigma(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw DimensionError("sigma must be square");
  if (!sigma.allFinite()) throw std::invalid_argument("sigma has non-finite entries");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument("sigma must be symmetric");
  }
  Eigen::LDLT<Matrix> ldlt(sigma);
  if (ldlt.vectorD().minCoeff() < -1e-9 * scale) {
    throw std::invalid_argument("sigma must be positive semidefinite");
  }
}

// Euclidean projection of v onto { w >= 0, sum w = radius }.
Vector project_simplex(const Vector& v, double radius) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double shift = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - radius) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) shift = t;
  }
  return (v.array() - shift).max(0.0).matrix();
}

// Euclidean projection onto the l1 ball of the given radius.
Vector project_l1_ball(const Vector& v, double radius) {
  if (v.size() == 0 || v.lpNorm<1>() <= radius) return v;
  if (radius <= 0.0) return Vector::Zero(v.size());
  const Vector w = project_simplex(v.cwiseAbs(), radius);
  return v.cwiseSign().cwiseProduct(w);
}

Vector gather(const Vector& b, const IndexSet& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = b[idx[i]];
  return out;
}

void scatter(Vector& b, const IndexSet& idx, const Vector& vals) {
  for (std::size_t i = 0; i < idx.size(); ++i) b[idx[i]] = vals[static_cast<Index>(i)];
}

double largest_eigenvalue(const Matrix& sigma) {
  Vector v = Vector::Ones(sigma.rows()) / std::sqrt(static_cast<double>(sigma.rows()));
  double lam = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = sigma * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / nw;
    if (std::abs(next - lam) <= 1e-10 * std::abs(next)) {
      lam = next;
      break;
    }
    lam = next;
  }
  // Power iteration approaches the top eigenvalue from below; pad it, and
  // the largest diagonal entry is a valid lower bound as well.
  return std::max(1.05 * lam, sigma.diagonal().maxCoeff());
}

// Feasible face of the normalized cone problem: b_H = sign .* w with w in
// the unit simplex, ||b_Hc||_1 <= slope.
struct Face {
  const IndexSet* H;
  const IndexSet* Hc;
  Vector signs;
  double hc_radius;

  Vector project(const Vector& b) const {
    Vector out = b;
    const Vector vh = gather(b, *H).cwiseProduct(signs);
    scatter(out, *H, project_simplex(vh, 1.0).cwiseProduct(signs));
    if (!Hc->empty()) scatter(out, *Hc, project_l1_ball(gather(b, *Hc), hc_radius));
    return out;
  }
};

Vector random_signs(Rng& rng, Index d) {
  Vector s(d);
  std::bernoulli_distribution coin(0.5);
  for (Index i = 0; i < d; ++i) s[i] = coin(rng) ? 1.0 : -1.0;
  return s;
}

// Sign pattern for restart `index`: all 2^{d-1} patterns (first sign fixed,
// since b and -b give the same ratio) are visited in order when the budget
// covers them, otherwise patterns are random.
Vector restart_signs(std::uint64_t index, Index d, int budget, Rng& rng) {
  if (d <= 30) {
    const std::uint64_t count = std::uint64_t{1} << (d - 1);
    if (count <= static_cast<std::uint64_t>(budget)) {
      const std::uint64_t code = index % count;
      Vector s(d);
      s[0] = 1.0;
      for (Index i = 1; i < d; ++i) s[i] = ((code >> (i - 1)) & 1U) ? -1.0 : 1.0;
      return s;
    }
  }
  return random_signs(rng, d);
}

// Random point of the face.
Vector random_face_point(const Face& face, Index p, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector b = Vector::Zero(p);
  Vector w(static_cast<Index>(face.H->size()));
  for (Index i = 0; i < w.size(); ++i) w[i] = expo(rng);
  w /= w.sum();
  scatter(b, *face.H, w.cwiseProduct(face.signs));
  if (!face.Hc->empty()) {
    const Index m = static_cast<Index>(face.Hc->size());
    Vector v(m);
    for (Index i = 0; i < m; ++i) v[i] = expo(rng) * (unif(rng) < 0.5 ? -1.0 : 1.0);
    const double mass = face.hc_radius * unif(rng);
    v *= mass / std::max(v.lpNorm<1>(), std::numeric_limits<double>::min());
    scatter(b, *face.Hc, v);
  }
  return b;
}

// Symmetric matrix-vector product reading one triangle only.
Vector sym_mul(const Matrix& sigma, const Vector& v) {
  return sigma.selfadjointView<Eigen::Lower>() * v;
}

// Accelerated projected gradient (with adaptive restart) for min b'Sb on a
// face. The problem is convex, so this reaches the face minimum. S y is
// carried along by linearity, so each iteration costs one product.
double minimize_quadratic_on_face(const Matrix& sigma, const Face& face, Vector x,
                                  double lipschitz) {
  x = face.project(x);
  if (lipschitz <= 0.0) return 0.0;
  const double step = 1.0 / lipschitz;
  Vector sx = sym_mul(sigma, x);
  double fx = x.dot(sx);
  Vector y = x;
  Vector sy = sx;
  double t = 1.0;
  for (int it = 0; it < kMaxInnerIter; ++it) {
    Vector xn = face.project(y - (2.0 * step) * sy);
    Vector sxn = sym_mul(sigma, xn);
    const double fn = xn.dot(sxn);
    if (fn > fx) {
      // Momentum overshoot: restart from the incumbent.
      if (y == x) break;
      y = x;
      sy = sx;
      t = 1.0;
      continue;
    }
    const double move = (xn - x).lpNorm<Eigen::Infinity>();
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double coef = (t - 1.0) / tn;
    y = xn + coef * (xn - x);
    sy = sxn + coef * (sxn - sx);
    t = tn;
    const double drop = fx - fn;
    x = std::move(xn);
    sx = std::move(sxn);
    fx = fn;
    if (move <= 1e-12 || drop <= kRelDrop * std::max(fx, 1e-300)) break;
  }
  return std::max(fx, 0.0);
}

// Monotone projected gradient with backtracking for a smooth ratio on the
// feasible set described by `project`. value and gradient receive the point
// together with its product S x.
template <typename Value, typename Gradient, typename Project>
double descend(const Matrix& sigma, Vector x, Value&& value, Gradient&& gradient,
               Project&& project, double step0) {
  x = project(x);
  Vector sx = sym_mul(sigma, x);
  double fx = value(x, sx);
  double step = step0;
  for (int it = 0; it < kMaxInnerIter && std::isfinite(fx); ++it) {
    const Vector g = gradient(x, sx);
    bool improved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vector xn = project(x - step * g);
      Vector sxn = sym_mul(sigma, xn);
      const double fn = value(xn, sxn);
      if (std::isfinite(fn) && fn < fx) {
        const double move = (xn - x).lpNorm<Eigen::Infinity>();
        const double drop = fx - fn;
        x = std::move(xn);
        sx = std::move(sxn);
        fx = fn;
        improved = move > 1e-13 && drop > kRelDrop * std::abs(fx);
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    step *= 2.0;
  }
  return fx;
}

double lq_norm(const Vector& b, double q) {
  if (q == 1.0) return b.lpNorm<1>();
  if (q == 2.0) return b.norm();
  return std::pow(b.cwiseAbs().array().pow(q).sum(), 1.0 / q);
}

Vector lq_norm_gradient(const Vector& b, double q) {
  if (q == 1.0) return b.cwiseSign();
  const double nrm = lq_norm(b, q);
  if (nrm == 0.0) return Vector::Zero(b.size());
  Vector g(b.size());
  for (Index j = 0; j < b.size(); ++j) {
    g[j] = std::copysign(std::pow(std::abs(b[j]) / nrm, q - 1.0), b[j]);
  }
  return g;
}

void check_budget(int budget) {
  if (budget < 1) throw std::invalid_argument("cone search budget must be at least 1");
}

}  // namespace

double compatibility_factor(const Matrix& sigma, const ConeSpec& cone, int budget,
                            std::uint64_t seed) {
  validate_sigma(sigma);
  cone.validate(sigma.rows());
  check_budget(budget);
  if (cone.epsilon != 0.0) throw std::invalid_argument("compatibility factor needs epsilon = 0");
  const Index p = sigma.rows();
  const Index d = cone.d_star();
  const IndexSet Hc = complement(cone.support, p);
  const double lip = 2.0 * largest_eigenvalue(sigma);

  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < budget; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Face face{&cone.support, &Hc, restart_signs(static_cast<std::uint64_t>(r), d, budget, rng),
              cone.slope};
    const Vector x0 = random_face_point(face, p, rng);
    best = std::min(best, minimize_quadratic_on_face(sigma, face, x0, lip));
    if (best == 0.0) break;
  }
  return std::sqrt(static_cast<double>(d) * best);
}

double weak_cif(const Matrix& sigma, const ConeSpec& cone, double q, int budget,
                std::uint64_t seed) {
  validate_sigma(sigma);
  cone.validate(sigma.rows());
  check_budget(budget);
  if (!(q >= 1.0) || !std::isfinite(q)) throw std::invalid_argument("weak CIF needs finite q >= 1");
  if (cone.epsilon != 0.0) throw std::invalid_argument("weak CIF needs epsilon = 0");
  const Index p = sigma.rows();
  const Index d = cone.d_star();
  const IndexSet Hc = complement(cone.support, p);
  const double step0 = 1.0 / (2.0 * largest_eigenvalue(sigma) + 1e-300);

  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < budget; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Face face{&cone.support, &Hc, restart_signs(static_cast<std::uint64_t>(r), d, budget, rng),
              cone.slope};
    const Vector x0 = random_face_point(face, p, rng);
    auto value = [&](const Vector& b, const Vector& sb) { return b.dot(sb) / lq_norm(b, q); };
    auto gradient = [&](const Vector& b, const Vector& sb) -> Vector {
      const double nq = lq_norm(b, q);
      return 2.0 * sb / nq - (b.dot(sb) / (nq * nq)) * lq_norm_gradient(b, q);
    };
    auto project = [&](const Vector& b) { return face.project(b); };
    best = std::min(best, descend(sigma, x0, value, gradient, project, step0));
    if (best == 0.0) break;
  }
  return std::pow(static_cast<double>(d), 1.0 / q) * std::max(best, 0.0);
}

StabilEstimate stabil_constant(const Matrix& sigma, const ConeSpec& cone, double radius,
                               int budget, std::uint64_t seed) {
  validate_sigma(sigma);
  cone.validate(sigma.rows());
  check_budget(budget);
  if (!(radius > 0.0)) throw std::invalid_argument("Stabil search radius must be positive");
  const Index p = sigma.rows();
  const IndexSet& H = cone.support;
  const IndexSet Hc = complement(H, p);
  const double c = cone.slope;
  const double eps = cone.epsilon;
  const double step0 = 1.0 / (2.0 * largest_eigenvalue(sigma) + 1e-300);

  auto value = [&](const Vector& b, const Vector& sb) {
    const double nh = gather(b, H).squaredNorm();
    if (nh <= 0.0) return std::numeric_limits<double>::infinity();
    return (b.dot(sb) + eps) / nh;
  };
  auto gradient = [&](const Vector& b, const Vector& sb) -> Vector {
    const double nh = gather(b, H).squaredNorm();
    Vector g = 2.0 * sb / nh;
    const double coef = 2.0 * (b.dot(sb) + eps) / (nh * nh);
    for (Index j : H) g[j] -= coef * b[j];
    return g;
  };
  // Retraction onto V(c, eps) intersected with the l1 ball of the radius.
  auto project = [&](const Vector& b) -> Vector {
    Vector out = b;
    const double allowed = c * gather(b, H).lpNorm<1>() + eps;
    if (!Hc.empty()) scatter(out, Hc, project_l1_ball(gather(b, Hc), allowed));
    const double l1 = out.lpNorm<1>();
    if (l1 > radius) out *= radius / l1;
    return out;
  };

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < budget; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    Vector b = Vector::Zero(p);
    Vector bh(static_cast<Index>(H.size()));
    for (Index i = 0; i < bh.size(); ++i) bh[i] = gauss(rng);
    bh *= (1.0 - unif(rng)) * radius / ((1.0 + c) * bh.lpNorm<1>());
    scatter(b, H, bh);
    if (!Hc.empty() && r > 0) {
      Vector bc(static_cast<Index>(Hc.size()));
      for (Index i = 0; i < bc.size(); ++i) bc[i] = expo(rng) * (unif(rng) < 0.5 ? -1.0 : 1.0);
      bc *= unif(rng) * (c * bh.lpNorm<1>() + eps) / bc.lpNorm<1>();
      scatter(b, Hc, bc);
    }
    best = std::min(best, descend(sigma, b, value, gradient, project, step0 * bh.squaredNorm()));
  }
  StabilEstimate est;
  if (!(best > 0.0)) {
    est.k = 0.0;
    est.degenerate = true;
  } else {
    est.k = std::min(best, 1.0);
  }
  return est;
}

}  // namespace nbelnet
