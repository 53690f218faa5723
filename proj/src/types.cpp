#include "nbelnet/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nbelnet {

Dataset::Dataset(Matrix X, Vector y, double theta)
    : X_(std::move(X)), y_(std::move(y)), theta_(theta), max_abs_x_(0.0) {
  if (X_.rows() < 1 || X_.cols() < 1) {
    throw std::invalid_argument("dataset needs n >= 1 and p >= 1");
  }
  if (y_.size() != X_.rows()) {
    std::ostringstream os;
    os << "response length " << y_.size() << " does not match " << X_.rows() << " rows";
    throw DimensionError(os.str());
  }
  if (!(theta_ > 0.0) || !std::isfinite(theta_)) {
    throw std::invalid_argument("dispersion theta must be positive and finite");
  }
  if (!X_.allFinite()) {
    throw std::invalid_argument("design matrix contains non-finite entries");
  }
  for (Index i = 0; i < y_.size(); ++i) {
    const double v = y_[i];
    if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
      std::ostringstream os;
      os << "response y[" << i << "] = " << v << " is not a nonnegative integer";
      throw std::invalid_argument(os.str());
    }
  }
  max_abs_x_ = X_.cwiseAbs().maxCoeff();
}

void Penalty::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) ||
      !std::isfinite(lambda2)) {
    throw std::invalid_argument("penalty parameters must be finite and nonnegative");
  }
}

double Penalty::value(const Vector& beta) const {
  return lambda1 * beta.lpNorm<1>() + lambda2 * beta.squaredNorm();
}

IndexSet support_of(const Vector& beta, double zero_tol) {
  IndexSet out;
  for (Index j = 0; j < beta.size(); ++j) {
    if (std::abs(beta[j]) > zero_tol) out.push_back(j);
  }
  return out;
}

IndexSet complement(const IndexSet& set, Index p) {
  IndexSet out;
  out.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    if (!std::binary_search(set.begin(), set.end(), j)) out.push_back(j);
  }
  return out;
}

void require_length(const Vector& v, Index expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream os;
    os << what << " has length " << v.size() << ", expected " << expected;
    throw DimensionError(os.str());
  }
}

}  // namespace nbelnet
