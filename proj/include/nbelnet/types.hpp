#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace nbelnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Sorted, 0-based column indices.
using IndexSet = std::vector<Index>;

/// Raised when an intermediate quantity leaves the representable range,
/// e.g. a linear predictor |x_i'beta| above the overflow clamp.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when vector/matrix shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a theoretical bound's hypotheses fail (e.g. tau > e^{-1}/2),
/// so the bound is not reported.
class InapplicableBound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A negative binomial regression instance: covariates, counts and the
/// known dispersion theta.
class Dataset {
 public:
  Dataset(Matrix X, Vector y, double theta);

  const Matrix& X() const noexcept { return X_; }
  const Vector& y() const noexcept { return y_; }
  double theta() const noexcept { return theta_; }
  Index n() const noexcept { return X_.rows(); }
  Index p() const noexcept { return X_.cols(); }

  /// max_{i,j} |x_ij|
  double max_abs_x() const noexcept { return max_abs_x_; }

 private:
  Matrix X_;
  Vector y_;
  double theta_;
  double max_abs_x_;
};

/// Elastic-net tuning pair: lambda1 * ||b||_1 + lambda2 * ||b||_2^2.
struct Penalty {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  void validate() const;
  double value(const Vector& beta) const;
};

IndexSet support_of(const Vector& beta, double zero_tol = 0.0);
IndexSet complement(const IndexSet& set, Index p);

void require_length(const Vector& v, Index expected, const char* what);

}  // namespace nbelnet
