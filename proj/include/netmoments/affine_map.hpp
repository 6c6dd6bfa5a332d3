#pragma once

#include <Eigen/Dense>

namespace netmoments {

// y = weights * x + bias
struct AffineMap {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  AffineMap() = default;
  // Throws DimensionError if bias length differs from the row count.
  AffineMap(Eigen::MatrixXd w, Eigen::VectorXd b);

  static AffineMap identity(Eigen::Index n);

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  // this(inner(x))
  AffineMap compose(const AffineMap& inner) const;
};

}  // namespace netmoments
