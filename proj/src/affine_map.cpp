#include "netmoments/affine_map.hpp"

#include <string>

#include "netmoments/errors.hpp"

namespace netmoments {

AffineMap::AffineMap(Eigen::MatrixXd w, Eigen::VectorXd b)
    : weights(std::move(w)), bias(std::move(b)) {
  if (bias.size() != weights.rows()) {
    throw DimensionError("AffineMap: bias length " + std::to_string(bias.size()) +
                         " != weight rows " + std::to_string(weights.rows()));
  }
}

AffineMap AffineMap::identity(Eigen::Index n) {
  return {Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)};
}

Eigen::VectorXd AffineMap::apply(const Eigen::VectorXd& x) const {
  if (x.size() != in_dim()) {
    throw DimensionError("AffineMap::apply: input length " +
                         std::to_string(x.size()) + " != " +
                         std::to_string(in_dim()));
  }
  return weights * x + bias;
}

AffineMap AffineMap::compose(const AffineMap& inner) const {
  if (inner.out_dim() != in_dim()) {
    throw DimensionError("AffineMap::compose: dimensions do not chain");
  }
  return {weights * inner.weights, weights * inner.bias + bias};
}

}  // namespace netmoments
