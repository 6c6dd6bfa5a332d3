#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netmoments/affine_map.hpp"

namespace netmoments {

// Sequence of affine layers, each optionally followed by max(., 0).
class PLNetwork {
 public:
  PLNetwork() = default;
  // Throws DimensionError if layers do not chain and PreconditionError if the
  // last layer is flagged as ReLU.
  PLNetwork(std::vector<AffineMap> layers, std::vector<bool> relu_after);

  std::size_t num_layers() const { return layers_.size(); }
  const AffineMap& layer(std::size_t k) const { return layers_[k]; }
  bool relu_after(std::size_t k) const { return relu_after_[k]; }
  const std::vector<AffineMap>& layers() const { return layers_; }
  const std::vector<bool>& relu_flags() const { return relu_after_; }

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;

 private:
  std::vector<AffineMap> layers_;
  std::vector<bool> relu_after_;
};

// g(x) = B max(A x + c1, 0) + c2, obtained by linearizing a deeper network
// around source_point on both sides of ReLU layer layer_index.
struct TruncatedNet {
  AffineMap a;
  AffineMap b;
  Eigen::VectorXd source_point;
  std::size_t layer_index = 0;

  TruncatedNet() = default;
  TruncatedNet(AffineMap a_map, AffineMap b_map, Eigen::VectorXd point = {},
               std::size_t layer = 0);

  Eigen::Index input_dim() const { return a.in_dim(); }
  Eigen::Index hidden_dim() const { return a.out_dim(); }
  Eigen::Index output_dim() const { return b.out_dim(); }

  // Scalars needed to store the surrogate: the two maps plus the point.
  Eigen::Index storage_size() const;

  PLNetwork as_network() const;
};

Eigen::VectorXd forward(const PLNetwork& net, const Eigen::VectorXd& x);
Eigen::VectorXd forward(const TruncatedNet& tn, const Eigen::VectorXd& x);

// Exact local affine map of layers [from_layer, to_layer) at x, where x lives
// in the input space of from_layer. Pre-activations equal to zero count as
// inactive. The returned map reproduces the segment output at x.
AffineMap segment_jacobian(const PLNetwork& net, std::size_t from_layer,
                           std::size_t to_layer, const Eigen::VectorXd& x);

// Activation pattern of every ReLU layer at x (pre-activation > 0).
std::vector<std::vector<bool>> activation_pattern(const PLNetwork& net,
                                                  const Eigen::VectorXd& x);

// Linearizes layers before and after ReLU layer `layer` (0-based) at x.
TruncatedNet two_stage_linearize(const PLNetwork& net, std::size_t layer,
                                 const Eigen::VectorXd& x);

// Entry whose source_point is closest to x in Euclidean distance; ties go to
// the lowest index.
const TruncatedNet& nearest_linearization(const std::vector<TruncatedNet>& points,
                                          const Eigen::VectorXd& x);

}  // namespace netmoments
