#include "netmoments/plnet.hpp"

#include <limits>
#include <string>

#include "netmoments/errors.hpp"

namespace netmoments {

PLNetwork::PLNetwork(std::vector<AffineMap> layers, std::vector<bool> relu_after)
    : layers_(std::move(layers)), relu_after_(std::move(relu_after)) {
  if (layers_.empty()) throw PreconditionError("PLNetwork: needs at least one layer");
  if (relu_after_.size() != layers_.size()) {
    throw DimensionError("PLNetwork: one relu flag per layer required");
  }
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
    if (layers_[k].out_dim() != layers_[k + 1].in_dim()) {
      throw DimensionError("PLNetwork: layer " + std::to_string(k) + " output " +
                           std::to_string(layers_[k].out_dim()) + " != layer " +
                           std::to_string(k + 1) + " input " +
                           std::to_string(layers_[k + 1].in_dim()));
    }
  }
  if (relu_after_.back()) {
    throw PreconditionError("PLNetwork: last layer must not be followed by ReLU");
  }
}

Eigen::Index PLNetwork::input_dim() const { return layers_.front().in_dim(); }
Eigen::Index PLNetwork::output_dim() const { return layers_.back().out_dim(); }

TruncatedNet::TruncatedNet(AffineMap a_map, AffineMap b_map, Eigen::VectorXd point,
                           std::size_t layer)
    : a(std::move(a_map)), b(std::move(b_map)), source_point(std::move(point)),
      layer_index(layer) {
  if (a.out_dim() != b.in_dim()) {
    throw DimensionError("TruncatedNet: A output " + std::to_string(a.out_dim()) +
                         " != B input " + std::to_string(b.in_dim()));
  }
}

Eigen::Index TruncatedNet::storage_size() const {
  return a.weights.size() + a.bias.size() + b.weights.size() + b.bias.size() +
         source_point.size();
}

PLNetwork TruncatedNet::as_network() const { return PLNetwork({a, b}, {true, false}); }

Eigen::VectorXd forward(const PLNetwork& net, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    h = net.layer(k).apply(h);
    if (net.relu_after(k)) h = h.cwiseMax(0.0);
  }
  return h;
}

Eigen::VectorXd forward(const TruncatedNet& tn, const Eigen::VectorXd& x) {
  return tn.b.apply(tn.a.apply(x).cwiseMax(0.0));
}

AffineMap segment_jacobian(const PLNetwork& net, std::size_t from_layer,
                           std::size_t to_layer, const Eigen::VectorXd& x) {
  if (from_layer > to_layer || to_layer > net.num_layers()) {
    throw PreconditionError("segment_jacobian: invalid layer range [" +
                            std::to_string(from_layer) + ", " + std::to_string(to_layer) + ")");
  }
  const Eigen::Index in = from_layer < net.num_layers()
                              ? net.layer(from_layer).in_dim()
                              : net.output_dim();
  if (x.size() != in) throw DimensionError("segment_jacobian: input length mismatch");

  AffineMap acc = AffineMap::identity(in);
  Eigen::VectorXd h = x;
  for (std::size_t k = from_layer; k < to_layer; ++k) {
    const AffineMap& layer = net.layer(k);
    Eigen::VectorXd pre = layer.apply(h);
    acc = layer.compose(acc);
    if (net.relu_after(k)) {
      const Eigen::VectorXd mask = (pre.array() > 0.0).cast<double>();
      acc.weights = mask.asDiagonal() * acc.weights;
      acc.bias = mask.cwiseProduct(acc.bias);
      pre = pre.cwiseMax(0.0);
    }
    h = std::move(pre);
  }
  return acc;
}

std::vector<std::vector<bool>> activation_pattern(const PLNetwork& net,
                                                  const Eigen::VectorXd& x) {
  std::vector<std::vector<bool>> pattern;
  Eigen::VectorXd h = x;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    h = net.layer(k).apply(h);
    if (net.relu_after(k)) {
      std::vector<bool> active(static_cast<std::size_t>(h.size()));
      for (Eigen::Index i = 0; i < h.size(); ++i) active[i] = h[i] > 0.0;
      pattern.push_back(std::move(active));
      h = h.cwiseMax(0.0);
    }
  }
  return pattern;
}

TruncatedNet two_stage_linearize(const PLNetwork& net, std::size_t layer,
                                 const Eigen::VectorXd& x) {
  if (layer >= net.num_layers()) {
    throw PreconditionError("two_stage_linearize: layer " + std::to_string(layer) +
                            " out of range");
  }
  if (!net.relu_after(layer)) {
    throw PreconditionError("two_stage_linearize: layer " + std::to_string(layer) +
                            " is not followed by a ReLU");
  }
  if (x.size() != net.input_dim()) {
    throw DimensionError("two_stage_linearize: input length mismatch");
  }
  // Everything up to and including layer's affine part is folded into A.
  AffineMap before = segment_jacobian(net, 0, layer, x);
  AffineMap a = net.layer(layer).compose(before);
  const Eigen::VectorXd y = a.apply(x).cwiseMax(0.0);
  AffineMap b = segment_jacobian(net, layer + 1, net.num_layers(), y);
  return {std::move(a), std::move(b), x, layer};
}

const TruncatedNet& nearest_linearization(const std::vector<TruncatedNet>& points,
                                          const Eigen::VectorXd& x) {
  if (points.empty()) throw PreconditionError("nearest_linearization: empty list");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].source_point.size() != x.size()) {
      throw DimensionError("nearest_linearization: point dimension mismatch");
    }
    const double d = (points[k].source_point - x).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return points[best];
}

}  // namespace netmoments
