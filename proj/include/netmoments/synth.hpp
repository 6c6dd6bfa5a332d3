#pragma once

// Seeded generators for synthetic networks, input distributions and images.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "netmoments/gauss.hpp"
#include "netmoments/plnet.hpp"

namespace netmoments::synth {

struct NetSpec {
  // Layer widths including input and output, e.g. {64, 32, 16, 4}.
  std::vector<Eigen::Index> widths;
  // Weights ~ N(0, weight_scale^2 * 2 / fan_in), biases ~ N(0, bias_scale^2).
  double weight_scale = 1.0;
  double bias_scale = 0.1;
  std::uint64_t seed = 0;
};

// ReLU after every layer but the last.
PLNetwork random_network(const NetSpec& spec);

TruncatedNet random_truncated(Eigen::Index n, Eigen::Index p, Eigen::Index d,
                              double bias_scale, std::uint64_t seed);

// Random SPD covariance with trace = variance * n.
Eigen::MatrixXd random_covariance(Eigen::Index n, double variance, std::uint64_t seed);

Eigen::VectorXd random_vector(Eigen::Index n, double scale, std::uint64_t seed);

// Smooth blob-and-stroke pattern in [0, 1], row-major width x height.
Eigen::VectorXd synthetic_image(Eigen::Index width, Eigen::Index height, std::uint64_t seed);

}  // namespace netmoments::synth
