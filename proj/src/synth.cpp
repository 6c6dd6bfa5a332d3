#include "netmoments/synth.hpp"

#include <cmath>
#include <random>

#include "netmoments/errors.hpp"

namespace netmoments::synth {

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

}  // namespace

PLNetwork random_network(const NetSpec& spec) {
  if (spec.widths.size() < 2) throw PreconditionError("random_network: need >= 2 widths");
  std::mt19937_64 rng(stream_seed(spec.seed, 0x4e4554ULL));
  std::vector<AffineMap> layers;
  std::vector<bool> relu;
  for (std::size_t k = 0; k + 1 < spec.widths.size(); ++k) {
    const Eigen::Index in = spec.widths[k];
    const Eigen::Index out = spec.widths[k + 1];
    const double sd = spec.weight_scale * std::sqrt(2.0 / static_cast<double>(in));
    Eigen::MatrixXd w = gaussian_matrix(out, in, sd, rng);
    Eigen::VectorXd b = gaussian_matrix(out, 1, spec.bias_scale, rng);
    layers.emplace_back(std::move(w), std::move(b));
    relu.push_back(k + 2 < spec.widths.size());
  }
  return {std::move(layers), std::move(relu)};
}

TruncatedNet random_truncated(Eigen::Index n, Eigen::Index p, Eigen::Index d,
                              double bias_scale, std::uint64_t seed) {
  const PLNetwork net = random_network({{n, p, d}, 1.0, bias_scale, seed});
  return {net.layer(0), net.layer(1), Eigen::VectorXd::Zero(n), 0};
}

Eigen::MatrixXd random_covariance(Eigen::Index n, double variance, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, 0x434f56ULL));
  const Eigen::MatrixXd f = gaussian_matrix(n, n, 1.0, rng);
  Eigen::MatrixXd cov = f * f.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  cov *= variance * static_cast<double>(n) / cov.trace();
  return 0.5 * (cov + cov.transpose());
}

Eigen::VectorXd random_vector(Eigen::Index n, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, 0x564543ULL));
  return gaussian_matrix(n, 1, scale, rng);
}

Eigen::VectorXd synthetic_image(Eigen::Index width, Eigen::Index height, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, 0x494d47ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd img = Eigen::VectorXd::Zero(width * height);
  const int blobs = 3;
  for (int b = 0; b < blobs; ++b) {
    const double cx = unit(rng) * static_cast<double>(width - 1);
    const double cy = unit(rng) * static_cast<double>(height - 1);
    const double radius = 0.15 * static_cast<double>(std::min(width, height)) * (1.0 + unit(rng));
    const double amp = 0.5 + 0.5 * unit(rng);
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        const double dx = static_cast<double>(c) - cx;
        const double dy = static_cast<double>(r) - cy;
        img[r * width + c] += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
      }
    }
  }
  return img.cwiseMin(1.0);
}

}  // namespace netmoments::synth
