#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Dense>

#include "netmoments/affine_map.hpp"

namespace netmoments {

struct IsotropicCov {
  double variance;
};
struct DiagonalCov {
  Eigen::VectorXd variances;
};
struct FullCov {
  Eigen::MatrixXd matrix;
};
using Covariance = std::variant<IsotropicCov, DiagonalCov, FullCov>;

// Input distribution N(mean, covariance). Full covariances are checked for
// symmetry and positive semidefiniteness on construction; eigenvalues in
// [-1e-10 * trace / n, 0) are clipped to zero.
class GaussianSpec {
 public:
  static GaussianSpec isotropic(Eigen::VectorXd mean, double variance);
  static GaussianSpec diagonal(Eigen::VectorXd mean, Eigen::VectorXd variances);
  static GaussianSpec full(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Covariance& covariance() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  Eigen::MatrixXd covariance_matrix() const;
  GaussianSpec with_mean(Eigen::VectorXd mean) const;

 private:
  GaussianSpec(Eigen::VectorXd mean, Covariance cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {}

  Eigen::VectorXd mean_;
  Covariance cov_;
};

struct PushforwardGaussian {
  Eigen::VectorXd mean_bar;
  Eigen::MatrixXd cov_bar;

  double stddev(Eigen::Index v) const;
  // Correlation of coordinates i and j; 0 if either has zero variance.
  double correlation(Eigen::Index i, Eigen::Index j) const;
};

// Distribution of map(x) for x ~ spec.
PushforwardGaussian pushforward(const GaussianSpec& spec, const AffineMap& map);

// Counter-based sampling: rows are produced in fixed-size blocks, and block k
// always draws from the stream seeded by (seed, k). Output is therefore
// independent of how blocks are distributed over threads.
class GaussianSampler {
 public:
  static constexpr Eigen::Index kBlockRows = 1024;

  explicit GaussianSampler(const GaussianSpec& spec);

  Eigen::Index dim() const { return mean_.size(); }

  // Fills rows [block * kBlockRows, block * kBlockRows + out.rows()) of the
  // sample stream for this seed. out must have dim() columns.
  void fill_block(std::uint64_t seed, std::uint64_t block,
                  Eigen::Ref<Eigen::MatrixXd> out) const;

 private:
  Eigen::VectorXd mean_;
  // Exactly one of scale_ (diagonal/isotropic) or factor_ (full) is used.
  Eigen::VectorXd scale_;
  Eigen::MatrixXd factor_;
  bool full_ = false;
};

Eigen::MatrixXd sample(const GaussianSpec& spec, Eigen::Index count,
                       std::uint64_t seed);

// Mixes (seed, stream) into a 64-bit generator seed.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace netmoments
