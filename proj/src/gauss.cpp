#include "netmoments/gauss.hpp"

#include <cmath>
#include <random>
#include <string>

#include "netmoments/errors.hpp"

namespace netmoments {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdClipTol = 1e-10;

Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& sym, bool* clipped) {
  const Eigen::Index n = sym.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("GaussianSpec: eigendecomposition failed");
  }
  const double trace = sym.trace();
  const double floor = -kPsdClipTol * std::max(trace, 0.0) / static_cast<double>(n);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  if (lambda.minCoeff() < floor) {
    throw DomainError("GaussianSpec: covariance is not positive semidefinite "
                      "(smallest eigenvalue " + std::to_string(lambda.minCoeff()) + ")");
  }
  *clipped = lambda.minCoeff() < 0.0;
  if (!*clipped) return sym;
  const Eigen::VectorXd fixed = lambda.cwiseMax(0.0);
  Eigen::MatrixXd out = eig.eigenvectors() * fixed.asDiagonal() *
                        eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

GaussianSpec GaussianSpec::isotropic(Eigen::VectorXd mean, double variance) {
  if (!(variance >= 0.0)) throw DomainError("GaussianSpec: variance must be >= 0");
  return {std::move(mean), IsotropicCov{variance}};
}

GaussianSpec GaussianSpec::diagonal(Eigen::VectorXd mean, Eigen::VectorXd variances) {
  if (variances.size() != mean.size()) {
    throw DimensionError("GaussianSpec: mean and variance lengths differ");
  }
  if (variances.size() > 0 && !(variances.minCoeff() >= 0.0)) {
    throw DomainError("GaussianSpec: diagonal variances must be >= 0");
  }
  return {std::move(mean), DiagonalCov{std::move(variances)}};
}

GaussianSpec GaussianSpec::full(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size()) {
    throw DimensionError("GaussianSpec: covariance must be n x n with n = len(mean)");
  }
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw DomainError("GaussianSpec: covariance is not symmetric");
  }
  Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  bool clipped = false;
  if (mean.size() > 0) sym = clip_psd(sym, &clipped);
  return {std::move(mean), FullCov{std::move(sym)}};
}

Eigen::MatrixXd GaussianSpec::covariance_matrix() const {
  const Eigen::Index n = dim();
  return std::visit(
      [n](const auto& c) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IsotropicCov>) {
          return c.variance * Eigen::MatrixXd::Identity(n, n);
        } else if constexpr (std::is_same_v<T, DiagonalCov>) {
          return c.variances.asDiagonal();
        } else {
          return c.matrix;
        }
      },
      cov_);
}

GaussianSpec GaussianSpec::with_mean(Eigen::VectorXd mean) const {
  if (mean.size() != dim()) throw DimensionError("GaussianSpec::with_mean: length mismatch");
  return {std::move(mean), cov_};
}

double PushforwardGaussian::stddev(Eigen::Index v) const {
  return std::sqrt(std::max(cov_bar(v, v), 0.0));
}

double PushforwardGaussian::correlation(Eigen::Index i, Eigen::Index j) const {
  const double si = stddev(i);
  const double sj = stddev(j);
  if (si == 0.0 || sj == 0.0) return 0.0;
  return std::clamp(cov_bar(i, j) / (si * sj), -1.0, 1.0);
}

PushforwardGaussian pushforward(const GaussianSpec& spec, const AffineMap& map) {
  if (map.in_dim() != spec.dim()) {
    throw DimensionError("pushforward: map input dimension " +
                         std::to_string(map.in_dim()) + " != " +
                         std::to_string(spec.dim()));
  }
  const Eigen::MatrixXd& a = map.weights;
  Eigen::MatrixXd cov = std::visit(
      [&a](const auto& c) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IsotropicCov>) {
          return c.variance * (a * a.transpose());
        } else if constexpr (std::is_same_v<T, DiagonalCov>) {
          return a * c.variances.asDiagonal() * a.transpose();
        } else {
          return a * c.matrix * a.transpose();
        }
      },
      spec.covariance());
  cov = 0.5 * (cov + cov.transpose()).eval();
  return {a * spec.mean() + map.bias, std::move(cov)};
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 1));
}

GaussianSampler::GaussianSampler(const GaussianSpec& spec) : mean_(spec.mean()) {
  const Eigen::Index n = spec.dim();
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IsotropicCov>) {
          scale_ = Eigen::VectorXd::Constant(n, std::sqrt(c.variance));
        } else if constexpr (std::is_same_v<T, DiagonalCov>) {
          scale_ = c.variances.cwiseSqrt();
        } else {
          full_ = true;
          Eigen::LLT<Eigen::MatrixXd> llt(c.matrix);
          if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            return;
          }
          // Singular covariance: factor through the clipped spectrum.
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c.matrix);
          if (eig.info() != Eigen::Success) {
            throw NumericalError("GaussianSampler: covariance factorization failed");
          }
          factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        }
      },
      spec.covariance());
}

void GaussianSampler::fill_block(std::uint64_t seed, std::uint64_t block,
                                 Eigen::Ref<Eigen::MatrixXd> out) const {
  if (out.cols() != dim() || out.rows() > kBlockRows) {
    throw DimensionError("GaussianSampler::fill_block: bad output shape");
  }
  std::mt19937_64 rng(stream_seed(seed, block));
  std::normal_distribution<double> normal;
  const Eigen::Index n = dim();
  Eigen::VectorXd z(n);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index k = 0; k < n; ++k) z[k] = normal(rng);
    if (full_) {
      out.row(r) = (mean_ + factor_ * z).transpose();
    } else {
      out.row(r) = (mean_ + scale_.cwiseProduct(z)).transpose();
    }
  }
}

Eigen::MatrixXd sample(const GaussianSpec& spec, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw DomainError("sample: count must be positive");
  const GaussianSampler sampler(spec);
  Eigen::MatrixXd out(count, spec.dim());
  const Eigen::Index blocks = (count + GaussianSampler::kBlockRows - 1) / GaussianSampler::kBlockRows;
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index start = b * GaussianSampler::kBlockRows;
    const Eigen::Index rows = std::min(GaussianSampler::kBlockRows, count - start);
    sampler.fill_block(seed, static_cast<std::uint64_t>(b), out.middleRows(start, rows));
  }
  return out;
}

}  // namespace netmoments
