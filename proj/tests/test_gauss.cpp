#include <doctest.h>

#include <cmath>

#include "netmoments/errors.hpp"
#include "netmoments/gauss.hpp"
#include "netmoments/synth.hpp"

using namespace netmoments;

TEST_SUITE("gauss") {

TEST_CASE("full covariance validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.4, 1.0;
  CHECK_THROWS_AS(GaussianSpec::full(Eigen::VectorXd::Zero(2), asym), DomainError);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(GaussianSpec::full(Eigen::VectorXd::Zero(2), indefinite), DomainError);
  CHECK_THROWS_AS(GaussianSpec::full(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(2, 2)),
                  DimensionError);
  CHECK_THROWS_AS(GaussianSpec::diagonal(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(2)),
                  DimensionError);

  // Rank-one matrix with a tiny negative eigenvalue from rounding is clipped.
  Eigen::VectorXd v(3);
  v << 1.0, -2.0, 0.5;
  Eigen::MatrixXd rank1 = v * v.transpose();
  rank1(0, 0) -= 1e-13;
  const GaussianSpec g = GaussianSpec::full(Eigen::VectorXd::Zero(3), rank1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.covariance_matrix());
  CHECK(eig.eigenvalues().minCoeff() >= -1e-15);
}

TEST_CASE("pushforward examples") {
  const GaussianSpec g = GaussianSpec::full(synth::random_vector(4, 1.0, 1),
                                            synth::random_covariance(4, 1.0, 2));
  const PushforwardGaussian same = pushforward(g, AffineMap::identity(4));
  CHECK((same.mean_bar - g.mean()).norm() == 0.0);
  CHECK((same.cov_bar - g.covariance_matrix()).norm() < 1e-15);

  Eigen::MatrixXd a(1, 1);
  a << 2.0;
  Eigen::VectorXd c(1);
  c << 1.0;
  const PushforwardGaussian scalar =
      pushforward(GaussianSpec::isotropic(Eigen::VectorXd::Constant(1, 3.0), 4.0), {a, c});
  CHECK(scalar.mean_bar[0] == 7.0);
  CHECK(scalar.cov_bar(0, 0) == 16.0);

  CHECK_THROWS_AS(pushforward(g, AffineMap::identity(3)), DimensionError);
}

TEST_CASE("pushforward covariance forms agree") {
  const Eigen::MatrixXd a = synth::random_covariance(5, 1.0, 9).topRows(3);
  const AffineMap map(a, Eigen::VectorXd::Ones(3));
  const Eigen::VectorXd mu = synth::random_vector(5, 1.0, 3);
  const Eigen::VectorXd d = synth::random_vector(5, 1.0, 4).cwiseAbs();
  const auto iso = pushforward(GaussianSpec::isotropic(mu, 0.7), map);
  const auto iso_full = pushforward(GaussianSpec::full(mu, 0.7 * Eigen::MatrixXd::Identity(5, 5)), map);
  CHECK((iso.cov_bar - iso_full.cov_bar).norm() < 1e-12);
  const auto diag = pushforward(GaussianSpec::diagonal(mu, d), map);
  const auto diag_full = pushforward(GaussianSpec::full(mu, d.asDiagonal().toDenseMatrix()), map);
  CHECK((diag.cov_bar - diag_full.cov_bar).norm() < 1e-12);
}

TEST_CASE("pushforward composes") {
  const GaussianSpec g = GaussianSpec::full(synth::random_vector(5, 1.0, 11),
                                            synth::random_covariance(5, 2.0, 12));
  const AffineMap first(synth::random_covariance(5, 1.0, 13).topRows(4), synth::random_vector(4, 1.0, 14));
  const AffineMap second(synth::random_covariance(4, 1.0, 15).topRows(3), synth::random_vector(3, 1.0, 16));
  const PushforwardGaussian step = pushforward(g, first);
  const PushforwardGaussian twice =
      pushforward(GaussianSpec::full(step.mean_bar, step.cov_bar), second);
  const PushforwardGaussian once = pushforward(g, second.compose(first));
  CHECK((twice.mean_bar - once.mean_bar).norm() <= 1e-10 * once.mean_bar.norm());
  CHECK((twice.cov_bar - once.cov_bar).norm() <= 1e-10 * once.cov_bar.norm());
}

TEST_CASE("correlations stay in [-1, 1]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GaussianSpec g = GaussianSpec::full(Eigen::VectorXd::Zero(3),
                                              synth::random_covariance(3, 1.0, seed));
    const AffineMap map(synth::random_covariance(3, 1.0, seed + 100).topRows(3) * 5.0,
                        Eigen::VectorXd::Zero(3));
    const PushforwardGaussian pf = pushforward(g, map);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) CHECK(std::abs(pf.correlation(i, j)) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("sampling") {
  const Eigen::MatrixXd zeros = sample(GaussianSpec::isotropic(Eigen::VectorXd::Zero(3), 0.0), 5, 1);
  CHECK(zeros.rows() == 5);
  CHECK(zeros.isZero(0.0));

  const GaussianSpec g = GaussianSpec::full(synth::random_vector(3, 1.0, 5),
                                            synth::random_covariance(3, 1.5, 6));
  const Eigen::MatrixXd a = sample(g, 3000, 42);
  const Eigen::MatrixXd b = sample(g, 3000, 42);
  CHECK((a - b).norm() == 0.0);
  const Eigen::MatrixXd c = sample(g, 3000, 43);
  CHECK((a - c).norm() > 0.0);
  CHECK_THROWS_AS(sample(g, 0, 1), DomainError);
}

TEST_CASE("sample moments match the requested Gaussian") {
  const Eigen::Index n = 1000000;
  const GaussianSpec g = GaussianSpec::full(synth::random_vector(3, 1.0, 7),
                                            synth::random_covariance(3, 1.5, 8));
  const Eigen::MatrixXd xs = sample(g, n, 2024);
  const Eigen::VectorXd m = xs.colwise().mean();
  const Eigen::MatrixXd sigma = g.covariance_matrix();
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(m[k] - g.mean()[k]) <= 4.0 * std::sqrt(sigma(k, k) / n));
  }
}

TEST_CASE("singular covariance samples stay on the subspace") {
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, -1.0;
  const GaussianSpec g = GaussianSpec::full(Eigen::VectorXd::Zero(3), v * v.transpose());
  const Eigen::MatrixXd xs = sample(g, 200, 3);
  for (Eigen::Index r = 0; r < xs.rows(); ++r) {
    const Eigen::Vector3d x = xs.row(r).transpose();
    CHECK((x - x.dot(v) / v.squaredNorm() * v).norm() < 1e-6);
  }
}

TEST_CASE("pushforward covariance matches pushed samples") {
  const Eigen::Index n = 1000000;
  const GaussianSpec g = GaussianSpec::full(synth::random_vector(3, 1.0, 21),
                                            synth::random_covariance(3, 1.0, 22));
  Eigen::MatrixXd a(4, 3);
  a << 1.0, -0.5, 0.2, 0.3, 0.8, -1.0, 0.0, 1.2, 0.4, -0.7, 0.1, 0.9;
  const AffineMap map(a, Eigen::Vector4d(0.1, -0.2, 0.3, 0.0));
  const PushforwardGaussian pf = pushforward(g, map);
  const Eigen::MatrixXd xs = sample(g, n, 77);
  const Eigen::MatrixXd ys = (xs * a.transpose()).rowwise() + map.bias.transpose();
  const Eigen::RowVectorXd m = ys.colwise().mean();
  const Eigen::MatrixXd centered = ys.rowwise() - m;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      // Var of a sample covariance entry: (S_ii S_jj + S_ij^2) / n for Gaussians.
      const double se = std::sqrt((pf.cov_bar(i, i) * pf.cov_bar(j, j) +
                                   pf.cov_bar(i, j) * pf.cov_bar(i, j)) / n);
      CHECK(std::abs(cov(i, j) - pf.cov_bar(i, j)) <= 4.0 * se);
    }
  }
}

}  // TEST_SUITE
