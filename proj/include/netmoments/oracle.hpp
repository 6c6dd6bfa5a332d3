#pragma once

// Reference estimators the analytic moments are checked against.

#include <cstdint>

#include <Eigen/Dense>

#include "netmoments/gauss.hpp"
#include "netmoments/plnet.hpp"
#include "netmoments/quadrature.hpp"
#include "netmoments/relu_moments.hpp"

namespace netmoments::oracle {

struct McEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // unbiased, divisor samples - 1
  Eigen::VectorXd mean_se;   // sqrt(variance / samples)
  // sqrt((m4 - variance^2) / samples), m4 the sample central fourth moment.
  Eigen::VectorXd variance_se;
  Eigen::Index samples = 0;
  std::uint64_t seed = 0;
};

// Sample moments of net(x), x ~ g. Parallel over sampler blocks; partial sums
// are combined in block order so the result does not depend on the thread
// count.
McEstimate mc_moments(const PLNetwork& net, const GaussianSpec& g,
                      Eigen::Index samples, std::uint64_t seed);
McEstimate mc_moments(const TruncatedNet& tn, const GaussianSpec& g,
                      Eigen::Index samples, std::uint64_t seed);

// Single-threaded reference for mc_moments.
McEstimate mc_moments_serial(const PLNetwork& net, const GaussianSpec& g,
                             Eigen::Index samples, std::uint64_t seed);

// 2|x - y| / (|x| + |y|), with rel_diff(0, 0) = 0.
double rel_diff(double x, double y);

struct BivarQuadOptions {
  double abs_tol = 1e-8;
};

// E[max(x1,0) max(x2,0)] by iterated adaptive quadrature of the joint
// density written as f(x2) f(x1 | x2), each axis truncated to mean +- 10 sd.
// Requires |rho| < 1. Throws NumericalError (carrying the achieved estimate
// in its message) if the tolerance is not met.
double quad_bivar_relu(const BivariateParams& p, const BivarQuadOptions& opts = {});

}  // namespace netmoments::oracle
