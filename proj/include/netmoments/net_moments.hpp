#pragma once

// Output moments of g(x) = B max(A x + c1, 0) + c2 under x ~ N(mu, Sigma).

#include <Eigen/Dense>

#include "netmoments/gauss.hpp"
#include "netmoments/plnet.hpp"
#include "netmoments/relu_moments.hpp"

namespace netmoments {

enum class Exec { kSerial, kParallel };

struct MomentResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  Eigen::VectorXd second_moment;
  int terms_used = 0;
  // Hidden-unit pairs evaluated by 2-D quadrature instead of the series.
  long fallback_pairs = 0;
  // Pairs with |rho| == 1, evaluated by the exact 1-D integral.
  long collinear_pairs = 0;
  // Logits whose variance came out slightly negative and was clipped to 0.
  long clipped_variances = 0;
};

Eigen::VectorXd mean(const TruncatedNet& tn, const GaussianSpec& g);

// Requires zero input mean and zero biases on both maps; throws
// PreconditionError otherwise (use variance_general).
Eigen::VectorXd second_moment_zero_mean(const TruncatedNet& tn, const GaussianSpec& g);

// Variance obtained by pretending mu_bar = 0, i.e. pairing the zero-mean
// product formula with the zero-mean output mean. Exact only under the
// preconditions of second_moment_zero_mean; kept as the baseline the general
// expression is compared against.
Eigen::VectorXd variance_zero_mean_approx(const TruncatedNet& tn, const GaussianSpec& g);

// Exact mean, second moment and variance for arbitrary Gaussian input and
// biases. Pair kernels are independent; the parallel policy distributes them
// over threads and reduces in the same fixed order as the serial one, so both
// return identical results.
MomentResult variance_general(const TruncatedNet& tn, const GaussianSpec& g,
                              const SeriesConfig& cfg = {}, Exec exec = Exec::kParallel);

// d x n Jacobian of mean(tn, g) with respect to g's mean:
//   B diag(Phi(mu_bar / sigma_bar)) A,
// with Phi replaced by the indicator 1[mu_bar > 0] where sigma_bar = 0.
Eigen::MatrixXd mean_jacobian_mu(const TruncatedNet& tn, const GaussianSpec& g);

// Gradient of mean(tn, g)[logit] with respect to g's mean.
Eigen::VectorXd mean_gradient_mu(const TruncatedNet& tn, const GaussianSpec& g,
                                 Eigen::Index logit);

}  // namespace netmoments
