#pragma once

// Closed-form moments of max(x, 0) for scalar and bivariate Gaussians.

#include "netmoments/specfun.hpp"

namespace netmoments {

using specfun::SeriesConfig;

// (x1, x2) ~ N([mu1, mu2], [[s1^2, rho s1 s2], [rho s1 s2, s2^2]])
struct BivariateParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double rho = 0.0;

  // Throws DomainError unless sigma1, sigma2 > 0 and |rho| <= 1.
  void validate() const;
  BivariateParams swapped() const { return {mu2, mu1, sigma2, sigma1, rho}; }
};

// Half-width of the band around |rho| = 1/sqrt(2) where neither series
// branch converges usefully.
inline constexpr double kBranchBand = 5e-3;
// |rho| above 1 - kNearSingular is routed to quadrature as well.
inline constexpr double kNearSingular = 1e-6;

bool in_fallback_band(double rho);

// E[max(x, 0)], x ~ N(mu, sigma^2). sigma = 0 gives max(mu, 0).
double relu_mean(double mu, double sigma);

// E[max(x, 0)^2] for zero-mean x.
double relu_sq_mean_zero(double sigma);

// E[max(x, 0)^2], x ~ N(mu, sigma^2). sigma = 0 gives max(mu, 0)^2.
double relu_sq_mean(double mu, double sigma);

// E[max(x1,0) max(x2,0)] for zero-mean inputs with covariance sigma12.
double bivar_relu_zero_mean(double sigma1, double sigma2, double sigma12);

// Closed-form part of the general bivariate product moment. Requires |rho| < 1.
double omega(const BivariateParams& p);

enum class BivarRoute { kSmallRho, kLargeRho, kQuadrature, kCollinear };

struct BivarValue {
  double value;
  BivarRoute route;
};

// E[max(x1,0) max(x2,0)] for general means. Uses the truncated series
// branches for |rho| away from 1/sqrt(2) and 1, adaptive 2-D quadrature
// inside the fallback band, and the exact one-dimensional integral for
// |rho| == 1.
BivarValue bivar_relu_general_detail(const BivariateParams& p,
                                     const SeriesConfig& cfg = {});

inline double bivar_relu_general(const BivariateParams& p,
                                 const SeriesConfig& cfg = {}) {
  return bivar_relu_general_detail(p, cfg).value;
}

// Product moment for |rho| == 1 (x2 an affine function of x1).
double bivar_relu_collinear(const BivariateParams& p);

}  // namespace netmoments
