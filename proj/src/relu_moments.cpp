#include "netmoments/relu_moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "netmoments/errors.hpp"
#include "netmoments/oracle.hpp"

namespace netmoments {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * kPi);

double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

void BivariateParams::validate() const {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
    throw DomainError("BivariateParams: standard deviations must be positive");
  }
  if (!(std::abs(rho) <= 1.0)) {
    throw DomainError("BivariateParams: |rho| must be <= 1, got " + std::to_string(rho));
  }
}

bool in_fallback_band(double rho) {
  const double r = std::abs(rho);
  return std::abs(r - std::numbers::sqrt2 / 2.0) < kBranchBand || r > 1.0 - kNearSingular;
}

double relu_mean(double mu, double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("relu_mean: sigma must be >= 0");
  if (sigma == 0.0) return std::max(mu, 0.0);
  // 1/2 mu (1 - erf(-mu / (sqrt2 sigma))) + sigma/sqrt(2 pi) exp(-mu^2 / 2 sigma^2)
  return 0.5 * mu * std::erfc(-mu / (kSqrt2 * sigma)) + sigma * norm_pdf(mu / sigma);
}

double relu_sq_mean_zero(double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("relu_sq_mean_zero: sigma must be >= 0");
  return 0.5 * sigma * sigma;
}

double relu_sq_mean(double mu, double sigma) {
  if (!(sigma >= 0.0)) throw DomainError("relu_sq_mean: sigma must be >= 0");
  if (sigma == 0.0) {
    const double m = std::max(mu, 0.0);
    return m * m;
  }
  const double z = mu / sigma;
  return (mu * mu + sigma * sigma) * norm_cdf(z) + mu * sigma * norm_pdf(z);
}

double bivar_relu_zero_mean(double sigma1, double sigma2, double sigma12) {
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) {
    throw DomainError("bivar_relu_zero_mean: standard deviations must be >= 0");
  }
  const double s1s2 = sigma1 * sigma2;
  if (std::abs(sigma12) > s1s2 * (1.0 + 1e-12)) {
    throw DomainError("bivar_relu_zero_mean: |sigma12| exceeds sigma1 * sigma2");
  }
  if (s1s2 == 0.0) return 0.0;
  const double r = std::clamp(sigma12 / s1s2, -1.0, 1.0);
  return (sigma12 * std::asin(r) + s1s2 * std::sqrt(1.0 - r * r)) / (2.0 * kPi) +
         0.25 * sigma12;
}

double omega(const BivariateParams& p) {
  p.validate();
  if (!(std::abs(p.rho) < 1.0)) throw DomainError("omega: requires |rho| < 1");
  const double s1 = p.sigma1, s2 = p.sigma2, r = p.rho;
  const double mu1 = p.mu1, mu2 = p.mu2;
  const double det = s1 * s1 * s2 * s2 * (1.0 - r * r);
  const double sqrt_det = std::sqrt(det);
  // mu^T Sigma^{-1} mu
  const double quad =
      (s2 * s2 * mu1 * mu1 - 2.0 * r * s1 * s2 * mu1 * mu2 + s1 * s1 * mu2 * mu2) / det;
  // e_1^T Sigma~ mu and e_2^T Sigma~ mu, Sigma~ = Diag(sqrt|S|/s2, sqrt|S|/s1) S^{-1}
  const double e1 = (s2 * mu1 - r * s1 * mu2) / sqrt_det;
  const double e2 = (s1 * mu2 - r * s2 * mu1) / sqrt_det;
  const double k = 1.0 / (2.0 * std::sqrt(2.0 * kPi));
  return sqrt_det / (2.0 * kPi) * std::exp(-0.5 * quad) +
         k * mu1 * s2 * std::exp(-mu2 * mu2 / (2.0 * s2 * s2)) * (1.0 + std::erf(e1 / kSqrt2)) +
         k * mu2 * s1 * std::exp(-mu1 * mu1 / (2.0 * s1 * s1)) * (1.0 + std::erf(e2 / kSqrt2)) +
         0.25 * (mu1 * mu2 + r * s1 * s2) * (1.0 + std::erf(mu2 / (kSqrt2 * s2)));
}

double bivar_relu_collinear(const BivariateParams& p) {
  p.validate();
  // x1 = mu1 + s1 z, x2 = mu2 + sign(rho) s2 z, z ~ N(0, 1)
  const double mu1 = p.mu1, mu2 = p.mu2, s1 = p.sigma1, s2 = p.sigma2;
  const double z1 = -mu1 / s1;  // x1 > 0  <=>  z > z1
  if (p.rho > 0.0) {
    const double t = std::max(z1, -mu2 / s2);
    const double tail = norm_cdf(-t);
    const double pdf = norm_pdf(t);
    return mu1 * mu2 * tail + (mu1 * s2 + mu2 * s1) * pdf + s1 * s2 * (tail + t * pdf);
  }
  // x2 > 0  <=>  z < mu2 / s2
  const double lo = z1;
  const double hi = mu2 / s2;
  if (!(hi > lo)) return 0.0;
  const double mass = norm_cdf(hi) - norm_cdf(lo);
  const double plo = norm_pdf(lo), phi = norm_pdf(hi);
  const double second = mass + lo * plo - hi * phi;  // int z^2 phi(z) over [lo, hi]
  return mu1 * mu2 * mass + (mu2 * s1 - mu1 * s2) * (plo - phi) - s1 * s2 * second;
}

BivarValue bivar_relu_general_detail(const BivariateParams& p, const SeriesConfig& cfg) {
  p.validate();
  const double r = p.rho;
  if (std::abs(r) == 1.0) return {bivar_relu_collinear(p), BivarRoute::kCollinear};
  if (in_fallback_band(r)) {
    return {oracle::quad_bivar_relu(p), BivarRoute::kQuadrature};
  }

  const double mu1 = p.mu1, mu2 = p.mu2, s1 = p.sigma1, s2 = p.sigma2;
  const double base = omega(p);
  const double coeff = (mu1 * mu2 + r * s1 * s2) / kPi;
  const double one_minus_r2 = 1.0 - r * r;

  if (std::abs(r) < std::numbers::sqrt2 / 2.0) {
    const double a1 = r / std::sqrt(one_minus_r2);
    const double b1 = mu1 / (kSqrt2 * s1 * std::sqrt(one_minus_r2));
    const double kappa = -mu2 / (kSqrt2 * s2);
    const double series =
        specfun::i_ab(a1, b1, specfun::kInf, cfg) - specfun::i_ab(a1, b1, kappa, cfg);
    return {base + coeff * series, BivarRoute::kSmallRho};
  }

  const double sg = sign(r);
  const double a2 = std::sqrt(one_minus_r2) / std::abs(r);
  const double b2 = -mu1 / (kSqrt2 * r * s1);
  // e_1^T Sigma~ mu / sqrt(2)
  const double e1 = (s2 * mu1 - r * s1 * mu2) / (s1 * s2 * std::sqrt(one_minus_r2)) / kSqrt2;
  const double bracket =
      0.25 * kPi * sg + 0.25 * kPi * std::erf(e1) * std::erf(mu2 / (kSqrt2 * s2)) -
      sg * (specfun::i_ab(a2, b2, specfun::kInf, cfg) - specfun::i_ab(a2, b2, sg * e1, cfg));
  return {base + coeff * bracket, BivarRoute::kLargeRho};
}

}  // namespace netmoments
