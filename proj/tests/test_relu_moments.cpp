#include <doctest.h>

#include <cmath>

#include "netmoments/errors.hpp"
#include "netmoments/relu_moments.hpp"
#include "reference.hpp"

using namespace netmoments;

TEST_SUITE("relu_moments") {

TEST_CASE("scalar moments") {
  CHECK(relu_mean(1.0, 2.0) == doctest::Approx(1.39559311480261205919).epsilon(1e-14));
  CHECK(relu_sq_mean(0.7, 1.3) == doctest::Approx(1.85066308844836354955).epsilon(1e-14));
  CHECK(relu_mean(0.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(relu_sq_mean_zero(1.7) == doctest::Approx(0.5 * 1.7 * 1.7));
  CHECK(relu_sq_mean(0.0, 1.7) == doctest::Approx(0.5 * 1.7 * 1.7));
  CHECK(relu_mean(-3.0, 0.0) == 0.0);
  CHECK(relu_mean(2.5, 0.0) == 2.5);
  CHECK(relu_sq_mean(2.5, 0.0) == 6.25);
  CHECK(relu_sq_mean(-2.5, 0.0) == 0.0);
  CHECK_THROWS_AS(relu_mean(0.0, -1.0), DomainError);

  for (double mu : {-2.0, -0.3, 0.0, 0.8, 2.0}) {
    for (double s : {0.2, 1.0, 1.9}) {
      const double m1 = ref::simpson_pieces(
          [&](double x) { return x * ref::normal_pdf((x - mu) / s) / s; }, 0.0,
          std::max(mu + 12 * s, 1e-9), 32);
      const double m2 = ref::simpson_pieces(
          [&](double x) { return x * x * ref::normal_pdf((x - mu) / s) / s; }, 0.0,
          std::max(mu + 12 * s, 1e-9), 32);
      CHECK(relu_mean(mu, s) == doctest::Approx(m1).epsilon(1e-10));
      CHECK(relu_sq_mean(mu, s) == doctest::Approx(m2).epsilon(1e-10));
    }
  }
}

TEST_CASE("zero-mean product moment") {
  CHECK(bivar_relu_zero_mean(1.0, 1.5, 0.6) ==
        doctest::Approx(0.408098836313836226463).epsilon(1e-14));
  // Independent: (s1 / sqrt(2 pi)) (s2 / sqrt(2 pi)).
  CHECK(bivar_relu_zero_mean(1.0, 2.0, 0.0) == doctest::Approx(2.0 / (2.0 * std::numbers::pi)));
  // Identical: E[relu(x)^2] = s^2 / 2.
  CHECK(bivar_relu_zero_mean(1.3, 1.3, 1.69) == doctest::Approx(0.5 * 1.69));
  // Opposite: the product is always 0.
  CHECK(bivar_relu_zero_mean(1.3, 1.3, -1.69) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(bivar_relu_zero_mean(1.0, 1.0, 1.5), DomainError);

  // Price: d/d sigma12 at 0 equals P(x1 > 0) P(x2 > 0) = 1/4.
  const double h = 1e-5;
  const double d = (bivar_relu_zero_mean(1.0, 1.0, h) - bivar_relu_zero_mean(1.0, 1.0, -h)) / (2 * h);
  CHECK(std::abs(d - 0.25) <= 1e-8);

  for (double rho : {-0.9, -0.3, 0.2, 0.75}) {
    const double s1 = 0.7, s2 = 1.4;
    CHECK(bivar_relu_zero_mean(s1, s2, rho * s1 * s2) ==
          doctest::Approx(ref::bivar_relu_brute(0, 0, s1, s2, rho)).epsilon(1e-7));
  }
}

TEST_CASE("omega and the general moment") {
  CHECK(omega({0.5, -0.3, 1.0, 2.0, 0.4}) ==
        doctest::Approx(0.633108606457600545972).epsilon(1e-13));
  const BivarValue v = bivar_relu_general_detail({0.5, -0.3, 1.0, 0.8, 0.9}, {50});
  CHECK(v.route == BivarRoute::kLargeRho);
  CHECK(v.value == doctest::Approx(0.350455432549945752934).epsilon(1e-10));
}

TEST_CASE("routing") {
  CHECK(bivar_relu_general_detail({0, 0, 1, 1, 0.3}).route == BivarRoute::kSmallRho);
  CHECK(bivar_relu_general_detail({0, 0, 1, 1, -0.9}).route == BivarRoute::kLargeRho);
  CHECK(bivar_relu_general_detail({0, 0, 1, 1, 1.0 / std::sqrt(2.0)}).route ==
        BivarRoute::kQuadrature);
  CHECK(bivar_relu_general_detail({0, 0, 1, 1, 1 - 1e-8}).route == BivarRoute::kQuadrature);
  CHECK(bivar_relu_general_detail({0, 0, 1, 1, -1.0}).route == BivarRoute::kCollinear);
  CHECK(in_fallback_band(0.709));
  CHECK_FALSE(in_fallback_band(0.7));
  CHECK_THROWS_AS(bivar_relu_general({0, 0, 1, 1, 1.01}), DomainError);
  CHECK_THROWS_AS(bivar_relu_general({0, 0, 0, 1, 0.5}), DomainError);
}

TEST_CASE("general moment matches brute-force integration") {
  const double cases[][5] = {
      {0.5, -0.3, 1.0, 0.8, 0.2},  {-1.0, 1.5, 0.6, 1.2, -0.5}, {1.2, 0.4, 0.9, 0.5, 0.85},
      {-0.4, -0.6, 1.5, 1.1, -0.8}, {2.0, -2.0, 0.3, 1.8, 0.0},  {0.1, 0.2, 1.0, 1.0, 0.707},
      {1.0, 1.0, 0.5, 0.5, 0.99},  {-1.5, 0.7, 2.0, 0.4, -0.95}};
  for (const auto& c : cases) {
    const BivariateParams p{c[0], c[1], c[2], c[3], c[4]};
    const double brute = ref::bivar_relu_brute(c[0], c[1], c[2], c[3], c[4]);
    CAPTURE(c[4]);
    CHECK(std::abs(bivar_relu_general(p, {50}) - brute) <= 2e-6);
  }
}

TEST_CASE("symmetric in argument order") {
  for (double rho : {-0.95, -0.6, 0.0, 0.4, 0.8}) {
    const BivariateParams p{0.7, -0.4, 1.3, 0.6, rho};
    CHECK(bivar_relu_general(p, {50}) ==
          doctest::Approx(bivar_relu_general(p.swapped(), {50})).epsilon(1e-7));
  }
}

TEST_CASE("zero means reduce to the zero-mean formula") {
  for (double rho : {-0.9, -0.5, 0.0, 0.3, 0.8}) {
    const double s1 = 0.6, s2 = 1.8;
    CHECK(std::abs(bivar_relu_general({0, 0, s1, s2, rho}, {50}) -
                   bivar_relu_zero_mean(s1, s2, rho * s1 * s2)) <= 1e-9);
  }
}

TEST_CASE("collinear closed form") {
  // rho = 1: x2 = mu2 + (s2/s1)(x1 - mu1).
  for (double m2 : {-1.0, 0.0, 0.6}) {
    const BivariateParams p{0.4, m2, 1.1, 0.7, 1.0};
    const double near = bivar_relu_general({0.4, m2, 1.1, 0.7, 1 - 1e-9});
    CHECK(bivar_relu_collinear(p) == doctest::Approx(near).epsilon(1e-5));
    const double s = 1.1;
    const double direct = ref::simpson_pieces(
        [&](double x) {
          const double y = m2 + 0.7 / 1.1 * (x - 0.4);
          return std::max(x, 0.0) * std::max(y, 0.0) * ref::normal_pdf((x - 0.4) / s) / s;
        },
        0.4 - 12 * s, 0.4 + 12 * s, 64);
    CHECK(bivar_relu_collinear(p) == doctest::Approx(direct).epsilon(1e-8));
  }
  // rho = -1: supports overlap only when the means put mass on both sides.
  const BivariateParams anti{0.5, 0.5, 1.0, 1.0, -1.0};
  const double direct = ref::simpson_pieces(
      [&](double x) {
        const double y = 0.5 - (x - 0.5);
        return std::max(x, 0.0) * std::max(y, 0.0) * ref::normal_pdf(x - 0.5);
      },
      -12, 13, 64);
  CHECK(bivar_relu_collinear(anti) == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("error shrinks with terms away from the branch boundary") {
  const BivariateParams p{0.8, -0.6, 1.2, 0.7, 0.45};
  const double truth = ref::bivar_relu_brute(p.mu1, p.mu2, p.sigma1, p.sigma2, p.rho);
  double prev = 1e300;
  for (int terms : {1, 3, 6, 12}) {
    const double err = std::abs(bivar_relu_general(p, {terms}) - truth);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-6);
}

}  // TEST_SUITE
