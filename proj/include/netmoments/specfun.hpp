#pragma once

// Scalar special functions and the truncated series for
//   I_{a,b}(x) = (sqrt(pi)/2) * int_0^x exp(-t^2) erf(a t + b) dt.

#include <limits>
#include <vector>

namespace netmoments::specfun {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SeriesConfig {
  // Number of (even, odd) Hermite index pairs summed.
  int terms = 20;
  // Apply Wynn's epsilon algorithm to the partial sums. The series converges
  // like |a|^(2 terms), which is slow for |rho| near 1/sqrt(2).
  bool accelerate = true;
};

// Limit estimate of a sequence of partial sums by Wynn's epsilon algorithm;
// falls back to the last partial sum when no table column looks better.
double wynn_epsilon(const std::vector<double>& partial_sums);

// Largest Hermite degree accepted by hermite().
inline constexpr int kMaxHermiteDegree = 200;

double erf(double x);

// Physicists' Hermite polynomial H_n(x). Throws DomainError for n outside
// [0, 200] and NumericalError if the value overflows.
double hermite(int n, double x);

// Regularized lower incomplete gamma P(s, x); x may be +inf.
double gamma_p(double s, double x);

// Truncated series for I_{a,b}(x) keeping cfg.terms summands. Requires
// |a| < 1; x may be +inf.
double i_ab(double a, double b, double x, const SeriesConfig& cfg = {});

}  // namespace netmoments::specfun
