#include "netmoments/specfun.hpp"

#include <cmath>
#include <vector>
#include <numbers>
#include <string>

#include "netmoments/errors.hpp"

namespace netmoments::specfun {

namespace {

constexpr int kGammaMaxIter = 1000;
constexpr double kGammaEps = 1e-16;

double gamma_p_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < kGammaMaxIter; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kGammaEps) {
      return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
  }
  throw NumericalError("gamma_p: series did not converge for s=" +
                       std::to_string(s) + ", x=" + std::to_string(x));
}

// Lentz continued fraction for Q(s, x) = 1 - P(s, x).
double gamma_q_continued_fraction(double s, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kGammaMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kGammaEps) {
      return std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
    }
  }
  throw NumericalError("gamma_p: continued fraction did not converge for s=" +
                       std::to_string(s) + ", x=" + std::to_string(x));
}

}  // namespace

double erf(double x) { return std::erf(x); }

double hermite(int n, double x) {
  if (n < 0 || n > kMaxHermiteDegree) {
    throw DomainError("hermite: degree " + std::to_string(n) +
                      " outside [0, 200]");
  }
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double next = 2.0 * x * cur - 2.0 * k * prev;
    prev = cur;
    cur = next;
  }
  if (!std::isfinite(cur)) {
    throw NumericalError("hermite: H_" + std::to_string(n) + "(" +
                         std::to_string(x) + ") overflows double");
  }
  return cur;
}

double gamma_p(double s, double x) {
  if (!(s > 0.0)) throw DomainError("gamma_p: s must be positive");
  if (!(x >= 0.0)) throw DomainError("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return std::min(1.0, gamma_p_series(s, x));
  return std::max(0.0, 1.0 - gamma_q_continued_fraction(s, x));
}

// The two interleaved Hermite sums are carried as one scaled sequence
//   c_n = (a/2)^{n+1} H_n(b) / Gamma(n/2 + 3/2)
// whose even members multiply P(u+1, x^2) and odd members P(u+3/2, x^2).
// The scaling keeps every summand representable even when H_n(b) itself
// would overflow, so no log-magnitude bookkeeping is needed.
double wynn_epsilon(const std::vector<double>& s) {
  const std::size_t n = s.size();
  if (n < 3) return s.empty() ? 0.0 : s.back();
  // Columns of the epsilon table; only even columns approximate the limit.
  // Each even column is scored by the gap between its last two entries and
  // the best-scored estimate wins, so a converged plain sum is kept as is.
  double best = s[n - 1];
  double best_gap = std::abs(s[n - 1] - s[n - 2]);
  std::vector<double> prev(n + 1, 0.0);  // column k - 2
  std::vector<double> cur = s;           // column k - 1
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const std::size_t len = n - k;
    std::vector<double> next(len);
    bool ok = true;
    for (std::size_t j = 0; j < len; ++j) {
      const double diff = cur[j + 1] - cur[j];
      if (diff == 0.0 || !std::isfinite(diff)) {
        ok = false;
        break;
      }
      next[j] = prev[j + 1] + 1.0 / diff;
    }
    if (!ok) break;
    if (k % 2 == 0 && len >= 2) {
      const double gap = std::abs(next[len - 1] - next[len - 2]);
      if (std::isfinite(next[len - 1]) && gap < best_gap) {
        best = next[len - 1];
        best_gap = gap;
      }
    }
    prev = std::move(cur);
    cur = std::move(next);
  }
  return best;
}

double i_ab(double a, double b, double x, const SeriesConfig& cfg) {
  if (!(std::abs(a) < 1.0)) {
    throw DomainError("i_ab: series requires |a| < 1, got a=" +
                      std::to_string(a));
  }
  if (cfg.terms < 1) throw DomainError("i_ab: terms must be >= 1");
  if (x == 0.0) return 0.0;

  const bool infinite = std::isinf(x);
  const double sign_x = x > 0.0 ? 1.0 : -1.0;
  const double x2 = infinite ? kInf : x * x;
  const double half_a = 0.5 * a;

  // gamma ratio r_n = Gamma(n/2 + 3/2) / Gamma(n/2 + 2)
  double ratio = 0.5 * std::sqrt(std::numbers::pi);
  double c_prev = 0.0;
  double c_cur = a / std::sqrt(std::numbers::pi);
  double sum = 0.0;
  std::vector<double> partial;
  partial.reserve(static_cast<std::size_t>(cfg.terms));
  const int n_max = 2 * cfg.terms;
  for (int n = 0; n < n_max; ++n) {
    if (n % 2 == 0) {
      sum += c_cur * gamma_p(n / 2 + 1.0, x2);
    } else {
      sum -= sign_x * c_cur * gamma_p(n / 2 + 1.5, x2);
      partial.push_back(sum);
    }
    const double c_next =
        a * b * ratio * c_cur - half_a * a * n * c_prev / (0.5 * n + 1.0);
    ratio = 1.0 / (ratio * (0.5 * n + 1.5));
    c_prev = c_cur;
    c_cur = c_next;
  }
  if (cfg.accelerate) sum = wynn_epsilon(partial);
  if (!std::isfinite(sum)) {
    throw NumericalError("i_ab: series overflow for a=" + std::to_string(a) +
                         ", b=" + std::to_string(b));
  }
  const double erf_x = infinite ? 1.0 : std::erf(x);
  return 0.25 * std::numbers::pi * erf_x * std::erf(b) +
         0.5 * std::sqrt(std::numbers::pi) * std::exp(-b * b) * sum;
}

}  // namespace netmoments::specfun
