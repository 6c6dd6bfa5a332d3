#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical kernels.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace ref {

// Adaptive Simpson with Richardson correction.
inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-13, int depth = 50) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Composite over [a, b] split into pieces so narrow features are seen.
inline double simpson_pieces(const std::function<double(double)>& f, double a, double b,
                             int pieces, double tol = 1e-13) {
  double s = 0.0;
  const double h = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k) s += simpson(f, a + k * h, a + (k + 1) * h, tol / pieces);
  return s;
}

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

// E[max(x1,0) max(x2,0)] by brute-force 2-D Simpson in the original
// coordinates on [0, mu + 9 sd]^2.
inline double bivar_relu_brute(double m1, double m2, double s1, double s2, double rho) {
  const double det = s1 * s1 * s2 * s2 * (1 - rho * rho);
  const double hi1 = std::max(m1 + 9 * s1, 1e-9), hi2 = std::max(m2 + 9 * s2, 1e-9);
  auto inner = [&](double y) {
    return simpson_pieces(
        [&](double x) {
          const double dx = x - m1, dy = y - m2;
          const double q = (s2 * s2 * dx * dx - 2 * rho * s1 * s2 * dx * dy + s1 * s1 * dy * dy) / det;
          return x * y * std::exp(-0.5 * q) / (2 * std::numbers::pi * std::sqrt(det));
        },
        0.0, hi1, 16, 1e-12);
  };
  return simpson_pieces(inner, 0.0, hi2, 16, 1e-11);
}

// H_n(x) = n! sum_{m=0}^{n/2} (-1)^m (2x)^{n-2m} / (m! (n-2m)!)
inline double hermite_explicit(int n, double x) {
  double sum = 0.0;
  for (int m = 0; 2 * m <= n; ++m) {
    sum += std::pow(-1.0, m) * std::pow(2.0 * x, n - 2 * m) /
           (std::tgamma(m + 1.0) * std::tgamma(n - 2.0 * m + 1.0));
  }
  return std::tgamma(n + 1.0) * sum;
}

struct NaiveLayer {
  std::vector<std::vector<double>> w;
  std::vector<double> b;
  bool relu;
};

inline std::vector<double> naive_forward(const std::vector<NaiveLayer>& layers,
                                         std::vector<double> x) {
  for (const NaiveLayer& l : layers) {
    std::vector<double> y(l.b);
    for (std::size_t r = 0; r < y.size(); ++r) {
      for (std::size_t c = 0; c < x.size(); ++c) y[r] += l.w[r][c] * x[c];
      if (l.relu && y[r] < 0.0) y[r] = 0.0;
    }
    x = std::move(y);
  }
  return x;
}

// Dense forward-difference operators with a zero last row/column.
inline double tv_matrix_form(const Eigen::VectorXd& mu, Eigen::Index w, Eigen::Index h) {
  const Eigen::Index n = w * h;
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(n, n), dy = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const Eigen::Index p = r * w + c;
      if (c + 1 < w) { dx(p, p) = -1; dx(p, p + 1) = 1; }
      if (r + 1 < h) { dy(p, p) = -1; dy(p, p + w) = 1; }
    }
  }
  const Eigen::VectorXd gx = dx * mu, gy = dy * mu;
  return (gx.array().square() + gy.array().square()).sqrt().sum();
}

}  // namespace ref
