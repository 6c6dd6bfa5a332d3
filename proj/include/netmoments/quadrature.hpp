#pragma once

#include <functional>

namespace netmoments::quad {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
  bool converged = false;
};

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_intervals = 400;
};

// Globally adaptive Gauss-Kronrod (7/15) on a finite interval. Bisects the
// interval with the largest error estimate until the total estimate drops
// below max(abs_tol, rel_tol * |value|) or max_intervals is reached.
QuadResult integrate(const std::function<double(double)>& f, double lo,
                     double hi, const QuadOptions& opts = {});

}  // namespace netmoments::quad
