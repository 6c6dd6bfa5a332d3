#pragma once

// Desk-scale experiment drivers shared by the command-line tool and the
// acceptance checks. Each run is fully determined by its configuration and
// seed; grid cells run in parallel but results come back in grid order.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "netmoments/net_moments.hpp"
#include "netmoments/synth.hpp"

namespace netmoments::experiments {

std::vector<double> linspace_step(double lo, double hi, double step);

struct SeriesGrid {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> rho;
  // mu in [-2, 2] step 0.2, sigma in [0.2, 2] step 0.2,
  // rho in [-0.7, 0.7] step 0.2 plus {0, 0.999}.
  static SeriesGrid standard();
  std::size_t size() const;
};

struct SeriesErrorOptions {
  std::vector<int> terms{1, 5, 10, 20, 50};
  double oracle_tol = 1e-10;
  // false reports the plain truncated sum.
  bool accelerate = true;
  Exec exec = Exec::kParallel;
};

struct SeriesErrorRow {
  int terms = 0;
  double rho = 0.0;
  double max_abs_error = 0.0;
  BivariateParams worst;
};

// Rows ordered by terms, then by rho in grid order.
std::vector<SeriesErrorRow> series_error(const SeriesGrid& grid, const SeriesErrorOptions& opts);

struct TightnessConfig {
  // Widths of the random network; three entries give an exact
  // (Affine, ReLU, Affine) net, more entries are linearized at the input mean.
  std::vector<Eigen::Index> widths{8, 16, 4};
  std::size_t linearize_layer = 0;
  int instances = 50;
  Eigen::Index samples = 1000000;
  double weight_scale = 1.0;
  double bias_scale = 0.5;
  double mean_scale = 1.0;
  // trace(Sigma) = input_variance * n.
  double input_variance = 0.5;
  // Zero input mean and biases (the setting where the old variance is exact).
  bool zero_mean = false;
  int terms = 20;
  std::uint64_t seed = 0;
};

struct TightnessRow {
  int instance = 0;
  Eigen::Index logit = 0;
  double mean = 0.0;
  double mc_mean = 0.0;
  double mean_se = 0.0;
  double var_new = 0.0;
  double var_old = 0.0;
  double mc_var = 0.0;
  double var_se = 0.0;
  double er_mean = 0.0;
  double er_var_new = 0.0;
  double er_var_old = 0.0;
};

// Rows ordered by instance, then logit.
std::vector<TightnessRow> tightness(const TightnessConfig& cfg);

struct LinearizationConfig {
  std::vector<Eigen::Index> widths{16, 24, 20, 16, 4};
  std::size_t layer = 1;
  std::vector<double> radii{0.01, 0.03, 0.1, 0.3, 1.0};
  int directions = 100;
  double bias_scale = 0.2;
  std::uint64_t seed = 0;
};

struct LinearizationRow {
  double radius = 0.0;
  // l2 distance between the network and its two-stage linearization,
  // averaged over random unit directions.
  double mean_discrepancy = 0.0;
  double max_discrepancy = 0.0;
  // Relative error at the linearization point itself.
  double at_point = 0.0;
};

std::vector<LinearizationRow> linearization_discrepancy(const LinearizationConfig& cfg);

}  // namespace netmoments::experiments
