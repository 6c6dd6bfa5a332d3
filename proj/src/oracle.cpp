#include "netmoments/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "netmoments/errors.hpp"

namespace netmoments::oracle {

namespace {

constexpr double kTruncationSd = 10.0;

struct Moments {
  Eigen::VectorXd sum;
  Eigen::VectorXd sum_sq;
  Eigen::VectorXd sum_cu;
  Eigen::VectorXd sum_qu;
};

// Shifted accumulation around a pilot value keeps the variance computation
// well conditioned when the mean is large relative to the spread.
template <typename Forward>
McEstimate run_mc(Eigen::Index in_dim, Eigen::Index out_dim, const GaussianSpec& g,
                  Eigen::Index samples, std::uint64_t seed, Forward&& fwd, bool parallel) {
  if (samples < 2) throw PreconditionError("mc_moments: samples must be >= 2");
  if (g.dim() != in_dim) throw DimensionError("mc_moments: input dimension mismatch");
  const GaussianSampler sampler(g);
  const Eigen::VectorXd pilot = fwd(g.mean());
  const Eigen::Index rows_per_block = GaussianSampler::kBlockRows;
  const Eigen::Index blocks = (samples + rows_per_block - 1) / rows_per_block;
  std::vector<Moments> partial(static_cast<std::size_t>(blocks));

  auto do_block = [&](Eigen::Index b) {
    const Eigen::Index start = b * rows_per_block;
    const Eigen::Index rows = std::min(rows_per_block, samples - start);
    Eigen::MatrixXd xs(rows, in_dim);
    sampler.fill_block(seed, static_cast<std::uint64_t>(b), xs);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(out_dim);
    Moments m{zero, zero, zero, zero};
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::ArrayXd d = (fwd(xs.row(r).transpose()) - pilot).array();
      const Eigen::ArrayXd d2 = d * d;
      m.sum += d.matrix();
      m.sum_sq += d2.matrix();
      m.sum_cu += (d2 * d).matrix();
      m.sum_qu += (d2 * d2).matrix();
    }
    partial[static_cast<std::size_t>(b)] = std::move(m);
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index b = 0; b < blocks; ++b) do_block(b);
  } else {
    for (Eigen::Index b = 0; b < blocks; ++b) do_block(b);
  }

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(out_dim);
  Eigen::VectorXd sum_sq = sum, sum_cu = sum, sum_qu = sum;
  for (const Moments& m : partial) {
    sum += m.sum;
    sum_sq += m.sum_sq;
    sum_cu += m.sum_cu;
    sum_qu += m.sum_qu;
  }
  const double n = static_cast<double>(samples);
  const Eigen::VectorXd shifted_mean = sum / n;
  Eigen::VectorXd var =
      ((sum_sq - n * shifted_mean.cwiseProduct(shifted_mean)) / (n - 1.0)).cwiseMax(0.0);
  // Central fourth moment from the raw shifted sums.
  const Eigen::ArrayXd m1 = shifted_mean.array();
  const Eigen::ArrayXd m4 = sum_qu.array() / n - 4.0 * m1 * sum_cu.array() / n +
                            6.0 * m1.square() * sum_sq.array() / n - 3.0 * m1.square().square();
  McEstimate est;
  est.mean = pilot + shifted_mean;
  est.mean_se = (var / n).cwiseSqrt();
  est.variance_se = ((m4 - var.array().square()).max(0.0) / n).sqrt().matrix();
  est.variance = std::move(var);
  est.samples = samples;
  est.seed = seed;
  return est;
}

}  // namespace

McEstimate mc_moments(const PLNetwork& net, const GaussianSpec& g, Eigen::Index samples,
                      std::uint64_t seed) {
  return run_mc(net.input_dim(), net.output_dim(), g, samples, seed,
                [&net](const Eigen::VectorXd& x) { return forward(net, x); }, true);
}

McEstimate mc_moments(const TruncatedNet& tn, const GaussianSpec& g, Eigen::Index samples,
                      std::uint64_t seed) {
  return run_mc(tn.input_dim(), tn.output_dim(), g, samples, seed,
                [&tn](const Eigen::VectorXd& x) { return forward(tn, x); }, true);
}

McEstimate mc_moments_serial(const PLNetwork& net, const GaussianSpec& g,
                             Eigen::Index samples, std::uint64_t seed) {
  return run_mc(net.input_dim(), net.output_dim(), g, samples, seed,
                [&net](const Eigen::VectorXd& x) { return forward(net, x); }, false);
}

double rel_diff(double x, double y) {
  const double denom = std::abs(x) + std::abs(y);
  if (denom == 0.0) return 0.0;
  return 2.0 * std::abs(x - y) / denom;
}

double quad_bivar_relu(const BivariateParams& p, const BivarQuadOptions& opts) {
  p.validate();
  if (!(std::abs(p.rho) < 1.0)) throw DomainError("quad_bivar_relu: requires |rho| < 1");
  const double hi2 = p.mu2 + kTruncationSd * p.sigma2;
  if (hi2 <= 0.0) return 0.0;
  const double lo2 = std::max(0.0, p.mu2 - kTruncationSd * p.sigma2);

  const double cond_sd = p.sigma1 * std::sqrt(1.0 - p.rho * p.rho);
  const double slope = p.rho * p.sigma1 / p.sigma2;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  // The inner tolerance is tightened so that its accumulated error over the
  // outer rule stays well below the overall target.
  const quad::QuadOptions inner_opts{opts.abs_tol * 1e-2, 1e-12, 2000};
  const quad::QuadOptions outer_opts{opts.abs_tol * 0.5, 1e-13, 2000};
  bool inner_ok = true;
  double worst_inner = 0.0;

  auto inner = [&](double x2) {
    const double m = p.mu1 + slope * (x2 - p.mu2);
    const double hi1 = m + kTruncationSd * cond_sd;
    if (hi1 <= 0.0) return 0.0;
    const double lo1 = std::max(0.0, m - kTruncationSd * cond_sd);
    const auto r = quad::integrate(
        [&](double x1) {
          const double z = (x1 - m) / cond_sd;
          return x1 * inv_sqrt_2pi * std::exp(-0.5 * z * z) / cond_sd;
        },
        lo1, hi1, inner_opts);
    // The outer weight integrates to E[max(x2, 0)], so inner errors a
    // decade below the target are harmless.
    if (r.abs_error > std::max(0.1 * opts.abs_tol, 1e-12 * std::abs(r.value))) {
      inner_ok = false;
      worst_inner = std::max(worst_inner, r.abs_error);
    }
    return r.value;
  };

  const auto outer = quad::integrate(
      [&](double x2) {
        const double z = (x2 - p.mu2) / p.sigma2;
        return x2 * inv_sqrt_2pi * std::exp(-0.5 * z * z) / p.sigma2 * inner(x2);
      },
      lo2, hi2, outer_opts);

  if (!outer.converged || !inner_ok) {
    std::ostringstream msg;
    msg << "quad_bivar_relu: tolerance " << opts.abs_tol << " not reached; estimate "
        << outer.value << " (outer error " << outer.abs_error << ", worst inner error "
        << worst_inner << ")";
    throw NumericalError(msg.str());
  }
  return outer.value;
}

}  // namespace netmoments::oracle
