#include "netmoments/experiments.hpp"

#include <cmath>
#include <random>

#include "netmoments/errors.hpp"
#include "netmoments/oracle.hpp"

namespace netmoments::experiments {

std::vector<double> linspace_step(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw DomainError("linspace_step: bad range");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (long k = 0; k < count; ++k) {
    // Round to 12 digits so 0.2-steps land exactly on the decimal values.
    out.push_back(std::round((lo + step * static_cast<double>(k)) * 1e12) / 1e12);
  }
  return out;
}

SeriesGrid SeriesGrid::standard() {
  SeriesGrid g;
  g.mu = linspace_step(-2.0, 2.0, 0.2);
  g.sigma = linspace_step(0.2, 2.0, 0.2);
  g.rho = linspace_step(-0.7, 0.7, 0.2);
  g.rho.push_back(0.0);
  g.rho.push_back(0.999);
  return g;
}

std::size_t SeriesGrid::size() const {
  return mu.size() * mu.size() * sigma.size() * sigma.size() * rho.size();
}

std::vector<SeriesErrorRow> series_error(const SeriesGrid& grid, const SeriesErrorOptions& opts) {
  const std::size_t nm = grid.mu.size(), ns = grid.sigma.size(), nr = grid.rho.size();
  const std::size_t per_rho = nm * nm * ns * ns;
  const std::size_t total = per_rho * nr;
  const std::size_t nt = opts.terms.size();
  std::vector<double> err(total * nt, 0.0);

  auto point = [&](std::size_t idx) {
    std::size_t r = idx;
    const std::size_t i_s2 = r % ns; r /= ns;
    const std::size_t i_s1 = r % ns; r /= ns;
    const std::size_t i_m2 = r % nm; r /= nm;
    const std::size_t i_m1 = r % nm; r /= nm;
    return BivariateParams{grid.mu[i_m1], grid.mu[i_m2], grid.sigma[i_s1], grid.sigma[i_s2],
                           grid.rho[r]};
  };

  std::exception_ptr failure;
  auto cell = [&](std::size_t idx) {
    try {
      const BivariateParams p = point(idx);
      const double truth = oracle::quad_bivar_relu(p, {opts.oracle_tol});
      for (std::size_t t = 0; t < nt; ++t) {
        err[idx * nt + t] = std::abs(bivar_relu_general(p, {opts.terms[t], opts.accelerate}) - truth);
      }
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  };
  const auto n = static_cast<long>(total);
  if (opts.exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 256)
    for (long k = 0; k < n; ++k) cell(static_cast<std::size_t>(k));
  } else {
    for (long k = 0; k < n; ++k) cell(static_cast<std::size_t>(k));
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SeriesErrorRow> rows;
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t r = 0; r < nr; ++r) {
      SeriesErrorRow row;
      row.terms = opts.terms[t];
      row.rho = grid.rho[r];
      std::size_t worst = r * per_rho;
      for (std::size_t k = r * per_rho; k < (r + 1) * per_rho; ++k) {
        if (err[k * nt + t] > err[worst * nt + t]) worst = k;
      }
      row.max_abs_error = err[worst * nt + t];
      row.worst = point(worst);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<TightnessRow> tightness(const TightnessConfig& cfg) {
  if (cfg.widths.size() < 3) throw PreconditionError("tightness: need at least 3 widths");
  std::vector<TightnessRow> rows;
  const Eigen::Index n = cfg.widths.front();
  for (int inst = 0; inst < cfg.instances; ++inst) {
    const std::uint64_t s = stream_seed(cfg.seed, static_cast<std::uint64_t>(inst));
    PLNetwork net = synth::random_network({cfg.widths, cfg.weight_scale,
                                           cfg.zero_mean ? 0.0 : cfg.bias_scale, s});
    const Eigen::VectorXd mu =
        cfg.zero_mean ? Eigen::VectorXd::Zero(n) : synth::random_vector(n, cfg.mean_scale, s + 1);
    const GaussianSpec g =
        GaussianSpec::full(mu, synth::random_covariance(n, cfg.input_variance, s + 2));
    const TruncatedNet tn = cfg.widths.size() == 3
                                ? TruncatedNet(net.layer(0), net.layer(1), mu, 0)
                                : two_stage_linearize(net, cfg.linearize_layer, mu);
    const MomentResult m = variance_general(tn, g, {cfg.terms});
    const Eigen::VectorXd old = variance_zero_mean_approx(tn, g);
    const oracle::McEstimate mc = oracle::mc_moments(tn, g, cfg.samples, s + 3);
    for (Eigen::Index i = 0; i < tn.output_dim(); ++i) {
      TightnessRow row;
      row.instance = inst;
      row.logit = i;
      row.mean = m.mean[i];
      row.mc_mean = mc.mean[i];
      row.mean_se = mc.mean_se[i];
      row.var_new = m.variance[i];
      row.var_old = old[i];
      row.mc_var = mc.variance[i];
      row.var_se = mc.variance_se[i];
      row.er_mean = oracle::rel_diff(row.mean, row.mc_mean);
      row.er_var_new = oracle::rel_diff(row.var_new, row.mc_var);
      row.er_var_old = oracle::rel_diff(row.var_old, row.mc_var);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<LinearizationRow> linearization_discrepancy(const LinearizationConfig& cfg) {
  const PLNetwork net = synth::random_network({cfg.widths, 1.0, cfg.bias_scale, cfg.seed});
  const Eigen::Index n = net.input_dim();
  const Eigen::VectorXd x = synth::random_vector(n, 1.0, cfg.seed + 1);
  const TruncatedNet tn = two_stage_linearize(net, cfg.layer, x);
  const Eigen::VectorXd y = forward(net, x);
  const double at_point = (forward(tn, x) - y).norm() / std::max(y.norm(), 1e-300);

  std::vector<Eigen::VectorXd> dirs;
  std::mt19937_64 rng(stream_seed(cfg.seed, 0x444952ULL));
  std::normal_distribution<double> normal;
  for (int k = 0; k < cfg.directions; ++k) {
    Eigen::VectorXd u(n);
    for (Eigen::Index c = 0; c < n; ++c) u[c] = normal(rng);
    dirs.push_back(u.normalized());
  }
  std::vector<LinearizationRow> rows;
  for (double r : cfg.radii) {
    LinearizationRow row;
    row.radius = r;
    row.at_point = at_point;
    for (const Eigen::VectorXd& u : dirs) {
      const Eigen::VectorXd z = x + r * u;
      const double d = (forward(tn, z) - forward(net, z)).norm();
      row.mean_discrepancy += d / static_cast<double>(dirs.size());
      row.max_discrepancy = std::max(row.max_discrepancy, d);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace netmoments::experiments
