#include "netmoments/net_moments.hpp"

#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <vector>

#include "netmoments/errors.hpp"

namespace netmoments {

namespace {

constexpr double kNegativeVarianceTol = 1e-8;

void check_dims(const TruncatedNet& tn, const GaussianSpec& g) {
  if (g.dim() != tn.input_dim()) {
    throw DimensionError("net moments: input dimension " + std::to_string(g.dim()) +
                         " != network input " + std::to_string(tn.input_dim()));
  }
}

struct HiddenStats {
  PushforwardGaussian pf;
  Eigen::VectorXd sd;
  Eigen::VectorXd relu_mean;
};

HiddenStats hidden_stats(const TruncatedNet& tn, const GaussianSpec& g) {
  check_dims(tn, g);
  HiddenStats s{pushforward(g, tn.a), {}, {}};
  const Eigen::Index p = tn.hidden_dim();
  s.sd.resize(p);
  s.relu_mean.resize(p);
  for (Eigen::Index v = 0; v < p; ++v) {
    s.sd[v] = s.pf.stddev(v);
    s.relu_mean[v] = relu_mean(s.pf.mean_bar[v], s.sd[v]);
  }
  return s;
}

// E[max(h1,0) max(h2,0)] for one pair of hidden units.
BivarValue pair_product(double mu1, double mu2, double s1, double s2, double rho,
                        const SeriesConfig& cfg) {
  if (s1 == 0.0) return {std::max(mu1, 0.0) * relu_mean(mu2, s2), BivarRoute::kCollinear};
  if (s2 == 0.0) return {std::max(mu2, 0.0) * relu_mean(mu1, s1), BivarRoute::kCollinear};
  return bivar_relu_general_detail({mu1, mu2, s1, s2, rho}, cfg);
}

}  // namespace

Eigen::VectorXd mean(const TruncatedNet& tn, const GaussianSpec& g) {
  const HiddenStats s = hidden_stats(tn, g);
  return tn.b.weights * s.relu_mean + tn.b.bias;
}

Eigen::VectorXd second_moment_zero_mean(const TruncatedNet& tn, const GaussianSpec& g) {
  check_dims(tn, g);
  if (!g.mean().isZero(0.0) || !tn.a.bias.isZero(0.0) || !tn.b.bias.isZero(0.0)) {
    throw PreconditionError(
        "second_moment_zero_mean: requires zero input mean and zero biases; "
        "use variance_general for the general case");
  }
  const PushforwardGaussian pf = pushforward(g, tn.a);
  const Eigen::Index p = tn.hidden_dim();
  const Eigen::Index d = tn.output_dim();
  Eigen::VectorXd sd(p);
  for (Eigen::Index v = 0; v < p; ++v) sd[v] = pf.stddev(v);
  const Eigen::MatrixXd& bw = tn.b.weights;
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double cross = 0.0;
    double diag = 0.0;
    for (Eigen::Index v1 = 0; v1 < p; ++v1) {
      for (Eigen::Index v2 = 0; v2 < v1; ++v2) {
        const double w = bw(i, v1) * bw(i, v2);
        if (w == 0.0) continue;
        const double cov = std::clamp(pf.cov_bar(v1, v2), -sd[v1] * sd[v2], sd[v1] * sd[v2]);
        cross += w * bivar_relu_zero_mean(sd[v1], sd[v2], cov);
      }
      diag += bw(i, v1) * bw(i, v1) * sd[v1] * sd[v1];
    }
    out[i] = 2.0 * cross + 0.5 * diag;
  }
  return out;
}

Eigen::VectorXd variance_zero_mean_approx(const TruncatedNet& tn, const GaussianSpec& g) {
  check_dims(tn, g);
  const PushforwardGaussian pf = pushforward(g, tn.a);
  const Eigen::Index p = tn.hidden_dim();
  const Eigen::Index d = tn.output_dim();
  Eigen::VectorXd sd(p);
  for (Eigen::Index v = 0; v < p; ++v) sd[v] = pf.stddev(v);
  const Eigen::MatrixXd& bw = tn.b.weights;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  Eigen::VectorXd out(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double second = 0.0;
    double first = 0.0;
    for (Eigen::Index v1 = 0; v1 < p; ++v1) {
      for (Eigen::Index v2 = 0; v2 < v1; ++v2) {
        const double w = bw(i, v1) * bw(i, v2);
        if (w == 0.0) continue;
        const double cov = std::clamp(pf.cov_bar(v1, v2), -sd[v1] * sd[v2], sd[v1] * sd[v2]);
        second += 2.0 * w * bivar_relu_zero_mean(sd[v1], sd[v2], cov);
      }
      second += 0.5 * bw(i, v1) * bw(i, v1) * sd[v1] * sd[v1];
      first += bw(i, v1) * sd[v1] * inv_sqrt_2pi;
    }
    out[i] = second - first * first;
  }
  return out;
}

MomentResult variance_general(const TruncatedNet& tn, const GaussianSpec& g,
                              const SeriesConfig& cfg, Exec exec) {
  const HiddenStats s = hidden_stats(tn, g);
  const Eigen::Index p = tn.hidden_dim();
  const Eigen::Index d = tn.output_dim();
  const Eigen::MatrixXd& bw = tn.b.weights;
  const Eigen::VectorXd& mu = s.pf.mean_bar;

  // A pair is needed if some logit weights both units.
  const Eigen::MatrixXd used = (bw.array() != 0.0).cast<double>().matrix();
  const Eigen::MatrixXd pair_used = used.transpose() * used;

  // Covariance of the rectified hidden units; only the strict lower triangle
  // and the diagonal are filled.
  Eigen::MatrixXd relu_cov = Eigen::MatrixXd::Zero(p, p);
  std::vector<BivarRoute> route(static_cast<std::size_t>(p * p), BivarRoute::kSmallRho);
  std::vector<unsigned char> evaluated(static_cast<std::size_t>(p * p), 0);

  auto row_task = [&](Eigen::Index v1) {
    relu_cov(v1, v1) = relu_sq_mean(mu[v1], s.sd[v1]) - s.relu_mean[v1] * s.relu_mean[v1];
    for (Eigen::Index v2 = 0; v2 < v1; ++v2) {
      if (pair_used(v1, v2) == 0.0) continue;
      const BivarValue bv = pair_product(mu[v1], mu[v2], s.sd[v1], s.sd[v2],
                                         s.pf.correlation(v1, v2), cfg);
      relu_cov(v1, v2) = bv.value - s.relu_mean[v1] * s.relu_mean[v2];
      const auto idx = static_cast<std::size_t>(v1 * p + v2);
      route[idx] = bv.route;
      evaluated[idx] = 1;
    }
  };

  if (exec == Exec::kParallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (Eigen::Index v1 = p - 1; v1 >= 0; --v1) {
      try {
        row_task(v1);
      } catch (...) {
#pragma omp critical(netmoments_pair_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (Eigen::Index v1 = p - 1; v1 >= 0; --v1) row_task(v1);
  }

  MomentResult res;
  res.terms_used = cfg.terms;
  for (std::size_t k = 0; k < route.size(); ++k) {
    if (!evaluated[k]) continue;
    if (route[k] == BivarRoute::kQuadrature) ++res.fallback_pairs;
    if (route[k] == BivarRoute::kCollinear) ++res.collinear_pairs;
  }

  res.mean = bw * s.relu_mean + tn.b.bias;
  res.variance.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double var = 0.0;
    for (Eigen::Index v1 = 0; v1 < p; ++v1) {
      const double b1 = bw(i, v1);
      if (b1 == 0.0) continue;
      var += b1 * b1 * relu_cov(v1, v1);
      for (Eigen::Index v2 = 0; v2 < v1; ++v2) {
        const double w = b1 * bw(i, v2);
        if (w != 0.0) var += 2.0 * w * relu_cov(v1, v2);
      }
    }
    if (var < 0.0) {
      const double scale = std::max(1.0, res.mean[i] * res.mean[i]);
      if (var < -kNegativeVarianceTol * scale) {
        throw NumericalError("variance_general: variance " + std::to_string(var) +
                             " of logit " + std::to_string(i) + " is negative");
      }
      var = 0.0;
      ++res.clipped_variances;
    }
    res.variance[i] = var;
  }
  res.second_moment = res.variance + res.mean.cwiseProduct(res.mean);
  return res;
}

namespace {

Eigen::VectorXd active_probability(const HiddenStats& s) {
  const Eigen::Index p = s.sd.size();
  Eigen::VectorXd prob(p);
  for (Eigen::Index v = 0; v < p; ++v) {
    const double m = s.pf.mean_bar[v];
    prob[v] = s.sd[v] > 0.0 ? 0.5 * std::erfc(-m / (std::numbers::sqrt2 * s.sd[v]))
                            : (m > 0.0 ? 1.0 : 0.0);
  }
  return prob;
}

}  // namespace

Eigen::MatrixXd mean_jacobian_mu(const TruncatedNet& tn, const GaussianSpec& g) {
  const HiddenStats s = hidden_stats(tn, g);
  return tn.b.weights * active_probability(s).asDiagonal() * tn.a.weights;
}

Eigen::VectorXd mean_gradient_mu(const TruncatedNet& tn, const GaussianSpec& g,
                                 Eigen::Index logit) {
  if (logit < 0 || logit >= tn.output_dim()) {
    throw DimensionError("mean_gradient_mu: logit index out of range");
  }
  const HiddenStats s = hidden_stats(tn, g);
  const Eigen::VectorXd weight =
      tn.b.weights.row(logit).transpose().cwiseProduct(active_probability(s));
  return tn.a.weights.transpose() * weight;
}

}  // namespace netmoments
