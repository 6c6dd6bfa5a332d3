#include "netmoments/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "netmoments/errors.hpp"
#include "netmoments/gauss.hpp"
#include "netmoments/net_moments.hpp"

namespace netmoments::attacks {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-14;
constexpr double kSigma2FdStep = 1e-4;
constexpr int kMaxLambdaDoublings = 10;
constexpr std::uint64_t kSupportStream = 0x5355505054ULL;

// Log-sum-exp over all entries except `skip`, with softmax weights.
struct SmoothMax {
  double value;
  Eigen::VectorXd weights;  // zero at `skip`
};

SmoothMax smooth_max_excluding(const Eigen::VectorXd& e, Eigen::Index skip, double tau) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    if (k != skip) m = std::max(m, e[k]);
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(e.size());
  double sum = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    if (k == skip) continue;
    w[k] = std::exp(tau * (e[k] - m));
    sum += w[k];
  }
  w /= sum;
  return {m + std::log(sum) / tau, std::move(w)};
}

double max_excluding(const Eigen::VectorXd& e, Eigen::Index skip) {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    if (k != skip) m = std::max(m, e[k]);
  }
  return m;
}

void check_problem(const AttackProblem& problem) {
  const TruncatedNet& tn = problem.truncated;
  if (problem.base_image.size() != tn.input_dim()) {
    throw DimensionError("attack: base image length " +
                         std::to_string(problem.base_image.size()) + " != network input " +
                         std::to_string(tn.input_dim()));
  }
  if (tn.output_dim() < 2) throw PreconditionError("attack: need at least two classes");
  if (problem.original && (problem.original->input_dim() != tn.input_dim() ||
                           problem.original->output_dim() != tn.output_dim())) {
    throw DimensionError("attack: original network shape differs from the truncated one");
  }
  if (problem.target_class &&
      (*problem.target_class < 0 || *problem.target_class >= tn.output_dim())) {
    throw DimensionError("attack: target class out of range");
  }
  if (problem.source_class &&
      (*problem.source_class < 0 || *problem.source_class >= tn.output_dim())) {
    throw DimensionError("attack: source class out of range");
  }
  if (!(problem.beta >= 0.0)) throw DomainError("attack: beta must be >= 0");
  if (!(problem.sigma2_max > 0.0)) throw DomainError("attack: sigma2_max must be > 0");
  if (!(problem.tau > 0.0)) throw DomainError("attack: tau must be > 0");
}

Eigen::Index resolved_source(const AttackProblem& problem) {
  return problem.source_class ? *problem.source_class : clean_class(problem);
}

double clamp_sigma2(const AttackProblem& problem, double s2) {
  return std::clamp(s2, kSigma2Floor, problem.sigma2_max);
}

// Objective evaluated with and without smoothing.
struct Scored {
  ObjectiveValue smooth;
  double exact;
};

using ScoreFn = Scored (*)(const AttackProblem&, const Eigen::VectorXd&, double, Eigen::Index);

Scored score_targeted(const AttackProblem& problem, const Eigen::VectorXd& mu, double s2,
                      Eigen::Index target) {
  const GaussianSpec g = GaussianSpec::isotropic(problem.base_image + mu, s2);
  const Eigen::VectorXd e = mean(problem.truncated, g);
  const SmoothMax sm = smooth_max_excluding(e, target, problem.tau);
  ObjectiveValue ov;
  ov.value = sm.value - e[target];
  Eigen::VectorXd w = sm.weights;
  w[target] -= 1.0;
  ov.grad_mu = mean_jacobian_mu(problem.truncated, g).transpose() * w;
  return {std::move(ov), max_excluding(e, target) - e[target]};
}

Scored score_untargeted(const AttackProblem& problem, const Eigen::VectorXd& mu, double s2,
                        Eigen::Index source) {
  const GaussianSpec g = GaussianSpec::isotropic(problem.base_image + mu, s2);
  const Eigen::VectorXd e = mean(problem.truncated, g);
  const SmoothMax sm = smooth_max_excluding(e, source, problem.tau);
  const double shift = std::log(static_cast<double>(e.size() - 1)) / problem.tau;
  ObjectiveValue ov;
  ov.value = e[source] - sm.value + shift;
  Eigen::VectorXd w = -sm.weights;
  w[source] += 1.0;
  ov.grad_mu = mean_jacobian_mu(problem.truncated, g).transpose() * w;
  return {std::move(ov), e[source] - max_excluding(e, source)};
}

Scored score_with_sigma_gradient(ScoreFn fn, const AttackProblem& problem,
                                 const Eigen::VectorXd& mu, double s2, Eigen::Index cls) {
  Scored s = fn(problem, mu, s2, cls);
  const double h = kSigma2FdStep * s2;
  const double up = fn(problem, mu, s2 + h, cls).smooth.value;
  const double down = fn(problem, mu, s2 - h, cls).smooth.value;
  s.smooth.grad_sigma2 = (up - down) / (2.0 * h);
  return s;
}

void finalize(const AttackProblem& problem, AttackResult& res, Eigen::Index source) {
  res.sparsity = static_cast<double>((res.mu_x.array().abs() < kSparsityThreshold).count()) /
                 static_cast<double>(std::max<Eigen::Index>(res.mu_x.size(), 1));
  if (problem.shape) {
    res.tv_value = tv(res.mu_x, problem.shape->width, problem.shape->height, 0.0);
  }
  const Eigen::VectorXd e = expected_logits(problem, res.mu_x, res.sigma2);
  if (problem.target_class) {
    const Eigen::Index j = *problem.target_class;
    res.margin = e[j] - max_excluding(e, j);
  } else {
    res.margin = max_excluding(e, source) - e[source];
  }
  if (problem.verify_samples > 0) {
    const FoolingStats fs = verify_attack(problem, res, problem.verify_samples, problem.seed);
    res.fooling_rate = fs.fooling_rate;
    res.target_rate = fs.target_rate;
  }
}

// Projected gradient descent over (mu restricted to mask, sigma^2) with an
// Armijo backtracking line search along the projection arc.
AttackResult projected_descent(const AttackProblem& problem, ScoreFn fn, Eigen::Index cls,
                               const Eigen::VectorXd& mask) {
  const Eigen::Index n = problem.truncated.input_dim();
  AttackResult res;
  res.mu_x = Eigen::VectorXd::Zero(n);
  res.sigma2 = clamp_sigma2(problem, problem.sigma2_init);

  Scored cur = score_with_sigma_gradient(fn, problem, res.mu_x, res.sigma2, cls);
  res.objective_trace.push_back(cur.smooth.value);
  if (cur.exact < 0.0) {
    res.success = true;
    res.status = "already fooled at the starting point";
    return res;
  }

  double step = problem.step_size;
  for (int it = 0; it < problem.max_iters; ++it) {
    res.iterations = it + 1;
    const Eigen::VectorXd g_mu = cur.smooth.grad_mu.cwiseProduct(mask);
    bool accepted = false;
    double moved = 0.0;
    while (step >= kMinStep) {
      const Eigen::VectorXd cand_mu =
          (res.mu_x - step * g_mu).cwiseMax(-problem.beta).cwiseMin(problem.beta);
      const double cand_s2 = clamp_sigma2(problem, res.sigma2 - step * cur.smooth.grad_sigma2);
      const Eigen::VectorXd d_mu = cand_mu - res.mu_x;
      const double d_s2 = cand_s2 - res.sigma2;
      moved = std::max(d_mu.cwiseAbs().maxCoeff(), std::abs(d_s2));
      if (moved == 0.0) break;
      const double slope = g_mu.dot(d_mu) + cur.smooth.grad_sigma2 * d_s2;
      Scored cand = score_with_sigma_gradient(fn, problem, cand_mu, cand_s2, cls);
      if (cand.smooth.value <= cur.smooth.value + kArmijo * slope) {
        res.mu_x = cand_mu;
        res.sigma2 = cand_s2;
        cur = std::move(cand);
        res.objective_trace.push_back(cur.smooth.value);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || moved < problem.tolerance) {
      res.status = accepted ? "converged" : "stationary";
      break;
    }
    step *= 2.0;
  }
  if (res.status.empty()) res.status = "iteration limit reached";
  res.success = cur.exact < 0.0;
  return res;
}

}  // namespace

Eigen::Index argmax(const Eigen::VectorXd& v) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

Eigen::Index clean_class(const AttackProblem& problem) {
  if (problem.original) return argmax(forward(*problem.original, problem.base_image));
  return argmax(forward(problem.truncated, problem.base_image));
}

Eigen::VectorXd expected_logits(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                double sigma2) {
  if (mu_x.size() != problem.base_image.size()) {
    throw DimensionError("expected_logits: mu_x length mismatch");
  }
  return mean(problem.truncated, GaussianSpec::isotropic(problem.base_image + mu_x, sigma2));
}

ObjectiveValue targeted_objective(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                  double sigma2) {
  check_problem(problem);
  if (!problem.target_class) throw PreconditionError("targeted_objective: no target class");
  return score_with_sigma_gradient(score_targeted, problem, mu_x, sigma2,
                                   *problem.target_class)
      .smooth;
}

ObjectiveValue untargeted_objective(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                    double sigma2) {
  check_problem(problem);
  return score_with_sigma_gradient(score_untargeted, problem, mu_x, sigma2,
                                   resolved_source(problem))
      .smooth;
}

namespace {

struct SparseEval {
  ObjectiveValue smooth;
  double exact_violation;  // exact margin + gamma; feasible when <= 0
};

SparseEval sparse_eval(const AttackProblem& problem, const Eigen::VectorXd& mu, double lambda,
                       bool targeted, Eigen::Index cls) {
  const double scale = targeted ? problem.mean_scale : 1.0;
  const Scored s = targeted ? score_targeted(problem, scale * mu, 1.0, cls)
                            : score_untargeted(problem, mu, 1.0, cls);
  const double hinge =
      std::max(0.0, s.smooth.value + problem.gamma + problem.feasibility_margin);
  SparseEval out;
  out.exact_violation = s.exact + problem.gamma;
  const ImageShape& sh = *problem.shape;
  out.smooth.value = tv(mu, sh.width, sh.height, problem.tv_epsilon) + lambda * hinge * hinge;
  out.smooth.grad_mu = tv_gradient(mu, sh.width, sh.height, problem.tv_epsilon) +
                       (2.0 * lambda * hinge * scale) * s.smooth.grad_mu;
  return out;
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  return v.unaryExpr([t](double x) {
    const double a = std::abs(x) - t;
    return a > 0.0 ? std::copysign(a, x) : 0.0;
  });
}

}  // namespace

ObjectiveValue sparse_smooth_part(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                  double lambda, bool targeted) {
  check_problem(problem);
  if (!problem.shape) throw PreconditionError("sparse_smooth_part: image shape required");
  if (targeted && !problem.target_class) {
    throw PreconditionError("sparse_smooth_part: targeted variant needs a target class");
  }
  const Eigen::Index cls = targeted ? *problem.target_class : resolved_source(problem);
  return sparse_eval(problem, mu_x, lambda, targeted, cls).smooth;
}

AttackResult targeted_attack(const AttackProblem& problem) {
  check_problem(problem);
  if (!problem.target_class) throw PreconditionError("targeted_attack: no target class");
  const Eigen::Index n = problem.truncated.input_dim();
  AttackResult res = projected_descent(problem, score_targeted, *problem.target_class,
                                       Eigen::VectorXd::Ones(n));
  finalize(problem, res, resolved_source(problem));
  return res;
}

AttackResult support_attack(const AttackProblem& problem) {
  check_problem(problem);
  const Eigen::Index n = problem.truncated.input_dim();
  std::vector<Eigen::Index> support = problem.support_indices.empty() && problem.alpha > 0.0
                                          ? draw_support(n, problem.alpha, problem.seed)
                                          : problem.support_indices;
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k : support) {
    if (k < 0 || k >= n) throw DimensionError("support_attack: support index out of range");
    mask[k] = 1.0;
  }
  const Eigen::Index source = resolved_source(problem);
  AttackProblem untargeted = problem;
  untargeted.target_class.reset();
  AttackResult res = projected_descent(untargeted, score_untargeted, source, mask);
  res.support = std::move(support);
  finalize(untargeted, res, source);
  return res;
}

AttackResult sparse_smooth_attack(const AttackProblem& problem, bool targeted) {
  check_problem(problem);
  if (!problem.shape) throw PreconditionError("sparse_smooth_attack: image shape required");
  const ImageShape& sh = *problem.shape;
  const Eigen::Index n = problem.truncated.input_dim();
  if (sh.width * sh.height != n) throw DimensionError("sparse_smooth_attack: shape mismatch");
  if (targeted && !problem.target_class) {
    throw PreconditionError("sparse_smooth_attack: targeted variant needs a target class");
  }
  const Eigen::Index source = resolved_source(problem);
  const Eigen::Index cls = targeted ? *problem.target_class : source;
  AttackProblem prob = problem;
  if (!targeted) prob.target_class.reset();

  AttackResult res;
  res.mu_x = Eigen::VectorXd::Zero(n);
  res.sigma2 = 1.0;
  double lambda = problem.lambda_penalty;
  double step = problem.step_size;
  int iters = 0;
  SparseEval cur = sparse_eval(prob, res.mu_x, lambda, targeted, cls);

  for (int stage = 0; stage <= kMaxLambdaDoublings; ++stage) {
    if (stage > 0) cur = sparse_eval(prob, res.mu_x, lambda, targeted, cls);
    res.stage_starts.push_back(res.objective_trace.size());
    double cur_total = cur.smooth.value + res.mu_x.lpNorm<1>();
    res.objective_trace.push_back(cur_total);

    // FISTA with function-value restart: the iterate only moves when the
    // full objective decreases, otherwise momentum is dropped.
    Eigen::VectorXd y = res.mu_x;
    SparseEval at_y = cur;
    double t = 1.0;
    bool stationary = false;
    while (iters < problem.max_iters) {
      ++iters;
      Eigen::VectorXd cand;
      SparseEval next;
      double moved = 0.0;
      bool found = false;
      while (step >= kMinStep) {
        cand = soft_threshold(y - step * at_y.smooth.grad_mu, step)
                   .cwiseMax(-problem.beta)
                   .cwiseMin(problem.beta);
        const Eigen::VectorXd d = cand - y;
        moved = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
        if (moved == 0.0) break;
        next = sparse_eval(prob, cand, lambda, targeted, cls);
        const double model =
            at_y.smooth.value + at_y.smooth.grad_mu.dot(d) + d.squaredNorm() / (2.0 * step);
        if (next.smooth.value <= model) {
          found = true;
          break;
        }
        step *= 0.5;
      }
      const bool from_iterate = t == 1.0;
      if (!found || moved < problem.tolerance) {
        if (from_iterate) {
          stationary = true;
          break;
        }
        // Momentum point is stationary but the iterate may not be.
        y = res.mu_x;
        at_y = cur;
        t = 1.0;
        continue;
      }
      const double next_total = next.smooth.value + cand.lpNorm<1>();
      if (next_total > cur_total) {
        if (from_iterate) {
          stationary = true;
          break;
        }
        y = res.mu_x;
        at_y = cur;
        t = 1.0;
        continue;
      }
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = cand + ((t - 1.0) / t_next) * (cand - res.mu_x);
      t = t_next;
      res.mu_x = std::move(cand);
      cur = std::move(next);
      cur_total = next_total;
      res.objective_trace.push_back(cur_total);
      at_y = y == res.mu_x ? cur : sparse_eval(prob, y, lambda, targeted, cls);
      step *= 1.1;
    }
    res.lambda_final = lambda;
    res.success = cur.exact_violation <= 0.0;
    // Keep raising lambda until the exact constraint holds with the margin
    // to spare; a solution exactly on the boundary flips only about half of
    // the noisy draws.
    if (cur.exact_violation + problem.feasibility_margin <= 0.0) {
      res.status = "feasible";
      break;
    }
    if (!stationary) {
      res.status = res.success ? "feasible; iteration limit reached inside the margin"
                               : "iteration limit reached with constraint violated";
      break;
    }
    if (stage == kMaxLambdaDoublings) {
      std::ostringstream msg;
      if (res.success) {
        msg << "feasible; margin slack below " << problem.feasibility_margin
            << " at penalty cap lambda=" << lambda;
      } else {
        msg << "constraint violated by " << cur.exact_violation << " at penalty cap lambda="
            << lambda;
      }
      res.status = msg.str();
      break;
    }
    lambda *= 2.0;
  }
  res.iterations = iters;
  finalize(prob, res, source);
  return res;
}

std::vector<Eigen::Index> draw_support(Eigen::Index n, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("draw_support: alpha must be in [0, 1]");
  const auto count = static_cast<Eigen::Index>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(stream_seed(seed, kSupportStream));
  for (Eigen::Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double tv(const Eigen::VectorXd& mu, Eigen::Index width, Eigen::Index height, double epsilon) {
  if (width * height != mu.size() || width < 0 || height < 0) {
    throw DimensionError("tv: width * height != length");
  }
  if (!(epsilon >= 0.0)) throw DomainError("tv: epsilon must be >= 0");
  double total = 0.0;
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const double v = mu[r * width + c];
      const double gx = c + 1 < width ? mu[r * width + c + 1] - v : 0.0;
      const double gy = r + 1 < height ? mu[(r + 1) * width + c] - v : 0.0;
      total += std::sqrt(gx * gx + gy * gy + epsilon * epsilon);
    }
  }
  return total - static_cast<double>(width * height) * epsilon;
}

Eigen::VectorXd tv_gradient(const Eigen::VectorXd& mu, Eigen::Index width, Eigen::Index height,
                            double epsilon) {
  if (width * height != mu.size()) throw DimensionError("tv_gradient: width * height != length");
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(mu.size());
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const Eigen::Index p = r * width + c;
      const double gx = c + 1 < width ? mu[p + 1] - mu[p] : 0.0;
      const double gy = r + 1 < height ? mu[p + width] - mu[p] : 0.0;
      const double s = std::sqrt(gx * gx + gy * gy + epsilon * epsilon);
      if (s == 0.0) continue;
      grad[p] -= (gx + gy) / s;
      if (c + 1 < width) grad[p + 1] += gx / s;
      if (r + 1 < height) grad[p + width] += gy / s;
    }
  }
  return grad;
}

FoolingStats verify_attack(const AttackProblem& problem, const AttackResult& result,
                           Eigen::Index samples, std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("verify_attack: samples must be >= 1");
  const Eigen::Index source = resolved_source(problem);
  const GaussianSpec g =
      GaussianSpec::isotropic(problem.base_image + result.mu_x, std::max(result.sigma2, 0.0));
  const Eigen::MatrixXd xs = sample(g, samples, seed);
  Eigen::Index fooled = 0;
  Eigen::Index hit = 0;
  for (Eigen::Index r = 0; r < samples; ++r) {
    const Eigen::VectorXd x = xs.row(r).transpose();
    const Eigen::Index cls = problem.original ? argmax(forward(*problem.original, x))
                                              : argmax(forward(problem.truncated, x));
    if (cls != source) ++fooled;
    if (problem.target_class && cls == *problem.target_class) ++hit;
  }
  FoolingStats fs;
  fs.samples = samples;
  fs.fooling_rate = static_cast<double>(fooled) / static_cast<double>(samples);
  fs.target_rate = static_cast<double>(hit) / static_cast<double>(samples);
  return fs;
}

}  // namespace netmoments::attacks
