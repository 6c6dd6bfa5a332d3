#pragma once

// Gaussian attack synthesis driven by the analytic output mean.
//
// Every attack searches over the mean mu_x (and for the first two, the
// isotropic variance sigma^2) of additive noise x ~ N(mu_x, sigma^2 I) applied
// to a base image M, scoring candidates through the expected logits
// E_k(mu_x, sigma^2) = E[g_k(M + x)] of a truncated network.
//
//   targeted_attack       min  max_{k != j} E_k - E_j
//                         s.t. -beta <= mu_x <= beta, 0 < sigma^2 <= sigma2_max
//   support_attack        min  E_i - max_{k != i} E_k   over mu_x restricted to
//                         a fixed random support of ceil(alpha n) pixels
//   sparse_smooth_attack  min  |mu_x|_1 + TV(mu_x)
//                         s.t. E_i - max_{k != i} E_k <= -gamma   (sigma^2 = 1)
//                         or, targeted, max_{k != j} E_k - E_j <= -gamma
//
// The max over competitors is smoothed by a log-sum-exp with temperature tau
// and shifted so that the smoothed margin never underestimates the exact one.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netmoments/plnet.hpp"

namespace netmoments::attacks {

struct ImageShape {
  Eigen::Index width = 0;
  Eigen::Index height = 0;
};

struct AttackProblem {
  TruncatedNet truncated;
  // Used for verification when present; otherwise the truncated net is used.
  std::optional<PLNetwork> original;
  Eigen::VectorXd base_image;
  std::optional<ImageShape> shape;

  // Clean class i; resolved to the clean prediction when unset.
  std::optional<Eigen::Index> source_class;
  std::optional<Eigen::Index> target_class;

  double beta = 1.0;
  double sigma2_max = 2.0;
  double sigma2_init = 1.0;
  double alpha = 1.0;
  // Fixed support for support_attack. When empty, ceil(alpha n) indices are
  // drawn from seed (none if alpha == 0).
  std::vector<Eigen::Index> support_indices;

  double gamma = 0.0;
  double lambda_penalty = 1.0;
  // Slack demanded on the sparse-smooth constraint before the penalty
  // schedule stops: lambda keeps doubling until the exact expected margin
  // exceeds gamma by this much (success itself only needs gamma).
  double feasibility_margin = 0.05;
  double tv_epsilon = 1e-3;
  // Scale applied to mu_x inside the targeted sparse-smooth constraint.
  double mean_scale = 1.0;
  double tau = 20.0;

  int max_iters = 2000;
  double step_size = 1.0;
  double tolerance = 1e-7;
  std::uint64_t seed = 0;
  Eigen::Index verify_samples = 100;
};

struct AttackResult {
  Eigen::VectorXd mu_x;
  double sigma2 = 1.0;
  std::vector<double> objective_trace;
  // Trace index at which each penalty stage of sparse_smooth_attack begins;
  // the trace is nonincreasing within a stage.
  std::vector<std::size_t> stage_starts;
  // Expected-logit separation in the attacker's favour: E_j - max_{k!=j} E_k
  // when targeted, max_{k!=i} E_k - E_i otherwise. Positive means the
  // expected prediction has flipped.
  double margin = 0.0;
  double fooling_rate = 0.0;
  // Fraction of verification draws predicted as the target class.
  double target_rate = 0.0;
  double sparsity = 0.0;
  double tv_value = 0.0;
  bool success = false;
  int iterations = 0;
  double lambda_final = 0.0;
  std::vector<Eigen::Index> support;
  std::string status;
};

struct FoolingStats {
  double fooling_rate = 0.0;
  double target_rate = 0.0;
  Eigen::Index samples = 0;
};

// Smooth objective value with its gradients.
struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd grad_mu;
  double grad_sigma2 = 0.0;
};

inline constexpr double kSparsityThreshold = 1e-3;
inline constexpr double kSigma2Floor = 1e-6;

// argmax with ties to the lowest index.
Eigen::Index argmax(const Eigen::VectorXd& v);

Eigen::Index clean_class(const AttackProblem& problem);

// Expected logits under input N(M + mu_x, sigma2 I).
Eigen::VectorXd expected_logits(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                double sigma2);

// Smoothed opt1 objective LSE_{k != j}(E_k) - E_j and its gradients; the
// sigma^2 derivative is a central difference with step 1e-4 sigma^2.
ObjectiveValue targeted_objective(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                  double sigma2);

// Smoothed opt2 objective E_i - LSE_{k != i}(E_k) + log(d - 1) / tau.
ObjectiveValue untargeted_objective(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                    double sigma2);

// Differentiable part of the sparse-smooth objective at penalty weight
// lambda: TV_eps(mu) + lambda * max(0, margin_s(mu) + gamma + feasibility_margin)^2,
// with sigma^2 = 1. The l1 term is handled by FISTA's proximal step.
ObjectiveValue sparse_smooth_part(const AttackProblem& problem, const Eigen::VectorXd& mu_x,
                                  double lambda, bool targeted);

AttackResult targeted_attack(const AttackProblem& problem);
AttackResult support_attack(const AttackProblem& problem);
AttackResult sparse_smooth_attack(const AttackProblem& problem, bool targeted);

// ceil(alpha * n) distinct sorted indices drawn deterministically from seed.
std::vector<Eigen::Index> draw_support(Eigen::Index n, double alpha, std::uint64_t seed);

// Isotropic smoothed total variation with forward differences and replicate
// boundary: sum_p sqrt(gx_p^2 + gy_p^2 + eps^2) - w h eps. Pixels are stored
// row-major (index = row * width + col).
double tv(const Eigen::VectorXd& mu, Eigen::Index width, Eigen::Index height, double epsilon);
Eigen::VectorXd tv_gradient(const Eigen::VectorXd& mu, Eigen::Index width,
                            Eigen::Index height, double epsilon);

// Empirical check of an attack: draws N(mu_x, sigma2 I) around M and runs the
// original network when available.
FoolingStats verify_attack(const AttackProblem& problem, const AttackResult& result,
                           Eigen::Index samples, std::uint64_t seed);

}  // namespace netmoments::attacks
