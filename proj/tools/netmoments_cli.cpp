#include <omp.h>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netmoments/attacks.hpp"
#include "netmoments/errors.hpp"
#include "netmoments/experiments.hpp"
#include "netmoments/io.hpp"
#include "netmoments/net_moments.hpp"
#include "netmoments/oracle.hpp"
#include "netmoments/synth.hpp"

using namespace netmoments;
using io::CsvWriter;
using io::Json;
namespace ex = netmoments::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> terms;
  int threads = 0;
};

// Effective configuration: the file (if any) with command-line overrides
// folded in, so the hash identifies everything a run depends on.
struct Run {
  Json config;
  std::uint64_t seed = 0;
  std::string hash;
  std::filesystem::path out;

  std::string path(const std::string& name) const { return (out / name).string(); }

  void write(const std::string& name, Json j) const {
    j["config_hash"] = hash;
    j["seed"] = seed;
    io::write_json(path(name), j);
  }
};

Run make_run(const Options& o) {
  Run r;
  r.config = o.config_path.empty() ? Json::object() : io::read_json(o.config_path);
  if (o.seed) r.config["seed"] = *o.seed;
  if (o.terms) r.config["terms"] = *o.terms;
  r.seed = r.config.value("seed", std::uint64_t{0});
  r.hash = io::config_hash(r.config);
  r.out = o.out_dir;
  std::filesystem::create_directories(r.out);
  return r;
}

std::vector<double> grid_axis(const Json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const Json& a = j.at(key);
  if (a.is_array()) return a.get<std::vector<double>>();
  std::vector<double> v = ex::linspace_step(a.at("lo").get<double>(), a.at("hi").get<double>(),
                                            a.at("step").get<double>());
  if (a.contains("extra")) {
    for (double x : a.at("extra").get<std::vector<double>>()) v.push_back(x);
  }
  return v;
}

std::string num(double v) { return CsvWriter::num(v); }

int cmd_series_error(const Run& run) {
  const Json& c = run.config;
  const ex::SeriesGrid standard = ex::SeriesGrid::standard();
  ex::SeriesGrid grid{grid_axis(c, "mu", standard.mu), grid_axis(c, "sigma", standard.sigma),
                      grid_axis(c, "rho", standard.rho)};
  ex::SeriesErrorOptions opts;
  if (c.contains("terms")) {
    opts.terms = c.at("terms").is_array() ? c.at("terms").get<std::vector<int>>()
                                          : std::vector<int>{c.at("terms").get<int>()};
  }
  opts.oracle_tol = c.value("oracle_tol", opts.oracle_tol);
  opts.accelerate = c.value("accelerate", opts.accelerate);
  const auto rows = ex::series_error(grid, opts);
  CsvWriter csv(run.path("series_error.csv"));
  csv.row({"config_hash", "seed", "terms", "rho_bucket", "max_abs_error", "worst_mu1", "worst_mu2",
           "worst_sigma1", "worst_sigma2"});
  for (const auto& r : rows) {
    csv.row({run.hash, std::to_string(run.seed), std::to_string(r.terms), num(r.rho),
             num(r.max_abs_error), num(r.worst.mu1), num(r.worst.mu2), num(r.worst.sigma1),
             num(r.worst.sigma2)});
  }
  for (const auto& r : rows) {
    std::printf("terms=%d rho=%g max_abs_error=%.3g\n", r.terms, r.rho, r.max_abs_error);
  }
  return kExitOk;
}

int cmd_tightness(const Run& run) {
  const Json& c = run.config;
  ex::TightnessConfig cfg;
  cfg.widths = c.value("widths", cfg.widths);
  cfg.linearize_layer = c.value("linearize_layer", cfg.linearize_layer);
  cfg.instances = c.value("instances", cfg.instances);
  cfg.samples = c.value("samples", cfg.samples);
  cfg.weight_scale = c.value("weight_scale", cfg.weight_scale);
  cfg.bias_scale = c.value("bias_scale", cfg.bias_scale);
  cfg.mean_scale = c.value("mean_scale", cfg.mean_scale);
  cfg.input_variance = c.value("input_variance", cfg.input_variance);
  cfg.zero_mean = c.value("zero_mean", cfg.zero_mean);
  cfg.terms = c.value("terms", cfg.terms);
  cfg.seed = run.seed;
  const auto rows = ex::tightness(cfg);

  CsvWriter csv(run.path("tightness.csv"));
  csv.row({"config_hash", "seed", "instance", "logit", "mean", "mc_mean", "mean_se", "var_new",
           "var_old", "mc_var", "var_se", "er_mean", "er_var_new", "er_var_old"});
  double er_mean = 0.0, er_new = 0.0, er_old = 0.0;
  int new_wins = 0, instances = 0;
  double inst_new = 0.0, inst_old = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    csv.row({run.hash, std::to_string(run.seed), std::to_string(r.instance), std::to_string(r.logit),
             num(r.mean), num(r.mc_mean), num(r.mean_se), num(r.var_new), num(r.var_old),
             num(r.mc_var), num(r.var_se), num(r.er_mean), num(r.er_var_new), num(r.er_var_old)});
    er_mean += r.er_mean;
    er_new += r.er_var_new;
    er_old += r.er_var_old;
    inst_new += r.er_var_new;
    inst_old += r.er_var_old;
    if (k + 1 == rows.size() || rows[k + 1].instance != r.instance) {
      new_wins += inst_new <= inst_old;
      ++instances;
      inst_new = inst_old = 0.0;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(rows.size(), 1));
  csv.row({run.hash, std::to_string(run.seed), "avg", "avg", "", "", "", "", "", "", "",
           num(er_mean / n), num(er_new / n), num(er_old / n)});
  std::printf("E[E_r mean]=%.4g E[E_r var_new]=%.4g E[E_r var_old]=%.4g; var_new <= var_old on %d/%d instances\n",
              er_mean / n, er_new / n, er_old / n, new_wins, instances);
  return kExitOk;
}

PLNetwork network_from_config(const Json& c, std::uint64_t seed) {
  if (c.contains("network")) return io::network_from_json(c.at("network"));
  synth::NetSpec spec;
  spec.widths = c.value("widths", std::vector<Eigen::Index>{16, 24, 20, 16, 4});
  spec.weight_scale = c.value("weight_scale", 1.0);
  spec.bias_scale = c.value("bias_scale", 0.2);
  spec.seed = seed;
  return synth::random_network(spec);
}

int cmd_linearize(const Run& run) {
  const Json& c = run.config;
  const PLNetwork net = network_from_config(c, run.seed);
  const std::size_t layer = c.value("layer", std::size_t{0});
  const Eigen::VectorXd x = c.contains("point") ? io::vector_from_json(c.at("point"))
                                                : synth::random_vector(net.input_dim(), 1.0, run.seed + 1);
  const TruncatedNet tn = two_stage_linearize(net, layer, x);
  Json out = io::to_json(tn);
  const Eigen::VectorXd y = forward(net, x);
  out["relative_error_at_point"] = (forward(tn, x) - y).norm() / std::max(y.norm(), 1e-300);
  run.write("truncated.json", out);

  // Discrepancy away from the point along random unit directions.
  const std::vector<double> radii = c.value("radii", std::vector<double>{0.01, 0.03, 0.1, 0.3, 1.0});
  const int directions = c.value("directions", 100);
  std::mt19937_64 rng(stream_seed(run.seed, 0x4c494eULL));
  std::normal_distribution<double> normal;
  CsvWriter csv(run.path("linearization.csv"));
  csv.row({"config_hash", "seed", "radius", "mean_l2_discrepancy", "max_l2_discrepancy"});
  std::vector<Eigen::VectorXd> dirs;
  for (int k = 0; k < directions; ++k) {
    Eigen::VectorXd u(net.input_dim());
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = normal(rng);
    dirs.push_back(u.normalized());
  }
  for (double r : radii) {
    double sum = 0.0, worst = 0.0;
    for (const auto& u : dirs) {
      const Eigen::VectorXd z = x + r * u;
      const double d = (forward(tn, z) - forward(net, z)).norm();
      sum += d;
      worst = std::max(worst, d);
    }
    csv.row({run.hash, std::to_string(run.seed), num(r), num(sum / std::max(directions, 1)), num(worst)});
  }
  std::printf("relative error at point %.3g\n", out["relative_error_at_point"].get<double>());
  return kExitOk;
}

TruncatedNet truncated_from_config(const Json& c, const Eigen::VectorXd& mu, std::uint64_t seed) {
  if (c.contains("truncated")) return io::truncated_from_json(c.at("truncated"));
  const PLNetwork net = network_from_config(c, seed);
  const Eigen::VectorXd x = c.contains("point") ? io::vector_from_json(c.at("point")) : mu;
  return two_stage_linearize(net, c.value("linearize_layer", std::size_t{0}), x);
}

int cmd_moments(const Run& run) {
  const Json& c = run.config;
  const GaussianSpec g = io::gaussian_from_json(c.at("gaussian"));
  const TruncatedNet tn = truncated_from_config(c, g.mean(), run.seed);
  const MomentResult m = variance_general(tn, g, {c.value("terms", 20)});
  Json out = io::to_json(m);
  out["variance_zero_mean_approx"] = io::to_json(variance_zero_mean_approx(tn, g));
  const Eigen::Index samples = c.value("mc_samples", Eigen::Index{0});
  if (samples > 1) {
    const oracle::McEstimate mc = oracle::mc_moments(tn, g, samples, run.seed);
    out["mc"] = {{"mean", io::to_json(mc.mean)},
                 {"variance", io::to_json(mc.variance)},
                 {"mean_se", io::to_json(mc.mean_se)},
                 {"variance_se", io::to_json(mc.variance_se)},
                 {"samples", mc.samples}};
  }
  run.write("moments.json", out);
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

attacks::AttackResult dispatch(const attacks::AttackProblem& p, const std::string& kind) {
  if (kind == "targeted") return attacks::targeted_attack(p);
  if (kind == "support") return attacks::support_attack(p);
  if (kind == "sparse_smooth") return attacks::sparse_smooth_attack(p, false);
  if (kind == "sparse_smooth_targeted") return attacks::sparse_smooth_attack(p, true);
  throw PreconditionError("attack: unknown kind '" + kind + "'");
}

int cmd_attack(const Run& run) {
  const Json& c = run.config;
  attacks::AttackProblem p = io::attack_problem_from_json(c);
  p.seed = run.seed;
  const std::string kind = c.value("kind", std::string("targeted"));

  if (c.contains("gamma_grid")) {
    CsvWriter csv(run.path("gamma_grid.csv"));
    csv.row({"config_hash", "seed", "gamma", "margin", "fooling_rate", "sparsity", "tv", "success"});
    const auto grid = c.at("gamma_grid").get<std::vector<double>>();
    const int ng = static_cast<int>(grid.size());
    std::vector<attacks::AttackResult> results(grid.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < ng; ++k) {
      try {
        attacks::AttackProblem gp = p;
        gp.gamma = grid[k];
        results[k] = dispatch(gp, kind);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    for (int k = 0; k < ng; ++k) {
      const attacks::AttackResult& r = results[k];
      csv.row({run.hash, std::to_string(run.seed), num(grid[k]), num(r.margin),
               num(r.fooling_rate), num(r.sparsity), num(r.tv_value), r.success ? "1" : "0"});
    }
  }

  const attacks::AttackResult r = dispatch(p, kind);
  Json out = io::to_json(r);
  out["kind"] = kind;
  out["clean_class"] = attacks::clean_class(p);
  run.write("attack.json", out);
  {
    CsvWriter csv(run.path("mu_x.csv"));
    csv.row({"config_hash", "seed", "index", "mu_x"});
    for (Eigen::Index k = 0; k < r.mu_x.size(); ++k) {
      csv.row({run.hash, std::to_string(run.seed), std::to_string(k), num(r.mu_x[k])});
    }
  }
  {
    CsvWriter csv(run.path("trace.csv"));
    csv.row({"config_hash", "seed", "iteration", "objective"});
    for (std::size_t k = 0; k < r.objective_trace.size(); ++k) {
      csv.row({run.hash, std::to_string(run.seed), std::to_string(k), num(r.objective_trace[k])});
    }
  }
  std::printf("%s: %s, margin %.4g, fooling_rate %.2f, target_rate %.2f, sparsity %.2f\n",
              kind.c_str(), r.status.c_str(), r.margin, r.fooling_rate, r.target_rate, r.sparsity);
  if (!r.success) {
    run.write("diagnostic.json", {{"error", "infeasible"}, {"kind", kind}, {"status", r.status},
                                  {"margin", r.margin}, {"lambda_final", r.lambda_final}});
    return kExitInfeasible;
  }
  return kExitOk;
}

int cmd_verify(const Run& run) {
  const Json& c = run.config;
  const attacks::AttackProblem p = io::attack_problem_from_json(c);
  const Json rj = c.at("result").is_string() ? io::read_json(c.at("result").get<std::string>())
                                             : c.at("result");
  const attacks::AttackResult r = io::attack_result_from_json(rj);
  const Eigen::Index samples = c.value("samples", Eigen::Index{1000});
  const attacks::FoolingStats fs = attacks::verify_attack(p, r, samples, run.seed);
  run.write("verify.json", {{"fooling_rate", fs.fooling_rate},
                            {"target_rate", fs.target_rate},
                            {"samples", fs.samples}});
  std::printf("fooling_rate %.4f target_rate %.4f over %lld samples\n", fs.fooling_rate,
              fs.target_rate, static_cast<long long>(fs.samples));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic output moments of piecewise-linear networks under Gaussian input"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "JSON configuration file");
  app.add_option("--seed", o.seed, "Random seed (overrides the config)");
  app.add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  app.add_option("--terms", o.terms, "Series terms (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--threads", o.threads, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  const std::vector<std::pair<std::string, int (*)(const Run&)>> commands{
      {"series-error", cmd_series_error}, {"tightness", cmd_tightness}, {"linearize", cmd_linearize},
      {"moments", cmd_moments},           {"attack", cmd_attack},       {"verify", cmd_verify}};
  const char* help[] = {"Series truncation error against the quadrature oracle",
                        "Analytic versus Monte Carlo moments on random networks",
                        "Two-stage linearization of a network and its discrepancy",
                        "Output mean and variance for one network and input",
                        "Gaussian attack synthesis",
                        "Monte Carlo fooling rate of a stored attack"};
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    subs.push_back(app.add_subcommand(commands[k].first, help[k]));
  }
  CLI11_PARSE(app, argc, argv);
  if (o.threads > 0) omp_set_num_threads(o.threads);

  try {
    const Run run = make_run(o);
    for (std::size_t k = 0; k < commands.size(); ++k) {
      if (subs[k]->parsed()) return commands[k].second(run);
    }
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
