#include "netmoments/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "netmoments/errors.hpp"

namespace netmoments::io {

namespace {

Eigen::Index as_index(const Json& j, const char* key) {
  if (!j.contains(key)) throw PreconditionError(std::string("json: missing field '") + key + "'");
  return j.at(key).get<Eigen::Index>();
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

Json to_json(const Eigen::VectorXd& v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json to_json(const AffineMap& map, bool relu) {
  Json j;
  j["rows"] = map.out_dim();
  j["cols"] = map.in_dim();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(map.weights.size()));
  for (Eigen::Index r = 0; r < map.out_dim(); ++r) {
    for (Eigen::Index c = 0; c < map.in_dim(); ++c) w.push_back(map.weights(r, c));
  }
  j["weights"] = std::move(w);
  j["bias"] = to_json(map.bias);
  j["relu"] = relu;
  return j;
}

AffineMap affine_from_json(const Json& j) {
  const Eigen::Index rows = as_index(j, "rows");
  const Eigen::Index cols = as_index(j, "cols");
  const auto w = j.at("weights").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != rows * cols) {
    throw DimensionError("json layer: weights has " + std::to_string(w.size()) +
                         " entries, expected rows*cols = " + std::to_string(rows * cols));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = w[static_cast<std::size_t>(r * cols + c)];
  }
  return {std::move(m), vector_from_json(j.at("bias"))};
}

Json to_json(const PLNetwork& net) {
  Json layers = Json::array();
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    layers.push_back(to_json(net.layer(k), net.relu_after(k)));
  }
  return Json{{"layers", std::move(layers)}};
}

PLNetwork network_from_json(const Json& j) {
  std::vector<AffineMap> layers;
  std::vector<bool> relu;
  for (const Json& l : j.at("layers")) {
    layers.push_back(affine_from_json(l));
    relu.push_back(l.value("relu", false));
  }
  return {std::move(layers), std::move(relu)};
}

Json to_json(const TruncatedNet& tn) {
  return Json{{"a", to_json(tn.a, true)},
              {"b", to_json(tn.b, false)},
              {"source_point", to_json(tn.source_point)},
              {"layer_index", tn.layer_index},
              {"hidden_width", tn.hidden_dim()},
              {"storage_scalars", tn.storage_size()}};
}

TruncatedNet truncated_from_json(const Json& j) {
  Eigen::VectorXd point;
  if (j.contains("source_point")) point = vector_from_json(j.at("source_point"));
  return {affine_from_json(j.at("a")), affine_from_json(j.at("b")), std::move(point),
          j.value("layer_index", std::size_t{0})};
}

Json to_json(const GaussianSpec& g) {
  Json cov = std::visit(
      [&g](const auto& c) -> Json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IsotropicCov>) {
          return Json{{"type", "isotropic"}, {"variance", c.variance}};
        } else if constexpr (std::is_same_v<T, DiagonalCov>) {
          return Json{{"type", "diagonal"}, {"variances", to_json(c.variances)}};
        } else {
          std::vector<double> vals;
          for (Eigen::Index r = 0; r < g.dim(); ++r) {
            for (Eigen::Index k = 0; k < g.dim(); ++k) vals.push_back(c.matrix(r, k));
          }
          return Json{{"type", "full"}, {"values", std::move(vals)}};
        }
      },
      g.covariance());
  return Json{{"mean", to_json(g.mean())}, {"covariance", std::move(cov)}};
}

GaussianSpec gaussian_from_json(const Json& j) {
  Eigen::VectorXd mean = vector_from_json(j.at("mean"));
  const Json& cov = j.at("covariance");
  const std::string type = cov.at("type").get<std::string>();
  if (type == "isotropic") return GaussianSpec::isotropic(std::move(mean), cov.at("variance"));
  if (type == "diagonal") {
    return GaussianSpec::diagonal(std::move(mean), vector_from_json(cov.at("variances")));
  }
  if (type == "full") {
    const auto vals = cov.at("values").get<std::vector<double>>();
    const Eigen::Index n = mean.size();
    if (static_cast<Eigen::Index>(vals.size()) != n * n) {
      throw DimensionError("json gaussian: full covariance needs n*n values");
    }
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = vals[static_cast<std::size_t>(r * n + c)];
    }
    return GaussianSpec::full(std::move(mean), std::move(m));
  }
  throw PreconditionError("json gaussian: unknown covariance type '" + type + "'");
}

Json to_json(const MomentResult& m) {
  return Json{{"mean", to_json(m.mean)},
              {"variance", to_json(m.variance)},
              {"second_moment", to_json(m.second_moment)},
              {"terms_used", m.terms_used},
              {"fallback_pairs", m.fallback_pairs},
              {"collinear_pairs", m.collinear_pairs},
              {"clipped_variances", m.clipped_variances}};
}

Json to_json(const attacks::AttackResult& r) {
  return Json{{"mu_x", to_json(r.mu_x)},
              {"sigma2", r.sigma2},
              {"objective_trace", r.objective_trace},
              {"stage_starts", r.stage_starts},
              {"margin", r.margin},
              {"fooling_rate", r.fooling_rate},
              {"target_rate", r.target_rate},
              {"sparsity", r.sparsity},
              {"tv_value", r.tv_value},
              {"success", r.success},
              {"iterations", r.iterations},
              {"lambda_final", r.lambda_final},
              {"support", r.support},
              {"status", r.status}};
}

attacks::AttackResult attack_result_from_json(const Json& j) {
  attacks::AttackResult r;
  r.mu_x = vector_from_json(j.at("mu_x"));
  r.sigma2 = j.at("sigma2").get<double>();
  read_opt(j, "objective_trace", r.objective_trace);
  read_opt(j, "stage_starts", r.stage_starts);
  read_opt(j, "margin", r.margin);
  read_opt(j, "fooling_rate", r.fooling_rate);
  read_opt(j, "target_rate", r.target_rate);
  read_opt(j, "sparsity", r.sparsity);
  read_opt(j, "tv_value", r.tv_value);
  read_opt(j, "success", r.success);
  read_opt(j, "iterations", r.iterations);
  read_opt(j, "lambda_final", r.lambda_final);
  read_opt(j, "support", r.support);
  read_opt(j, "status", r.status);
  return r;
}

attacks::AttackProblem attack_problem_from_json(const Json& j) {
  attacks::AttackProblem p;
  p.base_image = vector_from_json(j.at("base_image"));
  if (j.contains("network")) p.original = network_from_json(j.at("network"));
  if (j.contains("truncated")) {
    p.truncated = truncated_from_json(j.at("truncated"));
  } else if (p.original) {
    p.truncated = two_stage_linearize(*p.original, j.value("linearize_layer", std::size_t{0}),
                                      p.base_image);
  } else {
    throw PreconditionError("attack problem: needs 'truncated' or 'network'");
  }
  if (j.contains("shape")) {
    p.shape = attacks::ImageShape{as_index(j.at("shape"), "width"),
                                  as_index(j.at("shape"), "height")};
  }
  if (j.contains("source_class") && !j.at("source_class").is_null()) {
    p.source_class = j.at("source_class").get<Eigen::Index>();
  }
  if (j.contains("target_class") && !j.at("target_class").is_null()) {
    p.target_class = j.at("target_class").get<Eigen::Index>();
  }
  read_opt(j, "beta", p.beta);
  read_opt(j, "sigma2_max", p.sigma2_max);
  read_opt(j, "sigma2_init", p.sigma2_init);
  read_opt(j, "alpha", p.alpha);
  read_opt(j, "support_indices", p.support_indices);
  read_opt(j, "gamma", p.gamma);
  read_opt(j, "lambda_penalty", p.lambda_penalty);
  read_opt(j, "feasibility_margin", p.feasibility_margin);
  read_opt(j, "tv_epsilon", p.tv_epsilon);
  read_opt(j, "mean_scale", p.mean_scale);
  read_opt(j, "tau", p.tau);
  read_opt(j, "max_iters", p.max_iters);
  read_opt(j, "step_size", p.step_size);
  read_opt(j, "tolerance", p.tolerance);
  read_opt(j, "seed", p.seed);
  read_opt(j, "verify_samples", p.verify_samples);
  return p;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return Json::parse(in);
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot write '" + path + "'");
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out_ << ',';
    const std::string& f = fields[k];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out_ << f;
      continue;
    }
    out_ << '"';
    for (char c : f) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  }
  out_ << '\n';
}

std::string CsvWriter::num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace netmoments::io
