#pragma once

// JSON and CSV serialization for networks, input distributions, attack
// problems and results.
//
// Network JSON:
//   {"layers": [{"rows": r, "cols": c, "weights": [row-major r*c],
//                "bias": [r], "relu": bool}, ...]}
// Truncated network JSON:
//   {"a": <layer>, "b": <layer>, "source_point": [...], "layer_index": l}
// Gaussian JSON:
//   {"mean": [...], "covariance": {"type": "isotropic", "variance": v}
//                               | {"type": "diagonal", "variances": [...]}
//                               | {"type": "full", "values": [row-major n*n]}}

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netmoments/attacks.hpp"
#include "netmoments/gauss.hpp"
#include "netmoments/net_moments.hpp"
#include "netmoments/plnet.hpp"

namespace netmoments::io {

using Json = nlohmann::json;

Json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);

Json to_json(const AffineMap& map, bool relu);
AffineMap affine_from_json(const Json& j);

Json to_json(const PLNetwork& net);
PLNetwork network_from_json(const Json& j);

Json to_json(const TruncatedNet& tn);
TruncatedNet truncated_from_json(const Json& j);

Json to_json(const GaussianSpec& g);
GaussianSpec gaussian_from_json(const Json& j);

Json to_json(const MomentResult& m);
Json to_json(const attacks::AttackResult& r);
attacks::AttackResult attack_result_from_json(const Json& j);

// Problem records carry the fields of AttackProblem under the same names plus
// "kind" and either "truncated" or "network" + "linearize_layer" (the network
// is then linearized at base_image).
attacks::AttackProblem attack_problem_from_json(const Json& j);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

// 64-bit FNV-1a of the compact dump of j, as 16 hex digits. Object keys are
// sorted by the JSON library, so equal configs hash equally.
std::string config_hash(const Json& j);

// RFC 4180 writer: comma separated, LF line ends, fields quoted only when
// they contain a comma, quote or newline; numbers printed in the
// shortest form that round-trips.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void row(const std::vector<std::string>& fields);
  static std::string num(double v);

 private:
  std::ofstream out_;
};

}  // namespace netmoments::io
