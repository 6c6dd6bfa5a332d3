#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netmoments/errors.hpp"
#include "netmoments/io.hpp"
#include "netmoments/synth.hpp"

using namespace netmoments;
using io::Json;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("netmoments_test_" + name)).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("network round trip is exact") {
  const PLNetwork net = synth::random_network({{5, 4, 3}, 1.0, 0.2, 1});
  const PLNetwork back = io::network_from_json(Json::parse(io::to_json(net).dump()));
  REQUIRE(back.num_layers() == net.num_layers());
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    CHECK(back.layer(k).weights == net.layer(k).weights);
    CHECK(back.layer(k).bias == net.layer(k).bias);
    CHECK(back.relu_after(k) == net.relu_after(k));
  }
  const Json j = io::to_json(net);
  CHECK(j["layers"][0]["rows"] == 4);
  CHECK(j["layers"][0]["cols"] == 5);
  CHECK(j["layers"][0]["weights"].size() == 20);
  CHECK(j["layers"][0]["weights"][1].get<double>() == net.layer(0).weights(0, 1));
}

TEST_CASE("malformed layers are rejected") {
  Json bad = io::to_json(synth::random_network({{3, 2}, 1.0, 0.1, 1}));
  bad["layers"][0]["weights"].erase(0);
  CHECK_THROWS_AS(io::network_from_json(bad), DimensionError);
}

TEST_CASE("truncated net round trip") {
  TruncatedNet tn = synth::random_truncated(4, 3, 2, 0.5, 2);
  tn.source_point = synth::random_vector(4, 1.0, 3);
  tn.layer_index = 2;
  const TruncatedNet back = io::truncated_from_json(Json::parse(io::to_json(tn).dump()));
  CHECK(back.a.weights == tn.a.weights);
  CHECK(back.b.bias == tn.b.bias);
  CHECK(back.source_point == tn.source_point);
  CHECK(back.layer_index == 2);
}

TEST_CASE("gaussian round trip for every covariance form") {
  const Eigen::VectorXd mu = synth::random_vector(3, 1.0, 4);
  const GaussianSpec gs[] = {GaussianSpec::isotropic(mu, 0.3),
                             GaussianSpec::diagonal(mu, Eigen::Vector3d(0.1, 0.2, 0.3)),
                             GaussianSpec::full(mu, synth::random_covariance(3, 1.0, 5))};
  for (const GaussianSpec& g : gs) {
    const GaussianSpec back = io::gaussian_from_json(Json::parse(io::to_json(g).dump()));
    CHECK(back.mean() == g.mean());
    CHECK(back.covariance().index() == g.covariance().index());
    CHECK(back.covariance_matrix() == g.covariance_matrix());
  }
  CHECK_THROWS(io::gaussian_from_json(Json::parse(R"({"mean":[0],"covariance":{"type":"x"}})")));
}

TEST_CASE("attack problems from a network are linearized at the base image") {
  const PLNetwork net = synth::random_network({{9, 6, 5, 3}, 1.0, 0.2, 6});
  Json j;
  j["network"] = io::to_json(net);
  j["linearize_layer"] = 1;
  j["base_image"] = io::to_json(synth::synthetic_image(3, 3, 1));
  j["shape"] = {{"width", 3}, {"height", 3}};
  j["target_class"] = 2;
  j["beta"] = 0.5;
  const attacks::AttackProblem p = io::attack_problem_from_json(j);
  CHECK(p.truncated.layer_index == 1);
  CHECK(p.original.has_value());
  CHECK(p.beta == 0.5);
  CHECK(*p.target_class == 2);
  CHECK_FALSE(p.source_class.has_value());
  CHECK(p.shape->width == 3);
  CHECK((forward(p.truncated, p.base_image) - forward(net, p.base_image)).norm() < 1e-10);
}

TEST_CASE("attack result round trip") {
  attacks::AttackResult r;
  r.mu_x = synth::random_vector(4, 1.0, 7);
  r.sigma2 = 0.25;
  r.objective_trace = {3.0, 2.0, 1.5};
  r.stage_starts = {0, 2};
  r.margin = 0.1;
  r.fooling_rate = 0.93;
  r.success = true;
  r.support = {1, 3};
  r.status = "feasible";
  const attacks::AttackResult back = io::attack_result_from_json(Json::parse(io::to_json(r).dump()));
  CHECK(back.mu_x == r.mu_x);
  CHECK(back.objective_trace == r.objective_trace);
  CHECK(back.stage_starts == r.stage_starts);
  CHECK(back.support == r.support);
  CHECK(back.fooling_rate == r.fooling_rate);
  CHECK(back.status == r.status);
}

TEST_CASE("config hash") {
  const Json a = Json::parse(R"({"b": 1, "a": [1, 2]})");
  const Json b = Json::parse(R"({"a": [1, 2], "b": 1})");
  const Json c = Json::parse(R"({"a": [1, 2], "b": 2})");
  CHECK(io::config_hash(a) == io::config_hash(b));
  CHECK(io::config_hash(a) != io::config_hash(c));
  CHECK(io::config_hash(a).size() == 16);
  // FNV-1a of the empty object "{}".
  CHECK(io::config_hash(Json::object()) == "08f44b07b5901a25");
}

TEST_CASE("csv writer") {
  const std::string path = tmp_path("csv.csv");
  {
    io::CsvWriter w(path);
    w.row({"a", "b,c", "say \"hi\""});
    w.row({io::CsvWriter::num(0.1), io::CsvWriter::num(-2.0)});
  }
  CHECK(slurp(path) == "a,\"b,c\",\"say \"\"hi\"\"\"\n0.1,-2\n");
  CHECK(std::stod(io::CsvWriter::num(1.0 / 3.0)) == 1.0 / 3.0);
  std::remove(path.c_str());
}

TEST_CASE("json files") {
  const std::string path = tmp_path("x.json");
  const Json j = {{"k", 1.5}};
  io::write_json(path, j);
  CHECK(io::read_json(path) == j);
  std::remove(path.c_str());
  CHECK_THROWS(io::read_json(tmp_path("missing.json")));
}

}  // TEST_SUITE
