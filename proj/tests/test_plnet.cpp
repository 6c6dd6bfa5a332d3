#include <doctest.h>

#include <cmath>

#include "netmoments/errors.hpp"
#include "netmoments/plnet.hpp"
#include "netmoments/synth.hpp"
#include "reference.hpp"

using namespace netmoments;

namespace {

std::vector<ref::NaiveLayer> to_naive(const PLNetwork& net) {
  std::vector<ref::NaiveLayer> out;
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    const AffineMap& l = net.layer(k);
    ref::NaiveLayer nl;
    nl.relu = net.relu_after(k);
    nl.b.assign(l.bias.data(), l.bias.data() + l.bias.size());
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      std::vector<double> row(l.weights.cols());
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row[c] = l.weights(r, c);
      nl.w.push_back(row);
    }
    out.push_back(nl);
  }
  return out;
}

}  // namespace

TEST_SUITE("plnet") {

TEST_CASE("construction checks") {
  const AffineMap a(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3));
  const AffineMap b(Eigen::MatrixXd::Ones(2, 4), Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(PLNetwork({a, b}, {true, false}), DimensionError);
  const AffineMap c(Eigen::MatrixXd::Ones(2, 3), Eigen::VectorXd::Zero(2));
  CHECK_THROWS_AS(PLNetwork({a, c}, {true, true}), PreconditionError);
  CHECK_THROWS_AS(PLNetwork({a, c}, {true}), DimensionError);
  CHECK_NOTHROW(PLNetwork({a, c}, {true, false}));
  CHECK_THROWS_AS(AffineMap(Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(2)),
                  DimensionError);
}

TEST_CASE("forward matches a naive loop") {
  const PLNetwork net = synth::random_network({{6, 8, 5, 3}, 1.0, 0.2, 4});
  const auto naive = to_naive(net);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Eigen::VectorXd x = synth::random_vector(6, 1.0, s);
    const Eigen::VectorXd y = forward(net, x);
    const auto yn = ref::naive_forward(naive, std::vector<double>(x.data(), x.data() + 6));
    for (int k = 0; k < 3; ++k) CHECK(y[k] == doctest::Approx(yn[k]).epsilon(1e-13));
  }
}

TEST_CASE("segment jacobian reproduces the segment and matches differences") {
  const PLNetwork net = synth::random_network({{5, 7, 6, 4, 2}, 1.0, 0.3, 9});
  const Eigen::VectorXd x = synth::random_vector(5, 1.0, 1);
  const AffineMap j = segment_jacobian(net, 0, net.num_layers(), x);
  CHECK((j.apply(x) - forward(net, x)).norm() <= 1e-12 * (1 + forward(net, x).norm()));
  const double h = 1e-7;
  for (int c = 0; c < 5; ++c) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
    e[c] = h;
    const Eigen::VectorXd fd = (forward(net, x + e) - forward(net, x - e)) / (2 * h);
    CHECK((fd - j.weights.col(c)).norm() <= 1e-6);
  }
  const AffineMap empty = segment_jacobian(net, 2, 2, Eigen::VectorXd::Ones(6));
  CHECK(empty.weights.isIdentity());
  CHECK_THROWS_AS(segment_jacobian(net, 3, 1, x), PreconditionError);
  CHECK_THROWS_AS(segment_jacobian(net, 0, 2, Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST_CASE("zero pre-activation counts as inactive") {
  Eigen::MatrixXd w1(1, 1);
  w1 << 1.0;
  Eigen::MatrixXd w2(1, 1);
  w2 << 3.0;
  const PLNetwork net({AffineMap(w1, Eigen::VectorXd::Zero(1)), AffineMap(w2, Eigen::VectorXd::Zero(1))},
                      {true, false});
  const AffineMap j = segment_jacobian(net, 0, 2, Eigen::VectorXd::Zero(1));
  CHECK(j.weights(0, 0) == 0.0);
  CHECK_FALSE(activation_pattern(net, Eigen::VectorXd::Zero(1))[0][0]);
}

TEST_CASE("two-stage linearization is exact at the point") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const PLNetwork net = synth::random_network({{8, 10, 9, 7, 3}, 1.0, 0.2, s});
    const Eigen::VectorXd x = synth::random_vector(8, 1.0, 100 + s);
    for (std::size_t layer = 0; layer < 3; ++layer) {
      const TruncatedNet tn = two_stage_linearize(net, layer, x);
      const Eigen::VectorXd y = forward(net, x);
      CHECK((forward(tn, x) - y).norm() <= 1e-10 * std::max(1.0, y.norm()));
      CHECK(tn.hidden_dim() == net.layer(layer).out_dim());
      CHECK(tn.layer_index == layer);
      CHECK(tn.storage_size() ==
            tn.a.weights.size() + tn.a.bias.size() + tn.b.weights.size() + tn.b.bias.size() + 8);
    }
  }
}

TEST_CASE("two-stage linearization is exact inside the activation region") {
  const PLNetwork net = synth::random_network({{4, 6, 5, 2}, 1.0, 0.5, 3});
  const Eigen::VectorXd x = synth::random_vector(4, 1.0, 17);
  const TruncatedNet tn = two_stage_linearize(net, 0, x);
  const Eigen::VectorXd dir = synth::random_vector(4, 1.0, 18).normalized();
  const auto pat = activation_pattern(net, x);
  for (double r : {1e-6, 1e-4, 1e-3}) {
    const Eigen::VectorXd z = x + r * dir;
    if (activation_pattern(net, z) != pat) continue;
    CHECK((forward(tn, z) - forward(net, z)).norm() <= 1e-10);
  }
}

TEST_CASE("linearizing a non-ReLU layer is rejected") {
  const PLNetwork net = synth::random_network({{3, 4, 2}, 1.0, 0.1, 1});
  CHECK_THROWS_AS(two_stage_linearize(net, 1, Eigen::VectorXd::Zero(3)), PreconditionError);
  CHECK_THROWS_AS(two_stage_linearize(net, 5, Eigen::VectorXd::Zero(3)), PreconditionError);
}

TEST_CASE("as_network round trip") {
  const TruncatedNet tn = synth::random_truncated(5, 4, 3, 0.3, 2);
  const Eigen::VectorXd x = synth::random_vector(5, 1.0, 8);
  CHECK((forward(tn.as_network(), x) - forward(tn, x)).norm() <= 1e-13);
}

TEST_CASE("nearest linearization") {
  std::vector<TruncatedNet> pts;
  for (int k = 0; k < 3; ++k) {
    TruncatedNet t = synth::random_truncated(2, 3, 2, 0.1, k);
    t.source_point = Eigen::Vector2d(k, 0.0);
    pts.push_back(t);
  }
  CHECK(&nearest_linearization(pts, Eigen::Vector2d(1.9, 0.3)) == &pts[2]);
  CHECK(&nearest_linearization(pts, Eigen::Vector2d(0.5, 0.0)) == &pts[0]);
  CHECK_THROWS(nearest_linearization({}, Eigen::Vector2d(0, 0)));
}

}  // TEST_SUITE
