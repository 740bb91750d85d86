#include <doctest.h>

#include "net2milp/branch_and_bound.hpp"
#include "net2milp/encode_dnn.hpp"
#include "support/oracles.hpp"

using namespace net2milp;

namespace {

NetworkSpec one_unit(double w, double b) {
  NetworkSpec net;
  net.input_shape = {1};
  net.class_count = 1;
  DenseLayer d;
  d.weights = Eigen::MatrixXd::Constant(1, 1, w);
  d.bias = Eigen::VectorXd::Constant(1, b);
  net.layers.emplace_back(std::move(d));
  return net;
}

BoundSet box_bounds(const NetworkSpec& net, double lo, double hi) {
  const Index n0 = Tensor::count(net.input_shape);
  return interval_propagate(net, Eigen::VectorXd::Constant(n0, lo),
                            Eigen::VectorXd::Constant(n0, hi));
}

}  // namespace

TEST_CASE("encode_dnn: 1 unit, w=1, b=0, input fixed at 2 forces x=2, s=0, z=0") {
  const NetworkSpec net = one_unit(1.0, 0.0);
  const BoundSet bounds = box_bounds(net, -3.0, 3.0);
  DnnEncodeConfig cfg;
  Tensor img({1});
  img[0] = 2.0;
  cfg.input = InputMode::fixed(img);
  const EncodedModel em = encode_dnn(net, bounds, cfg);

  const SolveResult r = branch_and_bound(em.model);
  REQUIRE(r.status == SolveStatus::kOptimal);
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("x_1_1"))] == doctest::Approx(2.0));
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("s_1_1"))] == doctest::Approx(0.0));
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("z_1_1"))] == 0.0);
}

TEST_CASE("encode_dnn: same unit with input fixed at -2 forces x=0, s=2, z=1") {
  const NetworkSpec net = one_unit(1.0, 0.0);
  const BoundSet bounds = box_bounds(net, -3.0, 3.0);
  DnnEncodeConfig cfg;
  Tensor img({1});
  img[0] = -2.0;
  cfg.input = InputMode::fixed(img);
  const EncodedModel em = encode_dnn(net, bounds, cfg);
  const SolveResult r = branch_and_bound(em.model);
  REQUIRE(r.status == SolveStatus::kOptimal);
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("x_1_1"))] == doctest::Approx(0.0));
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("s_1_1"))] == doctest::Approx(2.0));
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("z_1_1"))] == 1.0);
  // γ = 1 and every other term zero at the optimum
  CHECK(r.objective == doctest::Approx(1.0));
}

TEST_CASE("encode_dnn census: n0 + 3·Σ n_k variables, Σ n_k equalities, 2·Σ n_k indicators") {
  Rng rng = Rng::rooted(401);
  const NetworkSpec net = oracles::random_dense_net(4, {6, 5}, 3, rng);
  const BoundSet bounds = box_bounds(net, 0.0, 1.0);
  DnnEncodeConfig cfg;
  cfg.input = InputMode::unit_box(4);
  const EncodedModel em = encode_dnn(net, bounds, cfg);
  const Index sum_nk = 6 + 5 + 3;
  CHECK(em.model.variables().size() == static_cast<std::size_t>(4 + 3 * sum_nk));
  CHECK(em.model.linear_constraints().size() == static_cast<std::size_t>(sum_nk));
  CHECK(em.model.indicator_constraints().size() == static_cast<std::size_t>(2 * sum_nk));
}

TEST_CASE("encode_dnn: solver x-block equals the forward trace on random nets") {
  Rng rng = Rng::rooted(403);
  for (int trial = 0; trial < 8; ++trial) {
    const NetworkSpec net = oracles::random_dense_net(3, {4, 4}, 2, rng);
    const Tensor img = oracles::random_tensor({3}, rng, 0.0, 1.0);
    const BoundSet bounds = box_bounds(net, 0.0, 1.0);
    DnnEncodeConfig cfg;
    cfg.input = InputMode::fixed(img);
    const EncodedModel em = encode_dnn(net, bounds, cfg);
    const SolveResult r = branch_and_bound(em.model);
    REQUIRE(r.status == SolveStatus::kOptimal);

    const ActivationTrace trace = forward(net, img);
    for (const auto& [id, want] : dnn_trace_assignment(net, img, trace, em.varmap))
      CHECK(std::abs(r.assignment[static_cast<std::size_t>(id)] - want) < 1e-6);
    CHECK(evaluate(em.model, r.assignment).feasible);
  }
}

TEST_CASE("encode_dnn: γ > 0 keeps z=0 on strictly active units") {
  Rng rng = Rng::rooted(407);
  const NetworkSpec net = oracles::random_dense_net(3, {5}, 2, rng);
  const Tensor img = oracles::random_tensor({3}, rng, 0.0, 1.0);
  const BoundSet bounds = box_bounds(net, 0.0, 1.0);
  DnnEncodeConfig cfg;
  cfg.input = InputMode::fixed(img);
  const EncodedModel em = encode_dnn(net, bounds, cfg);
  const SolveResult r = branch_and_bound(em.model);
  REQUIRE(r.status == SolveStatus::kOptimal);
  const ActivationTrace trace = forward(net, img);
  for (std::size_t k = 0; k < net.layers.size(); ++k)
    for (Index j = 0; j < trace.post[k].size(); ++j)
      if ((*trace.pre[k])[j] > 1e-9)
        CHECK(r.assignment[static_cast<std::size_t>(
                  em.varmap.id(dnn_z(static_cast<Index>(k) + 1, j)))] == 0.0);
}

TEST_CASE("encode_dnn rejects non-dense layers") {
  NetworkSpec net;
  net.input_shape = {2, 2};
  net.class_count = 1;
  net.layers.emplace_back(FlattenLayer{});
  DenseLayer d;
  d.weights = Eigen::MatrixXd::Zero(1, 4);
  d.bias = Eigen::VectorXd::Zero(1);
  net.layers.emplace_back(std::move(d));
  const BoundSet bounds = box_bounds(net, 0.0, 1.0);
  DnnEncodeConfig cfg;
  cfg.input = InputMode::unit_box(4);
  CHECK_THROWS_WITH_AS(encode_dnn(net, bounds, cfg), doctest::Contains("layer 0"),
                       std::invalid_argument);
}

TEST_CASE("fix_input pins pixels and rejects out-of-box values") {
  const NetworkSpec net = one_unit(1.0, 0.5);
  const BoundSet bounds = box_bounds(net, 0.0, 1.0);
  DnnEncodeConfig cfg;
  cfg.input = InputMode::unit_box(1);
  const EncodedModel em = encode_dnn(net, bounds, cfg);

  Tensor zero({1});
  const MilpModel fixed = fix_input(em.model, em.varmap, zero);
  const Variable& v = fixed.variable(em.varmap.id("x_0_1"));
  CHECK(v.lb == 0.0);
  CHECK(v.ub == 0.0);

  Tensor outside({1});
  outside[0] = 2.0;
  CHECK_THROWS(fix_input(em.model, em.varmap, outside));

  Tensor wrong_extent({2});
  CHECK_THROWS(fix_input(em.model, em.varmap, wrong_extent));

  // fixed model solve reproduces the forward value
  const SolveResult r = branch_and_bound(fixed);
  REQUIRE(r.status == SolveStatus::kOptimal);
  CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id("x_1_1"))] ==
        doctest::Approx(forward(net, zero).output()[0]));
}

TEST_CASE("encode_dnn: linear output head is a plain equality without s/z") {
  Rng rng = Rng::rooted(409);
  NetworkSpec net = oracles::random_dense_net(3, {4}, 2, rng);
  std::get<DenseLayer>(net.layers.back()).activation = Activation::kLinear;
  const BoundSet bounds = box_bounds(net, 0.0, 1.0);
  DnnEncodeConfig cfg;
  const Tensor img = oracles::random_tensor({3}, rng, 0.0, 1.0);
  cfg.input = InputMode::fixed(img);
  const EncodedModel em = encode_dnn(net, bounds, cfg);
  CHECK_FALSE(em.varmap.contains("s_2_1"));
  CHECK_FALSE(em.varmap.contains("z_2_1"));

  const SolveResult r = branch_and_bound(em.model);
  REQUIRE(r.status == SolveStatus::kOptimal);
  const Tensor out = forward(net, img).output();
  for (Index j = 0; j < 2; ++j)
    CHECK(r.assignment[static_cast<std::size_t>(em.varmap.id(dnn_x(2, j)))] ==
          doctest::Approx(out[j]).epsilon(1e-9));
}
