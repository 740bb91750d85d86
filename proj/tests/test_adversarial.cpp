#include <doctest.h>

#include "net2milp/adversarial.hpp"
#include "net2milp/encode_cnn.hpp"
#include "net2milp/encode_dnn.hpp"
#include "support/oracles.hpp"

using namespace net2milp;

namespace {

// 2-class net on one pixel: class 0 score = relu(1 − x), class 1 = relu(x);
// flipping the pixel flips the class, and the needed perturbation is known
// in closed form.
NetworkSpec seesaw_net() {
  NetworkSpec net;
  net.input_shape = {1};
  net.class_count = 2;
  DenseLayer d;
  d.weights = Eigen::MatrixXd(2, 1);
  d.weights << -1.0, 1.0;
  d.bias = Eigen::VectorXd(2);
  d.bias << 1.0, 0.0;
  net.layers.emplace_back(std::move(d));
  net.validate();
  return net;
}

BoundSet unit_bounds(const NetworkSpec& net) {
  const Index n0 = Tensor::count(net.input_shape);
  return interval_propagate(net, Eigen::VectorXd::Zero(n0), Eigen::VectorXd::Ones(n0));
}

}  // namespace

TEST_CASE("target_label: the (d+5) mod 10 rule and the explicit rule") {
  AdversarialConfig cfg;
  CHECK(target_label(0, cfg) == 5);
  CHECK(target_label(7, cfg) == 2);
  CHECK(target_label(3, cfg) == 8);
  CHECK_THROWS(target_label(12, cfg));

  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 1;
  CHECK(target_label(0, cfg) == 1);
  CHECK_THROWS(target_label(1, cfg));  // target equals the label
}

TEST_CASE("build_adversarial census: n0 eps vars, 2·n0 difference rows, classes-1 margins") {
  Rng rng = Rng::rooted(701);
  const NetworkSpec net = oracles::random_dense_net(4, {5}, 3, rng);
  DnnEncodeConfig ec;
  ec.input = InputMode::unit_box(4);
  const EncodedModel em = encode_dnn(net, unit_bounds(net), ec);

  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 2;
  const Tensor img = oracles::random_tensor({4}, rng, 0.0, 1.0);
  const AdversarialBuild build = build_adversarial(em, img, 0, cfg);

  CHECK(build.eps_ids.size() == 4);
  CHECK(build.model.variables().size() == em.model.variables().size() + 4);
  CHECK(build.model.linear_constraints().size() ==
        em.model.linear_constraints().size() + 2 * 4 + (3 - 1));
  // output costs replaced by the negative/positive pattern
  CHECK(build.model.variable(em.output_ids[2]).cost == -1.0);
  CHECK(build.model.variable(em.output_ids[0]).cost == 0.0);
}

TEST_CASE("build_adversarial rejects fixed-input models and out-of-box images") {
  const NetworkSpec net = seesaw_net();
  Tensor img({1});
  img[0] = 0.9;

  DnnEncodeConfig fixed_cfg;
  fixed_cfg.input = InputMode::fixed(img);
  const EncodedModel fixed_em = encode_dnn(net, unit_bounds(net), fixed_cfg);
  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 0;
  CHECK_THROWS_WITH_AS(build_adversarial(fixed_em, img, 1, cfg), doctest::Contains("boxed"),
                       std::invalid_argument);

  DnnEncodeConfig boxed_cfg;
  boxed_cfg.input = InputMode::unit_box(1);
  const EncodedModel em = encode_dnn(net, unit_bounds(net), boxed_cfg);
  Tensor outside({1});
  outside[0] = 1.5;
  CHECK_THROWS(build_adversarial(em, outside, 1, cfg));
}

TEST_CASE("one-pixel seesaw: optimal perturbation matches the 1-D closed form") {
  // x = 0.9 classifies as 1. The margin constraint for target 0 demands
  // 1 − x̃ ≥ 1.2·x̃, i.e. x̃ ≤ 1/2.2 ≈ 0.4545, so the change is at least
  // 0.9 − 1/2.2 ≈ 0.4455: infeasible at the 0.2 cap, and with cap 0.5 the
  // distance-dominated optimum sits exactly on the margin boundary.
  const NetworkSpec net = seesaw_net();
  Tensor img({1});
  img[0] = 0.9;
  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 0;

  {
    const AdversarialRun run = run_adversarial(net, unit_bounds(net), img, 1, cfg);
    CHECK(run.solve.status == SolveStatus::kInfeasible);  // cap 0.2 too tight
  }
  {
    AdversarialConfig wide = cfg;
    wide.eps_cap = 0.5;
    wide.target_cost = -1e-9;  // keep Σε the deciding term
    const AdversarialRun run = run_adversarial(net, unit_bounds(net), img, 1, wide);
    REQUIRE(run.solve.status == SolveStatus::kOptimal);
    CHECK(run.verdict.ok);
    const double want = 0.9 - 1.0 / 2.2;
    CHECK(run.result.eps_total == doctest::Approx(want).epsilon(1e-6));
    CHECK(run.result.adversarial[0] == doctest::Approx(1.0 / 2.2).epsilon(1e-6));
    // Σε equals the L1 distance at optimality
    CHECK(run.result.eps_total ==
          doctest::Approx(run.result.pixel_diff.data().sum()).epsilon(1e-9));
  }
  {
    // default costs still give a verified adversarial
    AdversarialConfig wide = cfg;
    wide.eps_cap = 0.5;
    const AdversarialRun run = run_adversarial(net, unit_bounds(net), img, 1, wide);
    REQUIRE(run.solve.status == SolveStatus::kOptimal);
    CHECK(run.verdict.ok);
  }
}

TEST_CASE("eps_cap 0 is rejected, tiny caps give a certificate") {
  const NetworkSpec net = seesaw_net();
  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 0;
  cfg.eps_cap = 0.0;
  CHECK_THROWS(cfg.validate());

  cfg.eps_cap = 1e-4;  // far below the needed 0.4455 change
  Tensor img({1});
  img[0] = 0.9;
  const AdversarialRun run = run_adversarial(net, unit_bounds(net), img, 1, cfg);
  CHECK(run.solve.status == SolveStatus::kInfeasible);
}

TEST_CASE("verify_adversarial flags corrupted results") {
  const NetworkSpec net = seesaw_net();
  Tensor img({1});
  img[0] = 0.9;
  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 0;
  cfg.eps_cap = 0.5;
  AdversarialRun run = run_adversarial(net, unit_bounds(net), img, 1, cfg);
  REQUIRE(run.verdict.ok);

  // push one pixel beyond the cap
  AdversarialResult corrupted = run.result;
  corrupted.adversarial[0] = img[0] - cfg.eps_cap - 0.05;
  const Verdict v = verify_adversarial(net, run.encoded, corrupted, img, 1, cfg);
  CHECK_FALSE(v.ok);
  bool cap_reason = false;
  for (const auto& f : v.failures) cap_reason |= f.find("cap") != std::string::npos;
  CHECK(cap_reason);
}

TEST_CASE("margin exactly at the tolerance boundary fails the verdict") {
  // two fixed outputs via weights on one pixel: target = 1.2·other − δ
  NetworkSpec net;
  net.input_shape = {1};
  net.class_count = 2;
  DenseLayer d;
  d.weights = Eigen::MatrixXd::Zero(2, 1);
  d.bias = Eigen::VectorXd(2);
  const double other = 0.5;
  d.bias << other, 1.2 * other - 1e-3;  // margin misses by 1e-3 > 1e-6
  net.layers.emplace_back(std::move(d));
  net.validate();

  Tensor img({1});
  img[0] = 0.5;
  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 1;

  DnnEncodeConfig ec;
  ec.input = InputMode::unit_box(1);
  const EncodedModel em = encode_dnn(net, unit_bounds(net), ec);
  AdversarialResult fake;
  fake.status = SolveStatus::kOptimal;
  fake.target = 1;
  fake.adversarial = img;
  fake.pixel_diff = Tensor({1});
  const ActivationTrace trace = forward(net, img);
  fake.assignment.assign(em.model.variables().size(), 0.0);
  for (const auto& [id, want] : dnn_trace_assignment(net, img, trace, em.varmap))
    fake.assignment[static_cast<std::size_t>(id)] = want;
  const Verdict v = verify_adversarial(net, em, fake, img, 0, cfg);
  CHECK_FALSE(v.ok);
  bool margin_reason = false;
  for (const auto& f : v.failures) margin_reason |= f.find("margin") != std::string::npos;
  CHECK(margin_reason);
}

TEST_CASE("cnn adversarial overlay: disjoint-window seesaw has a known optimum") {
  // 4×4 input, one 2×2 mean kernel with stride 2 (four disjoint windows),
  // pool 2×2 over the four cells, then a seesaw head on the pooled value:
  // ψ1 = relu(1 − p), ψ2 = relu(p). All-0.9 input classifies as 1; target 0
  // needs every window mean at 1/2.2, so Σε = 4·(3.6 − 4/2.2)/... per
  // window the sum drops from 3.6 to 4/2.2, total 4·(3.6 − 4/2.2).
  NetworkSpec net;
  net.input_shape = {4, 4};
  net.class_count = 2;
  ConvLayer conv;
  Tensor k({2, 2});
  k.data().setConstant(0.25);
  conv.kernels.push_back(k);
  conv.bias = {0.0};
  conv.params = {2, 2, 0};
  net.layers.emplace_back(std::move(conv));
  net.layers.emplace_back(MaxPoolLayer{2, 2});
  net.layers.emplace_back(FlattenLayer{});
  DenseLayer fc;
  fc.weights = Eigen::MatrixXd(2, 1);
  fc.weights << -1.0, 1.0;
  fc.bias = Eigen::VectorXd(2);
  fc.bias << 1.0, 0.0;
  net.layers.emplace_back(std::move(fc));
  DenseLayer head;
  head.weights = Eigen::MatrixXd::Identity(2, 2);
  head.bias = Eigen::VectorXd::Zero(2);
  net.layers.emplace_back(std::move(head));
  net.validate();

  Tensor img({4, 4});
  img.data().setConstant(0.9);
  REQUIRE(classify(net, img).label == 1);

  AdversarialConfig cfg;
  cfg.rule = TargetRule::kExplicit;
  cfg.explicit_target = 0;
  cfg.eps_cap = 0.5;

  // with the model's default unit costs the optimum need not be the
  // distance optimum, but it must still verify
  const AdversarialRun run = run_adversarial(net, unit_bounds(net), img, 1, cfg);
  REQUIRE(run.solve.status == SolveStatus::kOptimal);
  CHECK(run.verdict.ok);
  CHECK(run.build.varmap.contains("eps_1_1_1"));
  CHECK(run.build.varmap.contains("eps_1_4_4"));

  // pure-distance objective: unit costs zeroed, so Σε is decisive and the
  // closed form applies: every window sum drops from 4·0.9 to 4/2.2
  CnnEncodeConfig ec;
  ec.cost_maps = ec.cost_conv = ec.cost_relu = ec.cost_relu_z = 0.0;
  ec.cost_zeta = ec.cost_fc = ec.cost_fc_z = ec.cost_output = 0.0;
  ec.include_biases = true;
  ec.input = InputMode::unit_box(16);
  AdversarialConfig pure = cfg;
  pure.target_cost = -1e-9;
  const EncodedModel em = encode_cnn(net, unit_bounds(net), ec);
  const AdversarialBuild build = build_adversarial(em, img, 1, pure);
  const SolveResult r = branch_and_bound(build.model);
  REQUIRE(r.status == SolveStatus::kOptimal);
  double eps_total = 0;
  for (int id : build.eps_ids) eps_total += r.assignment[static_cast<std::size_t>(id)];
  const double want = 4.0 * (3.6 - 4.0 / 2.2);
  CHECK(eps_total == doctest::Approx(want).epsilon(1e-5));

  // the solved image misclassifies under the forward oracle
  Tensor adv({4, 4});
  for (std::size_t j = 0; j < em.input_ids.size(); ++j)
    adv[static_cast<Index>(j)] = r.assignment[static_cast<std::size_t>(em.input_ids[j])];
  CHECK(classify(net, adv).label == 0);
}

TEST_CASE("enlarging eps_cap never increases the optimal distance") {
  // pure-distance objective: unit costs off so Σε is the whole objective
  const NetworkSpec net = seesaw_net();
  Tensor img({1});
  img[0] = 0.8;
  double prev = kInf;
  for (double cap : {0.45, 0.6, 0.9}) {
    AdversarialConfig cfg;
    cfg.rule = TargetRule::kExplicit;
    cfg.explicit_target = 0;
    cfg.eps_cap = cap;
    DnnEncodeConfig ec;
    ec.unit_cost = 0.0;
    ec.activation_penalty = 0.0;
    ec.input = InputMode::unit_box(1);
    cfg.target_cost = -1e-9;  // distance dominates
    const EncodedModel em = encode_dnn(net, unit_bounds(net), ec);
    const AdversarialBuild build = build_adversarial(em, img, 1, cfg);
    const SolveResult r = branch_and_bound(build.model);
    REQUIRE(r.status == SolveStatus::kOptimal);
    double eps_sum = 0;
    for (int id : build.eps_ids) eps_sum += r.assignment[static_cast<std::size_t>(id)];
    CHECK(eps_sum <= prev + 1e-9);
    prev = eps_sum;
  }
}
