#include "net2milp/adversarial.hpp"

#include <cmath>
#include <stdexcept>

#include "net2milp/encode_cnn.hpp"
#include "net2milp/encode_dnn.hpp"

namespace net2milp {

void AdversarialConfig::validate() const {
  if (margin <= 1.0) throw std::invalid_argument("adversarial: margin factor must exceed 1");
  if (eps_cap <= 0.0 || eps_cap > 1.0)
    throw std::invalid_argument("adversarial: eps cap must lie in (0, 1]");
  if (target_cost >= 0.0) throw std::invalid_argument("adversarial: target cost must be negative");
  if (other_cost < 0.0) throw std::invalid_argument("adversarial: other cost must be >= 0");
}

Index target_label(Index d, const AdversarialConfig& config) {
  if (config.rule == TargetRule::kPlusFiveModTen) {
    if (d < 0 || d > 9)
      throw std::invalid_argument("target_label: the (d+5) mod 10 rule needs 0 <= d <= 9");
    return (d + 5) % 10;
  }
  if (config.explicit_target == d)
    throw std::invalid_argument("target_label: explicit target equals the original label");
  if (config.explicit_target < 0)
    throw std::invalid_argument("target_label: explicit target not set");
  return config.explicit_target;
}

AdversarialBuild build_adversarial(const EncodedModel& encoded, const Tensor& original,
                                   Index original_label, const AdversarialConfig& config) {
  config.validate();
  const MilpModel& base = encoded.model;
  if (encoded.input_ids.empty() || encoded.output_ids.empty())
    throw std::invalid_argument("build_adversarial: model lacks input/output variable lists");
  if (original.size() != static_cast<Index>(encoded.input_ids.size()))
    throw std::invalid_argument("build_adversarial: image has " + std::to_string(original.size()) +
                                " pixels, model has " + std::to_string(encoded.input_ids.size()));

  bool boxed = false;
  for (std::size_t j = 0; j < encoded.input_ids.size(); ++j) {
    const Variable& v = base.variable(encoded.input_ids[j]);
    const double pixel = original[static_cast<Index>(j)];
    if (pixel < v.lb || pixel > v.ub)
      throw std::invalid_argument("build_adversarial: original image leaves the input box");
    boxed = boxed || v.lb < v.ub;
  }
  if (!boxed)
    throw std::invalid_argument("build_adversarial: model input is fixed; a boxed input is required");

  const Index classes = static_cast<Index>(encoded.output_ids.size());
  AdversarialBuild build;
  build.target = target_label(original_label, config);
  if (build.target >= classes)
    throw std::invalid_argument("build_adversarial: target " + std::to_string(build.target) +
                                " out of range for " + std::to_string(classes) + " classes");
  build.model = base;
  build.varmap = encoded.varmap;

  // output costs: encourage the wrong digit, optionally penalize the rest
  for (Index i = 0; i < classes; ++i)
    build.model.variable(encoded.output_ids[static_cast<std::size_t>(i)]).cost =
        i == build.target ? config.target_cost : config.other_cost;

  // per-pixel ε with −ε ≤ x⁰ − x̃⁰ ≤ ε
  for (std::size_t j = 0; j < encoded.input_ids.size(); ++j) {
    const int x = encoded.input_ids[j];
    const int eps = build.model.add_continuous(encoded.eps_names[j], 0.0, config.eps_cap, 1.0);
    build.varmap.add(encoded.eps_names[j], eps);
    build.eps_ids.push_back(eps);
    const double orig = original[static_cast<Index>(j)];

    LinearConstraint upper;  // x̃ − ε ≤ x⁰
    upper.name = "diff_hi_" + encoded.eps_names[j];
    upper.terms = {{x, 1.0}, {eps, -1.0}};
    upper.sense = Sense::kLe;
    upper.rhs = orig;
    build.model.add_linear(std::move(upper));

    LinearConstraint lower;  // −x̃ − ε ≤ −x⁰
    lower.name = "diff_lo_" + encoded.eps_names[j];
    lower.terms = {{x, -1.0}, {eps, -1.0}};
    lower.sense = Sense::kLe;
    lower.rhs = -orig;
    build.model.add_linear(std::move(lower));
  }

  // margin: x̃_target ≥ margin · x̃_j for every other class
  const int target_id = encoded.output_ids[static_cast<std::size_t>(build.target)];
  for (Index i = 0; i < classes; ++i) {
    if (i == build.target) continue;
    LinearConstraint row;
    row.name = "margin_" + std::to_string(i + 1);
    row.terms = {{encoded.output_ids[static_cast<std::size_t>(i)], config.margin},
                 {target_id, -1.0}};
    row.sense = Sense::kLe;
    row.rhs = 0.0;
    build.model.add_linear(std::move(row));
  }
  return build;
}

namespace {

AdversarialResult extract_result(const NetworkSpec& net, const EncodedModel& encoded,
                                 const AdversarialBuild& build, const SolveResult& solve,
                                 const Tensor& original) {
  AdversarialResult res;
  res.status = solve.status;
  res.target = build.target;
  res.node_count = solve.node_count;
  if (!solve.optimal()) return res;
  res.assignment = solve.assignment;

  Tensor adv(net.input_shape);
  for (std::size_t j = 0; j < encoded.input_ids.size(); ++j)
    adv[static_cast<Index>(j)] = solve.assignment[static_cast<std::size_t>(encoded.input_ids[j])];
  res.adversarial = adv;
  res.pixel_diff = Tensor(net.input_shape);
  for (Index j = 0; j < adv.size(); ++j) res.pixel_diff[j] = std::abs(adv[j] - original[j]);
  for (int eps : build.eps_ids) res.eps_total += solve.assignment[static_cast<std::size_t>(eps)];

  const Classification c = classify(net, adv);
  res.achieved_label = c.label;
  double best_other = 0.0;
  for (Index i = 0; i < c.scores.size(); ++i)
    if (i != build.target) best_other = std::max(best_other, c.scores[i]);
  res.achieved_margin = best_other > 0 ? c.scores[build.target] / best_other
                                       : std::numeric_limits<double>::infinity();
  return res;
}

}  // namespace

Verdict verify_adversarial(const NetworkSpec& net, const EncodedModel& encoded,
                           const AdversarialResult& result, const Tensor& original,
                           Index original_label, const AdversarialConfig& config) {
  Verdict verdict;
  if (result.status != SolveStatus::kOptimal) {
    verdict.failures.push_back("solver status is not optimal");
    return verdict;
  }
  const Tensor& adv = result.adversarial;
  const ActivationTrace trace = forward(net, adv);
  const Tensor& scores = trace.output();
  const Index target = result.target;

  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  if (best != target)
    verdict.failures.push_back("argmax is class " + std::to_string(best) + ", not the target " +
                               std::to_string(target));
  if (!(scores[target] > 0))
    verdict.failures.push_back("target score is not strictly positive");
  for (Index i = 0; i < scores.size(); ++i) {
    if (i == target) continue;
    if (scores[target] < config.margin * scores[i] - 1e-6) {
      verdict.failures.push_back("margin violated against class " + std::to_string(i));
      break;
    }
  }
  for (Index j = 0; j < adv.size(); ++j) {
    if (std::abs(adv[j] - original[j]) > config.eps_cap + 1e-9) {
      verdict.failures.push_back("pixel " + std::to_string(j) + " changed by more than the cap");
      break;
    }
  }

  // claimed unit activations against the oracle trace
  const auto pairs = net.dense_only()
                         ? dnn_trace_assignment(net, adv, trace, encoded.varmap)
                         : cnn_trace_assignment(net, adv, trace, encoded.varmap);
  (void)original_label;
  for (const auto& [id, want] : pairs) {
    if (encoded.model.variable(id).kind == VarKind::kBinary) continue;
    const double got = result.assignment[static_cast<std::size_t>(id)];
    if (std::abs(got - want) > 1e-6) {
      verdict.failures.push_back("solver value for " + encoded.model.variable(id).name +
                                 " deviates from the forward trace");
      break;
    }
  }
  verdict.ok = verdict.failures.empty();
  return verdict;
}

AdversarialRun run_adversarial(const NetworkSpec& net, const BoundSet& bounds,
                               const Tensor& original, Index original_label,
                               const AdversarialConfig& config, double activation_penalty,
                               const BnbConfig& solver_config) {
  AdversarialRun run;
  const Index n0 = Tensor::count(net.input_shape);
  if (net.dense_only()) {
    DnnEncodeConfig ec;
    ec.unit_cost = 1.0;
    ec.input_cost = 0.0;
    ec.activation_penalty = activation_penalty;
    ec.input = InputMode::unit_box(n0);
    run.encoded = encode_dnn(net, bounds, ec);
  } else {
    CnnEncodeConfig ec;
    ec.cost_relu_z = activation_penalty;
    ec.cost_zeta = activation_penalty;
    ec.cost_fc_z = activation_penalty;
    ec.include_biases = true;
    ec.input = InputMode::unit_box(n0);
    run.encoded = encode_cnn(net, bounds, ec);
  }
  run.build = build_adversarial(run.encoded, original, original_label, config);
  run.solve = branch_and_bound(run.build.model, solver_config);
  run.result = extract_result(net, run.encoded, run.build, run.solve, original);
  if (run.solve.optimal())
    run.verdict = verify_adversarial(net, run.encoded, run.result, original, original_label, config);
  return run;
}

}  // namespace net2milp
