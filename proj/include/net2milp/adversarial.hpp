#pragma once

#include <string>
#include <vector>

#include "net2milp/bounds.hpp"
#include "net2milp/branch_and_bound.hpp"
#include "net2milp/encode_common.hpp"
#include "net2milp/network.hpp"

namespace net2milp {

enum class TargetRule { kPlusFiveModTen, kExplicit };

struct AdversarialConfig {
  double margin = 1.2;       // required activation ratio, > 1
  double eps_cap = 0.2;      // per-pixel change cap, in (0, 1]
  TargetRule rule = TargetRule::kPlusFiveModTen;
  Index explicit_target = -1;
  double target_cost = -1.0;  // cost on the target output unit, < 0
  double other_cost = 0.0;    // cost on the remaining output units, ≥ 0

  void validate() const;
};

/// (d+5) mod 10 for the digit rule (0 ≤ d ≤ 9); the explicit label
/// otherwise. The target never equals d.
Index target_label(Index d, const AdversarialConfig& config);

/// The encoded model with the adversarial overlay: per-pixel ε variables
/// with −ε ≤ x⁰ − x̃⁰ ≤ ε and 0 ≤ ε ≤ ε_cap, margin rows
/// x̃_target ≥ margin·x̃_j for j ≠ target, output costs replaced by the
/// negative/positive pattern, Σε added to the objective. The base model
/// must carry a boxed (not fixed) input.
struct AdversarialBuild {
  MilpModel model;
  VarMap varmap;
  Index target = -1;
  std::vector<int> eps_ids;
};

AdversarialBuild build_adversarial(const EncodedModel& encoded, const Tensor& original,
                                   Index original_label, const AdversarialConfig& config);

struct AdversarialResult {
  Tensor adversarial;      // x̃⁰, input extents
  Index achieved_label = -1;
  double achieved_margin = 0.0;  // target score / best other score
  Tensor pixel_diff;       // |x̃⁰ − x⁰|
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> assignment;  // full solver point
  Index target = -1;
  double eps_total = 0.0;
  long node_count = 0;
};

struct Verdict {
  bool ok = false;
  std::vector<std::string> failures;
};

/// Forward-passes the adversarial image and checks: argmax equals the
/// target, the margin holds (tolerance 1e-6) with a strictly positive
/// target score, pixel caps are respected, and the solver's claimed unit
/// activations match the trace within 1e-6.
Verdict verify_adversarial(const NetworkSpec& net, const EncodedModel& encoded,
                           const AdversarialResult& result, const Tensor& original,
                           Index original_label, const AdversarialConfig& config);

/// encode (boxed input) → overlay → solve → extract. Works for dense
/// networks and block CNNs; the caller computes the bounds upstream and
/// picks the tightening mode there.
struct AdversarialRun {
  EncodedModel encoded;
  AdversarialBuild build;
  SolveResult solve;
  AdversarialResult result;
  Verdict verdict;
};

AdversarialRun run_adversarial(const NetworkSpec& net, const BoundSet& bounds,
                               const Tensor& original, Index original_label,
                               const AdversarialConfig& config, double activation_penalty = 0.0,
                               const BnbConfig& solver_config = {});

}  // namespace net2milp
