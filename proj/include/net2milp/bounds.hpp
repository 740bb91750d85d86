#pragma once

#include <string>
#include <vector>

#include "net2milp/network.hpp"

namespace net2milp {

/// Valid intervals for one layer. pre_* cover the affine pre-activation
/// (conv sums, dense sums); post_* cover the layer output. Layers without
/// an affine part (pool, flatten) carry post_* only.
struct LayerBounds {
  bool has_pre = false;
  Tensor pre_lb, pre_ub;
  Tensor post_lb, post_ub;
};

/// Per-unit bounds for a whole network plus the declared input box.
/// MILP variable bounds derive from these: for a ReLU split,
/// x ∈ [0, max(0, pre_ub)] and s ∈ [0, max(0, −pre_lb)].
struct BoundSet {
  Eigen::VectorXd input_lb, input_ub;
  std::vector<LayerBounds> layers;
  std::vector<std::string> warnings;  // per-unit tightening failures

  double x_ub(std::size_t layer, Index unit) const;
  double s_ub(std::size_t layer, Index unit) const;
};

/// Standard interval arithmetic through every layer: sign-split of the
/// weights for affine parts, max of interval ends for pooling, ReLU of the
/// interval for activations.
BoundSet interval_propagate(const NetworkSpec& net, const Eigen::VectorXd& input_lb,
                            const Eigen::VectorXd& input_ub);

enum class TightenMode { kLpRelaxation, kExactMilp };

/// Per-unit tightening: for each unit in layer order, the model truncated
/// below that unit is solved to maximize the unit's positive part and its
/// slack; the optimum replaces the upper bound when smaller. Units whose
/// subproblem fails keep their interval bound and add a warning.
BoundSet lp_tighten(const NetworkSpec& net, const Eigen::VectorXd& input_lb,
                    const Eigen::VectorXd& input_ub,
                    TightenMode mode = TightenMode::kLpRelaxation,
                    double per_unit_time_budget_s = 0.0);

std::string save_bounds(const BoundSet& bounds);
BoundSet load_bounds(const std::string& text);

}  // namespace net2milp
