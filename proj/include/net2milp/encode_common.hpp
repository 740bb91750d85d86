#pragma once

#include <Eigen/Dense>

#include <vector>

#include "net2milp/milp.hpp"
#include "net2milp/tensor.hpp"
#include "net2milp/varmap.hpp"

namespace net2milp {

/// Input variables are either pinned to given values or ranged over a
/// per-pixel box. Fixed inputs are the box with lb = ub.
struct InputMode {
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  static InputMode fixed(const Tensor& values) {
    InputMode m;
    m.lb = values.data();
    m.ub = values.data();
    return m;
  }
  static InputMode boxed(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    InputMode m;
    m.lb = std::move(lo);
    m.ub = std::move(hi);
    return m;
  }
  static InputMode unit_box(Index n) {
    return boxed(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n));
  }
  bool is_fixed() const { return lb == ub; }
};

/// (layer ordinal, unit ordinal) owner of each variable/constraint. Layer
/// -1 marks input variables. Used to truncate a model below one unit:
/// keep layer < L, the unit (L, u) itself, and the inputs.
struct StageTag {
  int layer = -1;
  int unit = -1;
};

struct StageTags {
  std::vector<StageTag> var_stage;
  std::vector<StageTag> linear_stage;
  std::vector<StageTag> indicator_stage;
};

struct EncodedModel {
  MilpModel model;
  VarMap varmap;
  StageTags tags;
  std::vector<int> input_ids;          // x̃⁰ variables in pixel order
  std::vector<int> output_ids;         // final-layer unit variables in class order
  std::vector<std::string> eps_names;  // canonical ε name per pixel
};

}  // namespace net2milp
