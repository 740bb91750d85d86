#pragma once

#include "net2milp/bounds.hpp"
#include "net2milp/encode_common.hpp"
#include "net2milp/network.hpp"

namespace net2milp {

struct DnnEncodeConfig {
  double unit_cost = 1.0;           // c_j^k on every hidden/output x
  double input_cost = 0.0;          // c_j^0 on the input pixels
  double activation_penalty = 1.0;  // γ_j^k ≥ 0 on every z
  InputMode input;                  // fixed or boxed pixels
  // A linear output layer is encoded as a plain equality without the
  // s/z pair; the ReLU split covers every other layer.
};

/// Compiles a dense ReLU network into the 0-1 MILP: per unit one equality
/// Σ w·x_prev + b = x − s, indicators z=1 → x ≤ 0 and z=0 → s ≤ 0, bounds
/// from `bounds`, objective Σ c·x + Σ γ·z.
EncodedModel encode_dnn(const NetworkSpec& net, const BoundSet& bounds,
                        const DnnEncodeConfig& config);

/// Pins every input variable to the image (lb = ub = pixel). Rejects
/// images whose pixels leave the declared input box.
MilpModel fix_input(const MilpModel& model, const VarMap& varmap, const Tensor& image);

/// (var id, value) pairs for every unit variable of a forward trace —
/// inputs, x, s (and z where the sign is strict). Used to check solver
/// output against the forward oracle.
std::vector<std::pair<int, double>> dnn_trace_assignment(const NetworkSpec& net,
                                                         const Tensor& input,
                                                         const ActivationTrace& trace,
                                                         const VarMap& varmap);

}  // namespace net2milp
