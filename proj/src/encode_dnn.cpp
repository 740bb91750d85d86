#include "net2milp/encode_dnn.hpp"

#include <cmath>
#include <stdexcept>

namespace net2milp {

namespace {

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw std::invalid_argument("encode_dnn: non-finite bound for " + what);
}

}  // namespace

EncodedModel encode_dnn(const NetworkSpec& net, const BoundSet& bounds,
                        const DnnEncodeConfig& config) {
  net.validate();
  if (!net.dense_only()) {
    for (std::size_t i = 0; i < net.layers.size(); ++i)
      if (!std::holds_alternative<DenseLayer>(net.layers[i]))
        throw std::invalid_argument("encode_dnn: layer " + std::to_string(i) + " is not dense");
  }
  if (config.activation_penalty < 0)
    throw std::invalid_argument("encode_dnn: activation penalty must be non-negative");
  const Index n0 = net.input_shape[0];
  if (config.input.lb.size() != n0 || config.input.ub.size() != n0)
    throw std::invalid_argument("encode_dnn: input mode covers " +
                                std::to_string(config.input.lb.size()) + " pixels, network has " +
                                std::to_string(n0));
  if (bounds.layers.size() != net.layers.size())
    throw std::invalid_argument("encode_dnn: bound set does not match the layer list");

  EncodedModel out;
  MilpModel& m = out.model;
  auto tag_var = [&](StageTag t) { out.tags.var_stage.push_back(t); };
  auto tag_lin = [&](StageTag t) { out.tags.linear_stage.push_back(t); };
  auto tag_ind = [&](StageTag t) { out.tags.indicator_stage.push_back(t); };

  // input pixels x_0_j
  std::vector<int> prev_ids;
  for (Index j = 0; j < n0; ++j) {
    const int id = m.add_continuous(dnn_x(0, j), config.input.lb(j), config.input.ub(j),
                                    config.input_cost);
    out.varmap.add(dnn_x(0, j), id);
    tag_var({-1, static_cast<int>(j)});
    prev_ids.push_back(id);
    out.input_ids.push_back(id);
    out.eps_names.push_back(eps_dnn(j));
  }

  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& d = std::get<DenseLayer>(net.layers[k]);
    const auto& lb = bounds.layers[k];
    const Index layer_no = static_cast<Index>(k) + 1;  // names are 1-based
    std::vector<int> ids;
    for (Index j = 0; j < d.weights.rows(); ++j) {
      const StageTag tag{static_cast<int>(k), static_cast<int>(j)};
      if (d.activation == Activation::kRelu) {
        const double xu = bounds.x_ub(k, j);
        const double su = bounds.s_ub(k, j);
        require_finite(xu, dnn_x(layer_no, j));
        require_finite(su, dnn_s(layer_no, j));
        const int x = m.add_continuous(dnn_x(layer_no, j), 0.0, xu, config.unit_cost);
        const int s = m.add_continuous(dnn_s(layer_no, j), 0.0, su, 0.0);
        const int z = m.add_binary(dnn_z(layer_no, j), config.activation_penalty);
        out.varmap.add(dnn_x(layer_no, j), x);
        out.varmap.add(dnn_s(layer_no, j), s);
        out.varmap.add(dnn_z(layer_no, j), z);
        tag_var(tag);
        tag_var(tag);
        tag_var(tag);

        // Σ w·x_prev − x + s = −b
        LinearConstraint eq;
        eq.name = "eq_" + dnn_x(layer_no, j);
        for (Index i = 0; i < d.weights.cols(); ++i)
          if (d.weights(j, i) != 0.0) eq.terms.emplace_back(prev_ids[static_cast<std::size_t>(i)], d.weights(j, i));
        eq.terms.emplace_back(x, -1.0);
        eq.terms.emplace_back(s, 1.0);
        eq.sense = Sense::kEq;
        eq.rhs = -d.bias(j);
        m.add_linear(std::move(eq));
        tag_lin(tag);

        IndicatorConstraint off;  // z=1 → x ≤ 0
        off.guard = z;
        off.active_when = 1;
        off.implied.name = "ind_x_" + dnn_x(layer_no, j);
        off.implied.terms = {{x, 1.0}};
        off.implied.rhs = 0.0;
        m.add_indicator(std::move(off));
        tag_ind(tag);

        IndicatorConstraint on;  // z=0 → s ≤ 0
        on.guard = z;
        on.active_when = 0;
        on.implied.name = "ind_s_" + dnn_s(layer_no, j);
        on.implied.terms = {{s, 1.0}};
        on.implied.rhs = 0.0;
        m.add_indicator(std::move(on));
        tag_ind(tag);

        ids.push_back(x);
      } else {
        // linear unit: x = Σ w·x_prev + b with the pre-activation interval
        require_finite(lb.pre_lb[j], dnn_x(layer_no, j));
        require_finite(lb.pre_ub[j], dnn_x(layer_no, j));
        const int x =
            m.add_continuous(dnn_x(layer_no, j), lb.pre_lb[j], lb.pre_ub[j], config.unit_cost);
        out.varmap.add(dnn_x(layer_no, j), x);
        tag_var(tag);
        LinearConstraint eq;
        eq.name = "eq_" + dnn_x(layer_no, j);
        for (Index i = 0; i < d.weights.cols(); ++i)
          if (d.weights(j, i) != 0.0) eq.terms.emplace_back(prev_ids[static_cast<std::size_t>(i)], d.weights(j, i));
        eq.terms.emplace_back(x, -1.0);
        eq.sense = Sense::kEq;
        eq.rhs = -d.bias(j);
        m.add_linear(std::move(eq));
        tag_lin(tag);
        ids.push_back(x);
      }
    }
    prev_ids = std::move(ids);
  }
  out.output_ids = prev_ids;
  return out;
}

MilpModel fix_input(const MilpModel& model, const VarMap& varmap, const Tensor& image) {
  MilpModel out = model;
  Index fixed = 0;
  for (Index j = 0;; ++j) {
    const std::string name = dnn_x(0, j);
    if (!varmap.contains(name)) break;
    ++fixed;
  }
  if (image.size() != fixed)
    throw std::invalid_argument("fix_input: image has " + std::to_string(image.size()) +
                                " pixels, model has " + std::to_string(fixed) +
                                " input variables");
  for (Index j = 0; j < fixed; ++j) {
    Variable& v = out.variable(varmap.id(dnn_x(0, j)));
    if (image[j] < v.lb || image[j] > v.ub)
      throw std::invalid_argument("fix_input: pixel " + std::to_string(j) + " = " +
                                  std::to_string(image[j]) + " outside the declared box [" +
                                  std::to_string(v.lb) + ", " + std::to_string(v.ub) + "]");
    v.lb = v.ub = image[j];
  }
  return out;
}

std::vector<std::pair<int, double>> dnn_trace_assignment(const NetworkSpec& net,
                                                         const Tensor& input,
                                                         const ActivationTrace& trace,
                                                         const VarMap& varmap) {
  std::vector<std::pair<int, double>> vals;
  for (Index j = 0; j < input.size(); ++j) vals.emplace_back(varmap.id(dnn_x(0, j)), input[j]);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& d = std::get<DenseLayer>(net.layers[k]);
    const Index layer_no = static_cast<Index>(k) + 1;
    const Tensor& post = trace.post[k];
    for (Index j = 0; j < post.size(); ++j) {
      vals.emplace_back(varmap.id(dnn_x(layer_no, j)), post[j]);
      if (d.activation == Activation::kRelu) {
        const double pre = (*trace.pre[k])[j];
        vals.emplace_back(varmap.id(dnn_s(layer_no, j)), std::max(0.0, -pre));
        // z is pinned only when the sign is strict; at pre = 0 either
        // branch satisfies the constraints
        if (pre > 0)
          vals.emplace_back(varmap.id(dnn_z(layer_no, j)), 0.0);
        else if (pre < 0)
          vals.emplace_back(varmap.id(dnn_z(layer_no, j)), 1.0);
      }
    }
  }
  return vals;
}

}  // namespace net2milp
