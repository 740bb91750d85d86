#include "net2milp/encode_cnn.hpp"

#include <cmath>
#include <stdexcept>

namespace net2milp {

BlockDims BlockDims::compute(Index alpha, Index m, Index h, Index w, const ConvParams& conv,
                             Index pool_size, Index pool_stride) {
  conv.validate_for(h, w);
  BlockDims d;
  d.alpha = alpha;
  d.maps = m * alpha;
  d.h = h;
  d.w = w;
  d.ht = conv.out_extent(h);
  d.wt = conv.out_extent(w);
  if (pool_stride > pool_size || (d.ht - pool_size) % pool_stride != 0 ||
      (d.wt - pool_size) % pool_stride != 0)
    throw std::invalid_argument("BlockDims: pool (n - f) mod S != 0");
  d.htt = (d.ht - pool_size) / pool_stride + 1;
  d.wtt = (d.wt - pool_size) / pool_stride + 1;
  return d;
}

CnnShape validate_cnn_shape(const NetworkSpec& net) {
  net.validate();
  CnnShape shape;
  std::size_t i = 0;
  const auto reject = [](std::size_t idx, const std::string& why) {
    throw std::invalid_argument("encode_cnn: layer " + std::to_string(idx) + ": " + why);
  };
  while (i < net.layers.size() && std::holds_alternative<ConvLayer>(net.layers[i])) {
    if (i + 1 >= net.layers.size() || !std::holds_alternative<MaxPoolLayer>(net.layers[i + 1]))
      reject(i + 1, "every conv layer must be followed by a max-pool layer");
    ++shape.blocks;
    i += 2;
  }
  if (shape.blocks == 0) reject(0, "expected a conv layer first");
  if (i >= net.layers.size() || !std::holds_alternative<FlattenLayer>(net.layers[i]))
    reject(i, "expected flatten after the last block");
  shape.flatten_idx = i++;
  if (i >= net.layers.size() || !std::holds_alternative<DenseLayer>(net.layers[i]))
    reject(i, "expected a dense layer after flatten");
  if (std::get<DenseLayer>(net.layers[i]).activation != Activation::kRelu)
    reject(i, "fully-connected layer must use relu");
  shape.fc_idx = i++;
  if (i >= net.layers.size() || !std::holds_alternative<DenseLayer>(net.layers[i]))
    reject(i, "expected a dense output layer");
  if (std::get<DenseLayer>(net.layers[i]).activation != Activation::kRelu)
    reject(i, "the output layer is encoded with relu");
  shape.out_idx = i++;
  if (i != net.layers.size()) reject(i, "unexpected trailing layer");
  return shape;
}

CnnEncoder::CnnEncoder(const NetworkSpec& net, const BoundSet& bounds,
                       const CnnEncodeConfig& config)
    : net_(net), bounds_(bounds), config_(config) {
  const CnnShape shape = validate_cnn_shape(net);
  blocks_ = shape.blocks;
  auto in = as_stack_shape_of(net.input_shape);
  Index alpha = in[0], h = in[1], w = in[2];
  for (Index c = 0; c < blocks_; ++c) {
    const auto& conv = std::get<ConvLayer>(net.layers[static_cast<std::size_t>(2 * c)]);
    const auto& pool = std::get<MaxPoolLayer>(net.layers[static_cast<std::size_t>(2 * c + 1)]);
    dims_.push_back(BlockDims::compute(alpha, static_cast<Index>(conv.kernels.size()), h, w,
                                       conv.params, pool.pool_size, pool.stride));
    alpha = dims_.back().maps;
    h = dims_.back().htt;
    w = dims_.back().wtt;
  }
}

std::vector<Index> CnnEncoder::as_stack_shape_of(const std::vector<Index>& s) {
  if (s.size() == 2) return {1, s[0], s[1]};
  if (s.size() == 3) return s;
  throw std::invalid_argument("encode_cnn: input shape must be a map stack");
}

std::vector<int> CnnEncoder::encode_input() {
  const BlockDims& d = dims_[0];
  if (config_.input.lb.size() != d.alpha * d.h * d.w)
    throw std::invalid_argument("encode_cnn: input mode covers " +
                                std::to_string(config_.input.lb.size()) + " pixels, network has " +
                                std::to_string(d.alpha * d.h * d.w));
  std::vector<int> ids;
  Index flat = 0;
  for (Index beta = 0; beta < d.alpha; ++beta)
    for (Index i = 0; i < d.h; ++i)
      for (Index j = 0; j < d.w; ++j, ++flat) {
        const std::string name = cnn_a(1, beta, i, j);
        const int id = em_.model.add_continuous(name, config_.input.lb(flat),
                                                config_.input.ub(flat), config_.cost_maps);
        em_.varmap.add(name, id);
        em_.tags.var_stage.push_back({-1, static_cast<int>(flat)});
        ids.push_back(id);
        em_.input_ids.push_back(id);
        em_.eps_names.push_back(eps_cnn(beta, i, j));
      }
  return ids;
}

std::vector<int> CnnEncoder::encode_conv_block(const std::vector<int>& a_ids,
                                               std::size_t layer_idx, Index block) {
  const auto& conv = std::get<ConvLayer>(net_.layers[layer_idx]);
  const auto& lb = bounds_.layers[layer_idx];
  const BlockDims& d = dims_[static_cast<std::size_t>(block - 1)];
  const Index m = static_cast<Index>(conv.kernels.size());
  const Index f = conv.params.kernel_size, S = conv.params.stride, P = conv.params.padding;

  std::vector<int> b_ids(static_cast<std::size_t>(d.maps * d.ht * d.wt), -1);
  for (Index gamma = 0; gamma < m; ++gamma)
    for (Index beta = 0; beta < d.alpha; ++beta) {
      const Index delta = beta + gamma * d.alpha;
      for (Index r = 0; r < d.ht; ++r)
        for (Index col = 0; col < d.wt; ++col) {
          const Index flat = (delta * d.ht + r) * d.wt + col;
          const StageTag tag{static_cast<int>(layer_idx), static_cast<int>(flat)};
          const std::string name = cnn_b(block, delta, r, col);
          const int b = em_.model.add_continuous(name, lb.pre_lb[flat], lb.pre_ub[flat],
                                                 config_.cost_conv);
          em_.varmap.add(name, b);
          em_.tags.var_stage.push_back(tag);
          b_ids[static_cast<std::size_t>(flat)] = b;

          LinearConstraint eq;
          eq.name = "conv_" + name;
          for (Index i = 0; i < f; ++i)
            for (Index j = 0; j < f; ++j) {
              const Index y = r * S + i - P;
              const Index x = col * S + j - P;
              if (y < 0 || y >= d.h || x < 0 || x >= d.w) continue;  // zero padding
              const double k = conv.kernels[static_cast<std::size_t>(gamma)](i, j);
              if (k == 0.0) continue;
              const Index src = (beta * d.h + y) * d.w + x;
              eq.terms.emplace_back(a_ids[static_cast<std::size_t>(src)], k);
            }
          eq.terms.emplace_back(b, -1.0);
          eq.sense = Sense::kEq;
          eq.rhs = config_.include_biases ? -conv.bias[static_cast<std::size_t>(gamma)] : 0.0;
          em_.model.add_linear(std::move(eq));
          em_.tags.linear_stage.push_back(tag);
        }
    }
  return b_ids;
}

std::vector<int> CnnEncoder::encode_relu_block(const std::vector<int>& b_ids,
                                               std::size_t layer_idx, Index block) {
  const auto& lb = bounds_.layers[layer_idx];
  const BlockDims& d = dims_[static_cast<std::size_t>(block - 1)];
  std::vector<int> bhat_ids(b_ids.size(), -1);
  for (Index delta = 0; delta < d.maps; ++delta)
    for (Index r = 0; r < d.ht; ++r)
      for (Index col = 0; col < d.wt; ++col) {
        const Index flat = (delta * d.ht + r) * d.wt + col;
        const StageTag tag{static_cast<int>(layer_idx), static_cast<int>(flat)};
        const double xu = std::max(0.0, lb.pre_ub[flat]);
        const double su = std::max(0.0, -lb.pre_lb[flat]);
        if (!std::isfinite(xu) || !std::isfinite(su))
          throw std::invalid_argument("encode_cnn: missing finite bound for " +
                                      cnn_bhat(block, delta, r, col));
        const int bh = em_.model.add_continuous(cnn_bhat(block, delta, r, col), 0.0, xu,
                                                config_.cost_relu);
        const int s =
            em_.model.add_continuous(cnn_s(block, delta, r, col), 0.0, su, 0.0);
        const int z = em_.model.add_binary(cnn_z(block, delta, r, col), config_.cost_relu_z);
        em_.varmap.add(cnn_bhat(block, delta, r, col), bh);
        em_.varmap.add(cnn_s(block, delta, r, col), s);
        em_.varmap.add(cnn_z(block, delta, r, col), z);
        em_.tags.var_stage.push_back(tag);
        em_.tags.var_stage.push_back(tag);
        em_.tags.var_stage.push_back(tag);
        bhat_ids[static_cast<std::size_t>(flat)] = bh;

        LinearConstraint eq;  // B − B̂ + s = 0
        eq.name = "relu_" + cnn_b(block, delta, r, col);
        eq.terms = {{b_ids[static_cast<std::size_t>(flat)], 1.0}, {bh, -1.0}, {s, 1.0}};
        eq.sense = Sense::kEq;
        eq.rhs = 0.0;
        em_.model.add_linear(std::move(eq));
        em_.tags.linear_stage.push_back(tag);

        IndicatorConstraint off;
        off.guard = z;
        off.active_when = 1;
        off.implied.name = "ind_bh_" + cnn_bhat(block, delta, r, col);
        off.implied.terms = {{bh, 1.0}};
        em_.model.add_indicator(std::move(off));
        em_.tags.indicator_stage.push_back(tag);

        IndicatorConstraint on;
        on.guard = z;
        on.active_when = 0;
        on.implied.name = "ind_s_" + cnn_s(block, delta, r, col);
        on.implied.terms = {{s, 1.0}};
        em_.model.add_indicator(std::move(on));
        em_.tags.indicator_stage.push_back(tag);
      }
  return bhat_ids;
}

std::vector<int> CnnEncoder::encode_maxpool_block(const std::vector<int>& bhat_ids,
                                                  std::size_t layer_idx, Index block) {
  const auto& pool = std::get<MaxPoolLayer>(net_.layers[layer_idx]);
  const auto& lb = bounds_.layers[layer_idx];
  const BlockDims& d = dims_[static_cast<std::size_t>(block - 1)];
  const Index fs = pool.pool_size, st = pool.stride;
  const double next_cost = block < blocks_ ? config_.cost_maps : 0.0;

  std::vector<int> a_ids(static_cast<std::size_t>(d.maps * d.htt * d.wtt), -1);
  for (Index delta = 0; delta < d.maps; ++delta)
    for (Index r = 0; r < d.htt; ++r)
      for (Index col = 0; col < d.wtt; ++col) {
        const Index flat = (delta * d.htt + r) * d.wtt + col;
        const StageTag tag{static_cast<int>(layer_idx), static_cast<int>(flat)};
        const std::string name = cnn_a(block + 1, delta, r, col);
        const int a = em_.model.add_continuous(name, 0.0, lb.post_ub[flat], next_cost);
        em_.varmap.add(name, a);
        em_.tags.var_stage.push_back(tag);
        a_ids[static_cast<std::size_t>(flat)] = a;

        LinearConstraint one;  // Σ ζ over the window = 1
        one.name = "pool_one_" + name;
        one.sense = Sense::kEq;
        one.rhs = 1.0;

        for (Index i = 0; i < fs; ++i)
          for (Index j = 0; j < fs; ++j) {
            const Index src = (delta * d.ht + (r * st + i)) * d.wt + (col * st + j);
            const int bh = bhat_ids[static_cast<std::size_t>(src)];
            const std::string zn = cnn_zeta(block, delta, r, col, i, j);
            const int zeta = em_.model.add_binary(zn, config_.cost_zeta);
            em_.varmap.add(zn, zeta);
            em_.tags.var_stage.push_back(tag);
            one.terms.emplace_back(zeta, 1.0);

            LinearConstraint ge;  // A' − B̂ ≥ 0
            ge.name = "pool_ge_" + zn;
            ge.terms = {{a, 1.0}, {bh, -1.0}};
            ge.sense = Sense::kGe;
            ge.rhs = 0.0;
            em_.model.add_linear(std::move(ge));
            em_.tags.linear_stage.push_back(tag);

            IndicatorConstraint le;  // ζ=1 → A' ≤ B̂
            le.guard = zeta;
            le.active_when = 1;
            le.implied.name = "pool_le_" + zn;
            le.implied.terms = {{a, 1.0}, {bh, -1.0}};
            le.implied.rhs = 0.0;
            em_.model.add_indicator(std::move(le));
            em_.tags.indicator_stage.push_back(tag);
          }
        em_.model.add_linear(std::move(one));
        em_.tags.linear_stage.push_back(tag);
      }
  return a_ids;
}

std::vector<int> CnnEncoder::encode_flatten(const std::vector<int>& a_ids,
                                            std::size_t layer_idx) {
  const auto& lb = bounds_.layers[layer_idx];
  std::vector<int> pi_ids(a_ids.size(), -1);
  // π((δ)·h̃̃·w̃̃ + r·w̃̃ + c) = A(δ, r, c): the collision-free offset form of
  // the reshape (deck-major, then row-major), which is exactly the
  // row-major order of the map stack.
  for (std::size_t flat = 0; flat < a_ids.size(); ++flat) {
    const StageTag tag{static_cast<int>(layer_idx), static_cast<int>(flat)};
    const std::string name = cnn_pi(static_cast<Index>(flat));
    const int pi = em_.model.add_continuous(name, lb.post_lb[static_cast<Index>(flat)],
                                            lb.post_ub[static_cast<Index>(flat)], 0.0);
    em_.varmap.add(name, pi);
    em_.tags.var_stage.push_back(tag);
    pi_ids[flat] = pi;

    LinearConstraint eq;
    eq.name = "flat_" + name;
    eq.terms = {{pi, 1.0}, {a_ids[flat], -1.0}};
    eq.sense = Sense::kEq;
    eq.rhs = 0.0;
    em_.model.add_linear(std::move(eq));
    em_.tags.linear_stage.push_back(tag);
  }
  return pi_ids;
}

std::vector<int> CnnEncoder::encode_dense_relu(const std::vector<int>& in_ids,
                                               std::size_t layer_idx, bool is_output) {
  const auto& dense = std::get<DenseLayer>(net_.layers[layer_idx]);
  const auto& lb = bounds_.layers[layer_idx];
  if (dense.weights.cols() != static_cast<Index>(in_ids.size()))
    throw std::invalid_argument("encode_cnn: dense layer " + std::to_string(layer_idx) +
                                " expects " + std::to_string(dense.weights.cols()) +
                                " inputs, got " + std::to_string(in_ids.size()));
  auto x_name = is_output ? cnn_psi : cnn_phi;
  auto s_name = is_output ? cnn_s_psi : cnn_s_phi;
  auto z_name = is_output ? cnn_z_psi : cnn_z_phi;
  const double x_cost = is_output ? config_.cost_output : config_.cost_fc;
  const double z_cost = is_output ? 0.0 : config_.cost_fc_z;

  std::vector<int> out_ids;
  for (Index u = 0; u < dense.weights.rows(); ++u) {
    const StageTag tag{static_cast<int>(layer_idx), static_cast<int>(u)};
    const double xu = std::max(0.0, lb.pre_ub[u]);
    const double su = std::max(0.0, -lb.pre_lb[u]);
    const int x = em_.model.add_continuous(x_name(u), 0.0, xu, x_cost);
    const int s = em_.model.add_continuous(s_name(u), 0.0, su, 0.0);
    const int z = em_.model.add_binary(z_name(u), z_cost);
    em_.varmap.add(x_name(u), x);
    em_.varmap.add(s_name(u), s);
    em_.varmap.add(z_name(u), z);
    em_.tags.var_stage.push_back(tag);
    em_.tags.var_stage.push_back(tag);
    em_.tags.var_stage.push_back(tag);
    out_ids.push_back(x);

    LinearConstraint eq;  // Σ w·in − x + s = −b
    eq.name = "eq_" + x_name(u);
    for (Index i = 0; i < dense.weights.cols(); ++i)
      if (dense.weights(u, i) != 0.0)
        eq.terms.emplace_back(in_ids[static_cast<std::size_t>(i)], dense.weights(u, i));
    eq.terms.emplace_back(x, -1.0);
    eq.terms.emplace_back(s, 1.0);
    eq.sense = Sense::kEq;
    eq.rhs = config_.include_biases ? -dense.bias(u) : 0.0;
    em_.model.add_linear(std::move(eq));
    em_.tags.linear_stage.push_back(tag);

    IndicatorConstraint off;
    off.guard = z;
    off.active_when = 1;
    off.implied.name = "ind_x_" + x_name(u);
    off.implied.terms = {{x, 1.0}};
    em_.model.add_indicator(std::move(off));
    em_.tags.indicator_stage.push_back(tag);

    IndicatorConstraint on;
    on.guard = z;
    on.active_when = 0;
    on.implied.name = "ind_s_" + s_name(u);
    on.implied.terms = {{s, 1.0}};
    em_.model.add_indicator(std::move(on));
    em_.tags.indicator_stage.push_back(tag);
  }
  return out_ids;
}

EncodedModel CnnEncoder::take() { return std::move(em_); }

EncodedModel encode_cnn(const NetworkSpec& net, const BoundSet& bounds,
                        const CnnEncodeConfig& config) {
  if (bounds.layers.size() != net.layers.size())
    throw std::invalid_argument("encode_cnn: bound set does not match the layer list");
  const CnnShape shape = validate_cnn_shape(net);
  CnnEncoder enc(net, bounds, config);
  std::vector<int> a_ids = enc.encode_input();
  for (Index c = 1; c <= shape.blocks; ++c) {
    const std::size_t conv_idx = static_cast<std::size_t>(2 * (c - 1));
    const auto b_ids = enc.encode_conv_block(a_ids, conv_idx, c);
    const auto bhat_ids = enc.encode_relu_block(b_ids, conv_idx, c);
    a_ids = enc.encode_maxpool_block(bhat_ids, conv_idx + 1, c);
  }
  const auto pi_ids = enc.encode_flatten(a_ids, shape.flatten_idx);
  const auto phi_ids = enc.encode_dense_relu(pi_ids, shape.fc_idx, false);
  const auto psi_ids = enc.encode_dense_relu(phi_ids, shape.out_idx, true);
  EncodedModel out = enc.take();
  out.output_ids = psi_ids;
  return out;
}

std::vector<std::pair<int, double>> cnn_trace_assignment(const NetworkSpec& net,
                                                         const Tensor& input,
                                                         const ActivationTrace& trace,
                                                         const VarMap& varmap) {
  const CnnShape shape = validate_cnn_shape(net);
  std::vector<std::pair<int, double>> vals;
  const Tensor in = as_map_stack(input);
  for (Index beta = 0; beta < in.extent(0); ++beta)
    for (Index i = 0; i < in.extent(1); ++i)
      for (Index j = 0; j < in.extent(2); ++j)
        vals.emplace_back(varmap.id(cnn_a(1, beta, i, j)), in(beta, i, j));

  for (Index c = 1; c <= shape.blocks; ++c) {
    const std::size_t conv_idx = static_cast<std::size_t>(2 * (c - 1));
    const Tensor& pre = *trace.pre[conv_idx];
    const Tensor& post = trace.post[conv_idx];
    for (Index delta = 0; delta < pre.extent(0); ++delta)
      for (Index r = 0; r < pre.extent(1); ++r)
        for (Index col = 0; col < pre.extent(2); ++col) {
          vals.emplace_back(varmap.id(cnn_b(c, delta, r, col)), pre(delta, r, col));
          vals.emplace_back(varmap.id(cnn_bhat(c, delta, r, col)), post(delta, r, col));
          vals.emplace_back(varmap.id(cnn_s(c, delta, r, col)),
                            std::max(0.0, -pre(delta, r, col)));
          if (pre(delta, r, col) > 0)
            vals.emplace_back(varmap.id(cnn_z(c, delta, r, col)), 0.0);
          else if (pre(delta, r, col) < 0)
            vals.emplace_back(varmap.id(cnn_z(c, delta, r, col)), 1.0);
        }
    const Tensor& pooled = trace.post[conv_idx + 1];
    for (Index delta = 0; delta < pooled.extent(0); ++delta)
      for (Index r = 0; r < pooled.extent(1); ++r)
        for (Index col = 0; col < pooled.extent(2); ++col)
          vals.emplace_back(varmap.id(cnn_a(c + 1, delta, r, col)), pooled(delta, r, col));
  }

  const Tensor& flat = trace.post[shape.flatten_idx];
  for (Index k = 0; k < flat.size(); ++k) vals.emplace_back(varmap.id(cnn_pi(k)), flat[k]);

  for (const bool is_output : {false, true}) {
    const std::size_t idx = is_output ? shape.out_idx : shape.fc_idx;
    const Tensor& pre = *trace.pre[idx];
    const Tensor& post = trace.post[idx];
    auto x_name = is_output ? cnn_psi : cnn_phi;
    auto s_name = is_output ? cnn_s_psi : cnn_s_phi;
    auto z_name = is_output ? cnn_z_psi : cnn_z_phi;
    for (Index u = 0; u < post.size(); ++u) {
      vals.emplace_back(varmap.id(x_name(u)), post[u]);
      vals.emplace_back(varmap.id(s_name(u)), std::max(0.0, -pre[u]));
      if (pre[u] > 0)
        vals.emplace_back(varmap.id(z_name(u)), 0.0);
      else if (pre[u] < 0)
        vals.emplace_back(varmap.id(z_name(u)), 1.0);
    }
  }
  return vals;
}

}  // namespace net2milp
