#include "net2milp/network.hpp"

#include <stdexcept>
#include <string>

namespace net2milp {

namespace {

std::string shape_str(const std::vector<Index>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::vector<Index> as_stack_shape(const std::vector<Index>& s) {
  if (s.size() == 2) return {1, s[0], s[1]};
  return s;
}

}  // namespace

Tensor as_map_stack(const Tensor& t) {
  if (t.rank() == 3) return t;
  if (t.rank() == 2) return t.reshaped({1, t.extent(0), t.extent(1)});
  throw std::invalid_argument("as_map_stack: rank-2 or rank-3 tensor required");
}

std::vector<Index> infer_output_shape(const LayerSpec& layer, const std::vector<Index>& in_shape) {
  if (const auto* d = std::get_if<DenseLayer>(&layer)) {
    if (in_shape.size() != 1)
      throw std::invalid_argument("dense layer expects a rank-1 input, got " +
                                  shape_str(in_shape));
    if (d->weights.cols() != in_shape[0])
      throw std::invalid_argument("dense layer expects " + std::to_string(d->weights.cols()) +
                                  " inputs, got " + std::to_string(in_shape[0]));
    if (d->weights.rows() != d->bias.size())
      throw std::invalid_argument("dense layer: weight rows " + std::to_string(d->weights.rows()) +
                                  " != bias length " + std::to_string(d->bias.size()));
    return {d->weights.rows()};
  }
  if (const auto* c = std::get_if<ConvLayer>(&layer)) {
    const auto s = as_stack_shape(in_shape);
    if (s.size() != 3)
      throw std::invalid_argument("conv layer expects a map stack, got " + shape_str(in_shape));
    if (c->kernels.empty()) throw std::invalid_argument("conv layer: no kernels");
    const Index f = c->params.kernel_size;
    for (const Tensor& k : c->kernels)
      if (k.rank() != 2 || k.extent(0) != f || k.extent(1) != f)
        throw std::invalid_argument("conv layer: kernels must all be " + std::to_string(f) + "x" +
                                    std::to_string(f));
    if (c->bias.size() != c->kernels.size())
      throw std::invalid_argument("conv layer: bias count != kernel count");
    c->params.validate_for(s[1], s[2]);
    const Index m = static_cast<Index>(c->kernels.size());
    return {m * s[0], c->params.out_extent(s[1]), c->params.out_extent(s[2])};
  }
  if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
    const auto s = as_stack_shape(in_shape);
    if (s.size() != 3)
      throw std::invalid_argument("maxpool layer expects a map stack, got " + shape_str(in_shape));
    if (p->stride > p->pool_size)
      throw std::invalid_argument("maxpool layer: stride exceeds pool_size");
    auto check = [&](Index n, const char* dim) {
      if (n < p->pool_size || (n - p->pool_size) % p->stride != 0)
        throw std::invalid_argument(std::string("maxpool layer: (") + dim + " - f) mod S != 0 for " +
                                    dim + "=" + std::to_string(n));
    };
    check(s[1], "h");
    check(s[2], "w");
    return {s[0], (s[1] - p->pool_size) / p->stride + 1, (s[2] - p->pool_size) / p->stride + 1};
  }
  // flatten
  return {Tensor::count(in_shape)};
}

std::vector<std::vector<Index>> NetworkSpec::layer_output_shapes() const {
  std::vector<std::vector<Index>> shapes;
  std::vector<Index> cur = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      cur = infer_output_shape(layers[i], cur);
    } catch (const std::exception& e) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": " + e.what());
    }
    shapes.push_back(cur);
  }
  return shapes;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("network: no layers");
  if (class_count < 1) throw std::invalid_argument("network: class_count < 1");
  const auto shapes = layer_output_shapes();
  const auto& out = shapes.back();
  if (out.size() != 1 || out[0] != class_count)
    throw std::invalid_argument("network: final layer produces " + shape_str(out) +
                                ", expected [" + std::to_string(class_count) + "]");
}

bool NetworkSpec::dense_only() const {
  for (const auto& l : layers)
    if (!std::holds_alternative<DenseLayer>(l)) return false;
  return true;
}

ActivationTrace forward(const NetworkSpec& net, const Tensor& input) {
  if (input.shape() != net.input_shape)
    throw std::invalid_argument("forward: input extents do not match network input shape");

  ActivationTrace trace;
  Tensor cur = input;
  for (const auto& layer : net.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (cur.rank() != 1) throw std::invalid_argument("forward: dense layer fed non-vector");
      Eigen::VectorXd pre = d->weights * cur.data() + d->bias;
      Tensor pre_t({pre.size()}, pre);
      Tensor post = d->activation == Activation::kRelu ? relu(pre_t) : pre_t;
      trace.pre.emplace_back(d->activation == Activation::kRelu ? std::optional<Tensor>(pre_t)
                                                                : std::nullopt);
      trace.post.push_back(post);
      cur = std::move(post);
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      const Tensor in = as_map_stack(cur);
      const Index alpha = in.extent(0);
      const Index m = static_cast<Index>(c->kernels.size());
      const Index oh = c->params.out_extent(in.extent(1));
      const Index ow = c->params.out_extent(in.extent(2));
      Tensor pre_t({m * alpha, oh, ow});
      for (Index gamma = 0; gamma < m; ++gamma)
        for (Index beta = 0; beta < alpha; ++beta) {
          const Index delta = beta + gamma * alpha;
          Tensor slice({in.extent(1), in.extent(2)});
          slice.map2d() = in.map2d(beta);
          Tensor conv = conv2d(slice, c->kernels[static_cast<std::size_t>(gamma)], c->params);
          pre_t.map2d(delta) = conv.map2d().array() + c->bias[static_cast<std::size_t>(gamma)];
        }
      Tensor post = relu(pre_t);
      trace.pre.emplace_back(pre_t);
      trace.post.push_back(post);
      cur = std::move(post);
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      const Tensor in = as_map_stack(cur);
      const Index alpha = in.extent(0);
      const Index oh = (in.extent(1) - p->pool_size) / p->stride + 1;
      const Index ow = (in.extent(2) - p->pool_size) / p->stride + 1;
      Tensor out({alpha, oh, ow});
      for (Index b = 0; b < alpha; ++b) {
        Tensor slice({in.extent(1), in.extent(2)});
        slice.map2d() = in.map2d(b);
        out.map2d(b) = maxpool2d(slice, p->pool_size, p->stride).map2d();
      }
      trace.pre.emplace_back(std::nullopt);
      trace.post.push_back(out);
      cur = std::move(out);
    } else {
      Tensor out = cur.reshaped({cur.size()});
      trace.pre.emplace_back(std::nullopt);
      trace.post.push_back(out);
      cur = std::move(out);
    }
  }
  return trace;
}

Classification classify(const NetworkSpec& net, const Tensor& input) {
  ActivationTrace trace = forward(net, input);
  const Tensor& scores = trace.output();
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return {best, scores};
}

}  // namespace net2milp
