#include "net2milp/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace net2milp {

void Dataset::validate() const {
  if (inputs.size() != targets.size())
    throw std::invalid_argument("dataset: inputs and targets differ in length");
  if (inputs.empty()) throw std::invalid_argument("dataset: empty");
  for (const Tensor& t : targets) {
    Index ones = 0;
    double sum = 0;
    for (Index i = 0; i < t.size(); ++i) {
      sum += t[i];
      if (t[i] == 1.0) ++ones;
    }
    if (ones != 1 || sum != 1.0)
      throw std::invalid_argument("dataset: target is not one-hot");
  }
}

Tensor one_hot(Index label, Index class_count) {
  if (label < 0 || label >= class_count)
    throw std::invalid_argument("one_hot: label " + std::to_string(label) + " out of range");
  Tensor t({class_count});
  t[label] = 1.0;
  return t;
}

Tensor he_init(const std::vector<Index>& shape, Index fan_in, Rng& rng) {
  if (fan_in < 1) throw std::invalid_argument("he_init: fan_in < 1");
  Tensor t(shape);
  const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.gaussian(0.0, sigma);
  return t;
}

Tensor he_init(const std::vector<Index>& shape, Index fan_in, std::uint64_t seed) {
  Rng rng = Rng::rooted(seed);
  return he_init(shape, fan_in, rng);
}

Tensor uniform_kernel_init(Index f, Index alpha_in, Index m, Rng& rng) {
  if (f < 1 || alpha_in < 1 || m < 1)
    throw std::invalid_argument("uniform_kernel_init: non-positive argument");
  const double bound = std::sqrt(static_cast<double>(f) /
                                 (static_cast<double>(alpha_in + f) * static_cast<double>(m) *
                                  static_cast<double>(m)));
  Tensor t({f, f});
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

Tensor uniform_kernel_init(Index f, Index alpha_in, Index m, std::uint64_t seed) {
  Rng rng = Rng::rooted(seed);
  return uniform_kernel_init(f, alpha_in, m, rng);
}

NetworkSpec init_dense_network(Index input_size, const std::vector<Index>& hidden,
                               Index class_count, Activation output_activation, Rng& rng) {
  NetworkSpec net;
  net.input_shape = {input_size};
  net.class_count = class_count;
  Index fan_in = input_size;
  std::vector<Index> sizes = hidden;
  sizes.push_back(class_count);
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    DenseLayer d;
    Rng stream = rng.child("dense" + std::to_string(k));
    Tensor w = he_init({sizes[k], fan_in}, fan_in, stream);
    d.weights = w.map2d();
    d.bias = Eigen::VectorXd::Zero(sizes[k]);
    d.activation = k + 1 == sizes.size() ? output_activation : Activation::kRelu;
    net.layers.emplace_back(std::move(d));
    fan_in = sizes[k];
  }
  net.validate();
  return net;
}

double mse_loss(const NetworkSpec& net, const Dataset& data) {
  data.validate();
  const double m = static_cast<double>(data.inputs.size());
  double total = 0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i) {
    const Tensor out = forward(net, data.inputs[i]).output();
    if (out.size() != data.targets[i].size())
      throw std::invalid_argument("mse_loss: output/target length mismatch");
    total += (data.targets[i].data() - out.data()).squaredNorm();
  }
  return total / (2.0 * m);
}

namespace {

Gradients zero_gradients(const NetworkSpec& net) {
  Gradients g;
  for (const auto& layer : net.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      g.layers.emplace_back(DenseGrad{Eigen::MatrixXd::Zero(d->weights.rows(), d->weights.cols()),
                                      Eigen::VectorXd::Zero(d->bias.size())});
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      ConvGrad cg;
      const Index f = c->params.kernel_size;
      cg.kernels.assign(c->kernels.size(), Tensor({f, f}));
      cg.bias.assign(c->bias.size(), 0.0);
      g.layers.emplace_back(std::move(cg));
    } else {
      g.layers.emplace_back(std::monostate{});
    }
  }
  return g;
}

// Accumulates one instance's gradient contribution, scaled by 1/M.
void backprop_instance(const NetworkSpec& net, const Tensor& input, const Tensor& target,
                       double inv_m, Gradients& grads) {
  const ActivationTrace trace = forward(net, input);
  const Index layer_count = static_cast<Index>(net.layers.size());

  // dE/d(output), E = (1/2M) Σ (target − out)².
  Tensor grad_out = trace.output();
  grad_out.data() = (trace.output().data() - target.data()) * inv_m;

  for (Index k = layer_count - 1; k >= 0; --k) {
    const Tensor& layer_input = k == 0 ? input : trace.post[static_cast<std::size_t>(k - 1)];
    const auto& layer = net.layers[static_cast<std::size_t>(k)];

    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      Eigen::VectorXd dpre = grad_out.data();
      if (d->activation == Activation::kRelu) {
        const Tensor& pre = *trace.pre[static_cast<std::size_t>(k)];
        for (Index i = 0; i < dpre.size(); ++i)
          if (pre[i] <= 0.0) dpre(i) = 0.0;
      }
      auto& dg = std::get<DenseGrad>(grads.layers[static_cast<std::size_t>(k)]);
      dg.weights.noalias() += dpre * layer_input.data().transpose();
      dg.bias += dpre;
      Tensor next({d->weights.cols()});
      next.data() = d->weights.transpose() * dpre;
      grad_out = std::move(next);
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      const Tensor in = as_map_stack(layer_input);
      const Tensor& pre = *trace.pre[static_cast<std::size_t>(k)];
      Tensor dpre = grad_out.reshaped(pre.shape());
      for (Index i = 0; i < dpre.size(); ++i)
        if (pre[i] <= 0.0) dpre[i] = 0.0;

      const Index alpha = in.extent(0);
      const Index m_kernels = static_cast<Index>(c->kernels.size());
      const Index f = c->params.kernel_size, s = c->params.stride, p = c->params.padding;
      auto& cg = std::get<ConvGrad>(grads.layers[static_cast<std::size_t>(k)]);

      Tensor din({alpha, in.extent(1), in.extent(2)});
      for (Index gamma = 0; gamma < m_kernels; ++gamma) {
        const auto ker = c->kernels[static_cast<std::size_t>(gamma)].map2d();
        auto dker = cg.kernels[static_cast<std::size_t>(gamma)].map2d();
        for (Index beta = 0; beta < alpha; ++beta) {
          const Index delta = beta + gamma * alpha;
          Tensor slice({in.extent(1), in.extent(2)});
          slice.map2d() = in.map2d(beta);
          const Tensor padded = pad_zero(slice, p);
          Tensor dpad({padded.extent(0), padded.extent(1)});
          const auto src = padded.map2d();
          auto dsrc = dpad.map2d();
          for (Index r = 0; r < dpre.extent(1); ++r)
            for (Index col = 0; col < dpre.extent(2); ++col) {
              const double g = dpre(delta, r, col);
              if (g == 0.0) continue;
              dker.noalias() += g * src.block(r * s, col * s, f, f);
              dsrc.block(r * s, col * s, f, f).noalias() += g * ker;
              cg.bias[static_cast<std::size_t>(gamma)] += g;
            }
          din.map2d(beta) += dpad.map2d().block(p, p, in.extent(1), in.extent(2));
        }
      }
      grad_out = layer_input.rank() == 2
                     ? din.reshaped({in.extent(1), in.extent(2)})
                     : din;
    } else if (const auto* pl = std::get_if<MaxPoolLayer>(&layer)) {
      const Tensor in = as_map_stack(layer_input);
      const Tensor& post = trace.post[static_cast<std::size_t>(k)];
      Tensor dpost = grad_out.reshaped(post.shape());
      Tensor din({in.extent(0), in.extent(1), in.extent(2)});
      const Index fs = pl->pool_size, st = pl->stride;
      for (Index b = 0; b < in.extent(0); ++b)
        for (Index r = 0; r < dpost.extent(1); ++r)
          for (Index col = 0; col < dpost.extent(2); ++col) {
            // argmax of the window, lowest flat index on ties
            Index bi = 0, bj = 0;
            double best = in(b, r * st, col * st);
            for (Index i = 0; i < fs; ++i)
              for (Index j = 0; j < fs; ++j)
                if (in(b, r * st + i, col * st + j) > best) {
                  best = in(b, r * st + i, col * st + j);
                  bi = i;
                  bj = j;
                }
            din(b, r * st + bi, col * st + bj) += dpost(b, r, col);
          }
      grad_out = layer_input.rank() == 2
                     ? din.reshaped({in.extent(1), in.extent(2)})
                     : din;
    } else {
      grad_out = grad_out.reshaped(layer_input.shape());
    }
  }
}

}  // namespace

Gradients backprop(const NetworkSpec& net, const Dataset& data) {
  data.validate();
  Gradients grads = zero_gradients(net);
  const double inv_m = 1.0 / static_cast<double>(data.inputs.size());
  for (std::size_t i = 0; i < data.inputs.size(); ++i)
    backprop_instance(net, data.inputs[i], data.targets[i], inv_m, grads);
  return grads;
}

NetworkSpec gd_step(const NetworkSpec& net, const Gradients& grads, double learning_rate) {
  if (learning_rate <= 0) throw std::invalid_argument("gd_step: learning rate must be positive");
  if (grads.layers.size() != net.layers.size())
    throw std::invalid_argument("gd_step: gradient/layer count mismatch");
  NetworkSpec out = net;
  for (std::size_t k = 0; k < out.layers.size(); ++k) {
    if (auto* d = std::get_if<DenseLayer>(&out.layers[k])) {
      const auto& dg = std::get<DenseGrad>(grads.layers[k]);
      d->weights -= learning_rate * dg.weights;
      d->bias -= learning_rate * dg.bias;
    } else if (auto* c = std::get_if<ConvLayer>(&out.layers[k])) {
      const auto& cg = std::get<ConvGrad>(grads.layers[k]);
      for (std::size_t g = 0; g < c->kernels.size(); ++g) {
        c->kernels[g].data() -= learning_rate * cg.kernels[g].data();
        c->bias[g] -= learning_rate * cg.bias[g];
      }
    }
  }
  return out;
}

namespace {

bool params_finite(const NetworkSpec& net) {
  for (const auto& layer : net.layers) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      if (!d->weights.allFinite() || !d->bias.allFinite()) return false;
    } else if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      for (const Tensor& k : c->kernels)
        if (!k.data().allFinite()) return false;
      for (double b : c->bias)
        if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

}  // namespace

TrainResult train(const NetworkSpec& net, const Dataset& data, const TrainConfig& config) {
  if (config.learning_rate <= 0) throw std::invalid_argument("train: learning rate must be positive");
  TrainResult result{net, {}};
  result.loss_history.reserve(static_cast<std::size_t>(config.epochs) + 1);
  double loss = mse_loss(result.net, data);
  result.loss_history.push_back(loss);
  for (Index epoch = 1; epoch <= config.epochs; ++epoch) {
    const Gradients grads = backprop(result.net, data);
    result.net = gd_step(result.net, grads, config.learning_rate);
    if (!params_finite(result.net))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    loss = mse_loss(result.net, data);
    if (!std::isfinite(loss))
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    result.loss_history.push_back(loss);
  }
  return result;
}

}  // namespace net2milp
