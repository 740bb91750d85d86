#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "net2milp/network.hpp"
#include "net2milp/rng.hpp"

namespace net2milp {

enum class InitKind { kHeGaussian, kUniformKernel };

struct TrainConfig {
  double learning_rate = 0.05;  // α
  Index epochs = 100;
  std::uint64_t seed = 0;
  InitKind init = InitKind::kHeGaussian;
};

/// Full-batch training set; targets are one-hot rows of length class_count.
struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<Tensor> targets;

  void validate() const;
};

Tensor one_hot(Index label, Index class_count);

/// Zero-mean Gaussian with standard deviation sqrt(2 / fan_in).
Tensor he_init(const std::vector<Index>& shape, Index fan_in, Rng& rng);
Tensor he_init(const std::vector<Index>& shape, Index fan_in, std::uint64_t seed);

/// f×f kernel with entries uniform on ±sqrt(f / ((alpha_in + f) * m^2)).
Tensor uniform_kernel_init(Index f, Index alpha_in, Index m, Rng& rng);
Tensor uniform_kernel_init(Index f, Index alpha_in, Index m, std::uint64_t seed);

/// Dense ReLU stack (hidden sizes, then a class_count output layer) with
/// He-initialized weights and zero biases.
NetworkSpec init_dense_network(Index input_size, const std::vector<Index>& hidden,
                               Index class_count, Activation output_activation, Rng& rng);

struct DenseGrad {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};
struct ConvGrad {
  std::vector<Tensor> kernels;
  std::vector<double> bias;
};
/// monostate for layers with no parameters (pool, flatten).
using LayerGrad = std::variant<DenseGrad, ConvGrad, std::monostate>;

struct Gradients {
  std::vector<LayerGrad> layers;
};

/// (1/(2M)) Σ_m Σ_i (target_i(m) − output_i(m))².
double mse_loss(const NetworkSpec& net, const Dataset& data);

/// Exact gradient of mse_loss w.r.t. every weight and bias. The ReLU
/// subgradient at 0 is 0; max-pool routes to the argmax entry, lowest
/// flat index on ties.
Gradients backprop(const NetworkSpec& net, const Dataset& data);

/// w := w − α · ∂E/∂w on every parameter.
NetworkSpec gd_step(const NetworkSpec& net, const Gradients& grads, double learning_rate);

struct TrainResult {
  NetworkSpec net;
  std::vector<double> loss_history;  // length epochs + 1, initial loss first
};

/// Full-batch gradient descent. Throws if the loss turns non-finite,
/// naming the epoch.
TrainResult train(const NetworkSpec& net, const Dataset& data, const TrainConfig& config);

}  // namespace net2milp
