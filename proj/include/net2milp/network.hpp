#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "net2milp/tensor.hpp"

namespace net2milp {

enum class Activation { kRelu, kLinear };

/// Dense layer: out = act(W x + b), W is n_out × n_in, row = output unit.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  Activation activation = Activation::kRelu;
};

/// Convolutional layer in the per-map sweep convention: each of the m
/// kernels is convolved with each of the alpha input maps separately, so a
/// stack of alpha maps becomes m*alpha maps; output map index
/// delta = beta + gamma*alpha for input map beta and kernel gamma.
/// ReLU is part of the layer. One bias per kernel.
struct ConvLayer {
  std::vector<Tensor> kernels;  // each f×f
  std::vector<double> bias;     // one per kernel
  ConvParams params;
};

struct MaxPoolLayer {
  Index pool_size = 2;  // 𝔣
  Index stride = 2;     // 𝒮
};

struct FlattenLayer {};

using LayerSpec = std::variant<DenseLayer, ConvLayer, MaxPoolLayer, FlattenLayer>;

/// Output extents of one layer given its input extents. Throws with the
/// layer's diagnostic when the input is not admissible.
std::vector<Index> infer_output_shape(const LayerSpec& layer, const std::vector<Index>& in_shape);

/// Ordered layer list with a fixed input shape. Immutable after load.
struct NetworkSpec {
  std::vector<Index> input_shape;
  std::vector<LayerSpec> layers;
  Index class_count = 0;

  /// Checks the shape chain, the per-layer modulus conditions and the
  /// class count. Throws with the layer index and expected-vs-actual
  /// extents on the first violation.
  void validate() const;

  /// Shapes produced by each layer in order, starting after layer 0.
  std::vector<std::vector<Index>> layer_output_shapes() const;

  bool dense_only() const;
};

/// Every intermediate of one forward pass. pre is populated for layers
/// with a ReLU split (dense relu, conv); post = relu(pre) there.
struct ActivationTrace {
  std::vector<Tensor> post;                 // one per layer
  std::vector<std::optional<Tensor>> pre;   // pre-activation where a split exists

  const Tensor& output() const { return post.back(); }
};

ActivationTrace forward(const NetworkSpec& net, const Tensor& input);

struct Classification {
  Index label = 0;
  Tensor scores;
};

/// argmax of final-layer scores; ties broken by lowest index.
Classification classify(const NetworkSpec& net, const Tensor& input);

/// 2-D inputs to a conv/pool layer are treated as a one-map stack.
Tensor as_map_stack(const Tensor& t);

}  // namespace net2milp
