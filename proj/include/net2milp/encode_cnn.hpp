#pragma once

#include "net2milp/bounds.hpp"
#include "net2milp/encode_common.hpp"
#include "net2milp/network.hpp"

namespace net2milp {

/// Per-term objective costs of the CNN model, one per variable family.
struct CnnEncodeConfig {
  double cost_maps = 1.0;    // c: input maps of every block
  double cost_conv = 1.0;    // g: convolution outputs B
  double cost_relu = 1.0;    // l: rectified outputs B̂
  double cost_relu_z = 1.0;  // n ∈ [0,1]: ReLU activation binaries
  double cost_zeta = 1.0;    // o ∈ [0,1]: max-pool binaries
  double cost_fc = 1.0;      // c̃: fully-connected units φ
  double cost_fc_z = 1.0;    // q ∈ [0,1]: fully-connected binaries
  double cost_output = 1.0;  // c̃̃: output units ψ
  bool include_biases = false;
  InputMode input;
};

/// Extents of one conv+pool block under the standard substitutions.
struct BlockDims {
  Index alpha = 0;       // input maps
  Index maps = 0;        // m·alpha output maps
  Index h = 0, w = 0;    // conv input
  Index ht = 0, wt = 0;  // conv output
  Index htt = 0, wtt = 0;  // pool output

  static BlockDims compute(Index alpha, Index m, Index h, Index w, const ConvParams& conv,
                           Index pool_size, Index pool_stride);
};

/// Compiles a block-structured CNN (C × [conv+ReLU+pool], flatten, dense
/// ReLU, dense ReLU output) into the 0-1 MILP. Any other layer sequence is
/// rejected with the offending layer index.
EncodedModel encode_cnn(const NetworkSpec& net, const BoundSet& bounds,
                        const CnnEncodeConfig& config);

/// Passes of the encoder, exposed for direct use. All operate on a shared
/// EncodedModel under construction.
class CnnEncoder {
 public:
  CnnEncoder(const NetworkSpec& net, const BoundSet& bounds, const CnnEncodeConfig& config);

  EncodedModel take();  // finish and move the result out

  std::vector<int> encode_input();

  /// One equality per output cell: B = Σ A·k, zero padding contributing
  /// nothing. Returns the B ids, map-major row-major.
  std::vector<int> encode_conv_block(const std::vector<int>& a_ids, std::size_t layer_idx,
                                     Index block);

  /// B = B̂ − s with B̂, s ≥ 0, z=1 → B̂ ≤ 0, z=0 → s ≤ 0. Returns B̂ ids.
  std::vector<int> encode_relu_block(const std::vector<int>& b_ids, std::size_t layer_idx,
                                     Index block);

  /// Σ_window ζ = 1; A' ≥ B̂(window element); ζ=1 → A' ≤ B̂(element).
  std::vector<int> encode_maxpool_block(const std::vector<int>& bhat_ids, std::size_t layer_idx,
                                        Index block);

  std::vector<int> encode_flatten(const std::vector<int>& a_ids, std::size_t layer_idx);

  /// ReLU splits for the fully-connected layer and the output layer.
  std::vector<int> encode_dense_relu(const std::vector<int>& in_ids, std::size_t layer_idx,
                                     bool is_output);

  const BlockDims& dims(Index block) const { return dims_.at(static_cast<std::size_t>(block - 1)); }

 private:
  static std::vector<Index> as_stack_shape_of(const std::vector<Index>& s);

  const NetworkSpec& net_;
  const BoundSet& bounds_;
  const CnnEncodeConfig& config_;
  EncodedModel em_;
  std::vector<BlockDims> dims_;
  Index blocks_ = 0;

  friend EncodedModel encode_cnn(const NetworkSpec&, const BoundSet&, const CnnEncodeConfig&);
};

/// Number of blocks C and layer indices of the tail, after validating the
/// rigid block structure.
struct CnnShape {
  Index blocks = 0;
  std::size_t flatten_idx = 0, fc_idx = 0, out_idx = 0;
};
CnnShape validate_cnn_shape(const NetworkSpec& net);

/// (var id, value) pairs for every unit variable of a forward trace, plus
/// binaries where the sign pins them. ζ is never pinned (ties are the
/// solver's choice).
std::vector<std::pair<int, double>> cnn_trace_assignment(const NetworkSpec& net,
                                                         const Tensor& input,
                                                         const ActivationTrace& trace,
                                                         const VarMap& varmap);

}  // namespace net2milp
