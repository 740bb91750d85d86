#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "net2milp/tensor.hpp"

namespace net2milp {
namespace caps {

/// v = (‖s‖²/(1+‖s‖²)) · s/‖s‖, with squash(0) = 0 (the continuity limit).
/// Orientation is preserved and ‖v‖ < 1.
Eigen::VectorXd squash(const Eigen::VectorXd& s);

/// û_{j|i} = W_ij · u_i.
Eigen::VectorXd predict(const Eigen::MatrixXd& w, const Eigen::VectorXd& u);

/// Coupling logits and coefficients per (lower capsule i, upper capsule j).
/// Every row of couplings is a softmax: non-negative, sums to 1.
struct RoutingState {
  Eigen::MatrixXd logits;     // b_ij
  Eigen::MatrixXd couplings;  // c_ij
};

struct RouteResult {
  std::vector<Eigen::VectorXd> v;  // one squashed capsule per upper capsule
  RoutingState state;
};

/// Routing by agreement: b ← 0; per iteration c_i ← softmax(b_i),
/// s_j ← Σ_i c_ij û_{j|i}, v_j ← squash(s_j), b_ij += û_{j|i}·v_j.
/// u_hat is indexed [lower i][upper j].
RouteResult route(const std::vector<std::vector<Eigen::VectorXd>>& u_hat, int iterations = 3);

/// Σ_k T_k max(0, m⁺−‖v_k‖)² + λ(1−T_k) max(0, ‖v_k‖−m⁻)² with
/// m⁺ = 0.9, m⁻ = 0.1, λ = 0.5.
double margin_loss(const std::vector<Eigen::VectorXd>& v, const std::vector<bool>& present);

constexpr double kMarginPlus = 0.9;
constexpr double kMarginMinus = 0.1;
constexpr double kMarginLambda = 0.5;

/// Map stacks restacked into capsule decks: component t of the capsule at
/// deck d reads map dim·d + t, so consecutive maps stack into one vector.
struct PrimaryCaps {
  Index decks = 0, h = 0, w = 0, dim = 0;
  std::vector<Eigen::VectorXd> capsules;  // deck-major, then row-major

  const Eigen::VectorXd& at(Index deck, Index i, Index j) const {
    return capsules[static_cast<std::size_t>((deck * h + i) * w + j)];
  }
};

PrimaryCaps primarycaps_restack(const std::vector<Tensor>& maps, Index dim = 8);
std::vector<Tensor> primarycaps_unstack(const PrimaryCaps& caps);

struct CapsArchitecture {
  std::int64_t input_h = 28, input_w = 28;
  std::int64_t conv_kernels = 256;
  std::int64_t conv_kernel_size = 9;
  std::int64_t primary_decks = 32;
  std::int64_t primary_dim = 8;
  std::int64_t primary_kernel_size = 9;
  std::int64_t primary_grid = 6;  // 6×6 after the stride-2 conv
  std::int64_t digit_dim = 16;
  std::int64_t class_count = 10;
  std::int64_t decoder_fc1 = 512, decoder_fc2 = 1024, decoder_out = 784;

  std::int64_t primary_capsule_count() const {
    return primary_decks * primary_grid * primary_grid;
  }
};

/// Trainable-parameter audit: conv (f²+1)·m; primarycaps
/// (decks·dim)·((f²+1)·m_prev); digitcaps (caps·(16·8) + caps·2)·classes;
/// decoder (fc1+1)·fc2 + (fc2+1)·out. Integer arithmetic throughout. The
/// digitcaps term includes the per-pass routing coefficients b and c in
/// the tally even though they are per-forward state rather than trained
/// weights; callers wanting weights only can subtract caps·2·classes.
struct ParamCounts {
  std::int64_t conv = 0;
  std::int64_t primarycaps = 0;
  std::int64_t digitcaps = 0;
  std::int64_t decoder = 0;
  std::int64_t sum_without_decoder = 0;
  std::int64_t sum_with_decoder = 0;
};

ParamCounts param_count(const CapsArchitecture& arch);

}  // namespace caps
}  // namespace net2milp
