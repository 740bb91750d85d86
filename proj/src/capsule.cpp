#include "net2milp/capsule.hpp"

#include <cmath>
#include <stdexcept>

namespace net2milp {
namespace caps {

Eigen::VectorXd squash(const Eigen::VectorXd& s) {
  const double n2 = s.squaredNorm();
  if (n2 == 0.0) return Eigen::VectorXd::Zero(s.size());
  const double n = std::sqrt(n2);
  return (n2 / (1.0 + n2)) * (s / n);
}

Eigen::VectorXd predict(const Eigen::MatrixXd& w, const Eigen::VectorXd& u) {
  if (w.cols() != u.size())
    throw std::invalid_argument("predict: weight matrix expects " + std::to_string(w.cols()) +
                                " components, capsule has " + std::to_string(u.size()));
  return w * u;
}

RouteResult route(const std::vector<std::vector<Eigen::VectorXd>>& u_hat, int iterations) {
  if (iterations < 1) throw std::invalid_argument("route: at least one iteration required");
  const Index lower = static_cast<Index>(u_hat.size());
  if (lower == 0) throw std::invalid_argument("route: no capsules");
  const Index upper = static_cast<Index>(u_hat[0].size());
  for (const auto& row : u_hat)
    if (static_cast<Index>(row.size()) != upper)
      throw std::invalid_argument("route: ragged prediction table");
  const Index dim = u_hat[0][0].size();

  RouteResult res;
  res.state.logits = Eigen::MatrixXd::Zero(lower, upper);
  res.state.couplings = Eigen::MatrixXd::Zero(lower, upper);

  for (int r = 0; r < iterations; ++r) {
    // c_i = softmax(b_i), stabilized by subtracting the row max
    for (Index i = 0; i < lower; ++i) {
      const double rowmax = res.state.logits.row(i).maxCoeff();
      Eigen::VectorXd e = (res.state.logits.row(i).array() - rowmax).exp();
      res.state.couplings.row(i) = e.transpose() / e.sum();
    }
    res.v.assign(static_cast<std::size_t>(upper), Eigen::VectorXd::Zero(dim));
    for (Index j = 0; j < upper; ++j) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(dim);
      for (Index i = 0; i < lower; ++i)
        s += res.state.couplings(i, j) * u_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      res.v[static_cast<std::size_t>(j)] = squash(s);
    }
    for (Index i = 0; i < lower; ++i)
      for (Index j = 0; j < upper; ++j)
        res.state.logits(i, j) +=
            u_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].dot(res.v[static_cast<std::size_t>(j)]);
  }
  return res;
}

double margin_loss(const std::vector<Eigen::VectorXd>& v, const std::vector<bool>& present) {
  if (v.size() != present.size())
    throw std::invalid_argument("margin_loss: class count mismatch");
  double loss = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double len = v[k].norm();
    const double pos = std::max(0.0, kMarginPlus - len);
    const double neg = std::max(0.0, len - kMarginMinus);
    loss += present[k] ? pos * pos : kMarginLambda * neg * neg;
  }
  return loss;
}

PrimaryCaps primarycaps_restack(const std::vector<Tensor>& maps, Index dim) {
  if (maps.empty()) throw std::invalid_argument("restack: no maps");
  if (static_cast<Index>(maps.size()) % dim != 0)
    throw std::invalid_argument("restack: map count " + std::to_string(maps.size()) +
                                " not divisible by capsule dimension " + std::to_string(dim));
  const Index h = maps[0].extent(0), w = maps[0].extent(1);
  for (const Tensor& m : maps)
    if (m.rank() != 2 || m.extent(0) != h || m.extent(1) != w)
      throw std::invalid_argument("restack: maps must share extents");

  PrimaryCaps out;
  out.decks = static_cast<Index>(maps.size()) / dim;
  out.h = h;
  out.w = w;
  out.dim = dim;
  out.capsules.reserve(static_cast<std::size_t>(out.decks * h * w));
  for (Index deck = 0; deck < out.decks; ++deck)
    for (Index i = 0; i < h; ++i)
      for (Index j = 0; j < w; ++j) {
        Eigen::VectorXd v(dim);
        for (Index t = 0; t < dim; ++t)
          v(t) = maps[static_cast<std::size_t>(deck * dim + t)](i, j);
        out.capsules.push_back(std::move(v));
      }
  return out;
}

std::vector<Tensor> primarycaps_unstack(const PrimaryCaps& caps) {
  std::vector<Tensor> maps(static_cast<std::size_t>(caps.decks * caps.dim),
                           Tensor({caps.h, caps.w}));
  for (Index deck = 0; deck < caps.decks; ++deck)
    for (Index i = 0; i < caps.h; ++i)
      for (Index j = 0; j < caps.w; ++j)
        for (Index t = 0; t < caps.dim; ++t)
          maps[static_cast<std::size_t>(deck * caps.dim + t)](i, j) = caps.at(deck, i, j)(t);
  return maps;
}

ParamCounts param_count(const CapsArchitecture& arch) {
  ParamCounts pc;
  const std::int64_t f2 = arch.conv_kernel_size * arch.conv_kernel_size;
  pc.conv = (f2 + 1) * arch.conv_kernels;
  const std::int64_t pf2 = arch.primary_kernel_size * arch.primary_kernel_size;
  pc.primarycaps = (arch.primary_decks * arch.primary_dim) * ((pf2 + 1) * arch.conv_kernels);
  const std::int64_t caps = arch.primary_capsule_count();
  pc.digitcaps =
      (caps * (arch.digit_dim * arch.primary_dim) + caps * 2) * arch.class_count;
  pc.decoder = (arch.decoder_fc1 + 1) * arch.decoder_fc2 + (arch.decoder_fc2 + 1) * arch.decoder_out;
  pc.sum_without_decoder = pc.conv + pc.primarycaps + pc.digitcaps;
  pc.sum_with_decoder = pc.sum_without_decoder + pc.decoder;
  return pc;
}

}  // namespace caps
}  // namespace net2milp
