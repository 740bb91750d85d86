#pragma once

#include <Eigen/Dense>

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace net2milp {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense multi-dimensional array, row-major, the carrier for images,
/// kernels and activations. Rank 1..3 in practice (vector, map, map stack).
template <typename Scalar>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<Index> shape)
      : shape_(std::move(shape)), data_(VectorX<Scalar>::Zero(count(shape_))) {
    check_shape();
  }

  TensorT(std::vector<Index> shape, VectorX<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != count(shape_))
      throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                  " does not match shape product " +
                                  std::to_string(count(shape_)));
    if (!data_.allFinite())
      throw std::invalid_argument("Tensor: non-finite value admitted");
  }

  static TensorT from_matrix(const MatrixRM<Scalar>& m) {
    TensorT t({m.rows(), m.cols()});
    t.data_ = Eigen::Map<const VectorX<Scalar>>(m.data(), m.size());
    return t;
  }

  Index rank() const { return static_cast<Index>(shape_.size()); }
  const std::vector<Index>& shape() const { return shape_; }
  Index extent(Index d) const { return shape_.at(static_cast<std::size_t>(d)); }
  Index size() const { return data_.size(); }

  const VectorX<Scalar>& data() const { return data_; }
  VectorX<Scalar>& data() { return data_; }

  Scalar operator[](Index flat) const { return data_(flat); }
  Scalar& operator[](Index flat) { return data_(flat); }

  Scalar operator()(Index i, Index j) const { return data_(i * extent(1) + j); }
  Scalar& operator()(Index i, Index j) { return data_(i * extent(1) + j); }

  Scalar operator()(Index m, Index i, Index j) const {
    return data_((m * extent(1) + i) * extent(2) + j);
  }
  Scalar& operator()(Index m, Index i, Index j) {
    return data_((m * extent(1) + i) * extent(2) + j);
  }

  /// Rank-2 view of the whole tensor.
  Eigen::Map<const MatrixRM<Scalar>> map2d() const {
    require_rank(2);
    return {data_.data(), extent(0), extent(1)};
  }
  Eigen::Map<MatrixRM<Scalar>> map2d() {
    require_rank(2);
    return {data_.data(), extent(0), extent(1)};
  }

  /// Rank-2 view of map m of a rank-3 stack.
  Eigen::Map<const MatrixRM<Scalar>> map2d(Index m) const {
    require_rank(3);
    return {data_.data() + m * extent(1) * extent(2), extent(1), extent(2)};
  }
  Eigen::Map<MatrixRM<Scalar>> map2d(Index m) {
    require_rank(3);
    return {data_.data() + m * extent(1) * extent(2), extent(1), extent(2)};
  }

  /// Same data, new extents; product must match.
  TensorT reshaped(std::vector<Index> shape) const {
    if (count(shape) != data_.size())
      throw std::invalid_argument("Tensor::reshaped: extent product mismatch");
    TensorT t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  static Index count(const std::vector<Index>& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
  }

 private:
  void check_shape() const {
    for (Index e : shape_)
      if (e <= 0) throw std::invalid_argument("Tensor: non-positive extent");
  }
  void require_rank(Index r) const {
    if (rank() != r)
      throw std::invalid_argument("Tensor: rank " + std::to_string(rank()) + ", expected " +
                                  std::to_string(r));
  }

  std::vector<Index> shape_;
  VectorX<Scalar> data_;
};

using Tensor = TensorT<double>;

/// Convolution hyperparameters. stride must not exceed kernel_size or the
/// kernel would skip pixels; the modulus conditions are checked per map.
struct ConvParams {
  Index kernel_size = 1;  // f
  Index stride = 1;       // S
  Index padding = 0;      // P

  void validate() const {
    if (kernel_size < 1) throw std::invalid_argument("ConvParams: kernel_size < 1");
    if (stride < 1) throw std::invalid_argument("ConvParams: stride < 1");
    if (padding < 0) throw std::invalid_argument("ConvParams: padding < 0");
    if (stride > kernel_size)
      throw std::invalid_argument("ConvParams: stride " + std::to_string(stride) +
                                  " exceeds kernel_size " + std::to_string(kernel_size));
  }

  void validate_for(Index h, Index w) const {
    validate();
    auto check = [&](Index n, const char* dim) {
      const Index span = n - kernel_size + 2 * padding;
      if (span < 0)
        throw std::invalid_argument(std::string("ConvParams: kernel larger than padded ") + dim);
      if (span % stride != 0)
        throw std::invalid_argument(std::string("ConvParams: (") + dim + " - f + 2P) mod S = " +
                                    std::to_string(span % stride) + " != 0 for " + dim + "=" +
                                    std::to_string(n) + ", f=" + std::to_string(kernel_size) +
                                    ", S=" + std::to_string(stride) +
                                    ", P=" + std::to_string(padding));
    };
    check(h, "h");
    check(w, "w");
  }

  Index out_extent(Index n) const { return (n - kernel_size + 2 * padding) / stride + 1; }
};

/// Zero frame of width p around a 2-D map.
template <typename Scalar>
TensorT<Scalar> pad_zero(const TensorT<Scalar>& in, Index p) {
  if (in.rank() != 2) throw std::invalid_argument("pad_zero: rank-2 input required");
  if (p == 0) return in;
  TensorT<Scalar> out({in.extent(0) + 2 * p, in.extent(1) + 2 * p});
  out.map2d().block(p, p, in.extent(0), in.extent(1)) = in.map2d();
  return out;
}

/// 2-D convolution (cross-correlation sweep, as the kernel slides the rows
/// and columns in steps of S). Padding is materialized as a zero frame
/// before sweeping so the sweep itself never branches on the boundary.
template <typename Scalar>
TensorT<Scalar> conv2d(const TensorT<Scalar>& input, const TensorT<Scalar>& kernel,
                       const ConvParams& params) {
  if (input.rank() != 2) throw std::invalid_argument("conv2d: rank-2 input required");
  if (kernel.rank() != 2 || kernel.extent(0) != kernel.extent(1) ||
      kernel.extent(0) != params.kernel_size)
    throw std::invalid_argument("conv2d: kernel must be square of size f");
  const Index h = input.extent(0), w = input.extent(1);
  params.validate_for(h, w);

  const TensorT<Scalar> padded = pad_zero(input, params.padding);
  const auto src = padded.map2d();
  const auto ker = kernel.map2d();
  const Index f = params.kernel_size, s = params.stride;

  TensorT<Scalar> out({params.out_extent(h), params.out_extent(w)});
  auto dst = out.map2d();
  for (Index r = 0; r < dst.rows(); ++r)
    for (Index c = 0; c < dst.cols(); ++c)
      dst(r, c) = src.block(r * s, c * s, f, f).cwiseProduct(ker).sum();
  return out;
}

/// Max over each f×f window, stride S, no padding.
template <typename Scalar>
TensorT<Scalar> maxpool2d(const TensorT<Scalar>& input, Index pool_size, Index stride) {
  if (input.rank() != 2) throw std::invalid_argument("maxpool2d: rank-2 input required");
  if (pool_size < 1 || stride < 1) throw std::invalid_argument("maxpool2d: non-positive params");
  if (stride > pool_size) throw std::invalid_argument("maxpool2d: stride exceeds pool_size");
  const Index h = input.extent(0), w = input.extent(1);
  auto check = [&](Index n, const char* dim) {
    if ((n - pool_size) % stride != 0)
      throw std::invalid_argument(std::string("maxpool2d: (") + dim + " - f) mod S = " +
                                  std::to_string((n - pool_size) % stride) + " != 0 for " + dim +
                                  "=" + std::to_string(n) + ", f=" + std::to_string(pool_size) +
                                  ", S=" + std::to_string(stride));
  };
  check(h, "h");
  check(w, "w");

  const auto src = input.map2d();
  TensorT<Scalar> out({(h - pool_size) / stride + 1, (w - pool_size) / stride + 1});
  auto dst = out.map2d();
  for (Index r = 0; r < dst.rows(); ++r)
    for (Index c = 0; c < dst.cols(); ++c)
      dst(r, c) = src.block(r * stride, c * stride, pool_size, pool_size).maxCoeff();
  return out;
}

template <typename Scalar>
TensorT<Scalar> relu(const TensorT<Scalar>& input) {
  TensorT<Scalar> out = input;
  out.data() = out.data().cwiseMax(Scalar{0});
  return out;
}

}  // namespace net2milp
