#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace vquant {

/// Raised whenever operand shapes do not satisfy an operation's contract.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Shape = std::vector<Eigen::Index>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

inline Eigen::Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, std::multiplies<>());
}

/**
 * Dense row-major tensor of rank 1..3.
 *
 * Storage is a flat Eigen vector; matrix() exposes the leading axis as rows
 * and every remaining axis folded into columns, so a rank-1 tensor of length
 * n views as an n x 1 column and a rank-3 tensor [a x b x c] as a x (b*c).
 */
template <typename Scalar>
class Tensor {
  static_assert(std::is_floating_point_v<Scalar>, "Tensor scalar must be floating point");

 public:
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_ = Vector<Scalar>::Zero(shape_size(shape_));
  }

  Tensor(Shape shape, Vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (data_.size() != shape_size(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor scalar(Scalar value) {
    Vector<Scalar> v(1);
    v[0] = value;
    return Tensor({1}, std::move(v));
  }

  static Tensor vector(std::initializer_list<Scalar> values) {
    Vector<Scalar> v(static_cast<Eigen::Index>(values.size()));
    std::copy(values.begin(), values.end(), v.data());
    const Eigen::Index n = v.size();
    return Tensor({n}, std::move(v));
  }

  static Tensor matrix(Eigen::Index rows, Eigen::Index cols, std::initializer_list<Scalar> values) {
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
      throw DimensionError("initializer length does not match matrix shape");
    }
    Vector<Scalar> v(rows * cols);
    std::copy(values.begin(), values.end(), v.data());
    return Tensor({rows, cols}, std::move(v));
  }

  template <typename Derived>
  static Tensor from_vector(const Eigen::MatrixBase<Derived>& v) {
    Vector<Scalar> data = v.template cast<Scalar>().reshaped();
    const Eigen::Index n = data.size();
    return Tensor({n}, std::move(data));
  }

  /// Copies any Eigen matrix expression into a rank-2 tensor (row-major).
  template <typename Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    RowMatrix<Scalar> rm = m.template cast<Scalar>();
    Vector<Scalar> data = Eigen::Map<Vector<Scalar>>(rm.data(), rm.size());
    return Tensor({rm.rows(), rm.cols()}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  Eigen::Index dim(std::size_t axis) const { return shape_.at(axis); }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  Scalar& operator[](Eigen::Index i) { return data_[i]; }
  Scalar operator[](Eigen::Index i) const { return data_[i]; }

  Eigen::Index rows() const { return shape_.empty() ? 0 : shape_[0]; }
  Eigen::Index cols() const { return shape_.empty() ? 0 : data_.size() / shape_[0]; }

  MatrixMap matrix() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

  Scalar item() const {
    if (data_.size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape_));
    return data_[0];
  }

  bool all_finite() const { return data_.allFinite(); }

  void fill(Scalar value) { data_.setConstant(value); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  void validate_shape() const {
    if (shape_.empty() || shape_.size() > 3) {
      throw DimensionError("tensor rank must be 1..3, got " + std::to_string(shape_.size()));
    }
    for (auto d : shape_) {
      if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_string(shape_));
    }
  }

  Shape shape_;
  Vector<Scalar> data_;
};

}  // namespace vquant
