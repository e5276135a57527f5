#ifndef LSPK_TENSOR_HPP
#define LSPK_TENSOR_HPP

// Dense m-th order tensors (m >= 3) in row-major order, last index fastest.
//
// The first two modes are the "matrix" modes of the t-product; modes 3..m are
// the transformed modes. With row-major storage the entry (i1, i2, f), where f
// is the flattened position over modes 3..m, sits at (i1 * n2 + i2) * J + f
// with J = n3 * ... * nm. Most kernels below exploit that the face index is
// the contiguous one.

#include "lspk/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace lspk {

using Complex = std::complex<double>;

class Shape {
public:
  Shape() = default;

  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { validate(); }
  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }

  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t operator[](std::size_t mode) const { return dims_.at(mode); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }

  std::size_t rows() const noexcept { return dims_[0]; }
  std::size_t cols() const noexcept { return dims_[1]; }

  /// Extents of modes 3..m.
  std::vector<std::size_t> rest() const { return {dims_.begin() + 2, dims_.end()}; }

  /// Number of frontal faces, n3 * ... * nm.
  std::size_t faces() const noexcept {
    return std::accumulate(dims_.begin() + 2, dims_.end(), std::size_t{1}, std::multiplies<>{});
  }

  std::size_t numel() const noexcept { return rows() * cols() * faces(); }

  /// Same rest extents, new matrix extents.
  Shape with_matrix(std::size_t n1, std::size_t n2) const {
    auto d = dims_;
    d[0] = n1;
    d[1] = n2;
    return Shape(std::move(d));
  }

  std::string str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "x" : "") << dims_[i];
    return os.str();
  }

  friend bool operator==(const Shape&, const Shape&) = default;

private:
  void validate() const {
    if (dims_.size() < 3)
      throw DimensionError("tensor order must be at least 3, got " + std::to_string(dims_.size()));
    std::size_t total = 1;
    for (auto d : dims_) {
      if (d == 0) throw DimensionError("tensor extents must be positive");
      if (total > std::numeric_limits<std::size_t>::max() / d)
        throw DimensionError("tensor element count overflows the index range");
      total *= d;
    }
  }

  std::vector<std::size_t> dims_;
};

template <typename Scalar>
class BasicTensor {
public:
  using value_type = Scalar;

  BasicTensor() = default;

  /// Zero tensor.
  explicit BasicTensor(Shape shape) : shape_(std::move(shape)), data_(shape_.numel(), Scalar{}) {}

  /// Takes ownership of row-major data. Real tensors reject NaN/Inf.
  BasicTensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel())
      throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                           shape_.str());
    for (const auto& v : data_) {
      if (!is_finite(v)) throw NumericalError("non-finite entry in tensor data");
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept { return shape_.rows(); }
  std::size_t cols() const noexcept { return shape_.cols(); }
  std::size_t faces() const noexcept { return shape_.faces(); }

  std::span<const Scalar> data() const noexcept { return data_; }
  std::span<Scalar> data() noexcept { return data_; }
  const std::vector<Scalar>& values() const noexcept { return data_; }

  Scalar& operator[](std::size_t k) { return data_[k]; }
  const Scalar& operator[](std::size_t k) const { return data_[k]; }

  /// Entry (i, j) of face f; all indices 0-based.
  Scalar& at(std::size_t i, std::size_t j, std::size_t f) { return data_[(i * cols() + j) * faces() + f]; }
  const Scalar& at(std::size_t i, std::size_t j, std::size_t f) const {
    return data_[(i * cols() + j) * faces() + f];
  }

  /// Full multi-index access, 0-based.
  template <typename... Idx>
    requires(sizeof...(Idx) >= 3 && (std::is_integral_v<Idx> && ...))
  Scalar& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
    requires(sizeof...(Idx) >= 3 && (std::is_integral_v<Idx> && ...))
  const Scalar& operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.order()) throw DimensionError("index arity does not match tensor order");
    std::size_t off = 0, mode = 0;
    for (auto i : idx) {
      if (i >= shape_[mode]) throw IndexError("index out of range at mode " + std::to_string(mode + 1));
      off = off * shape_[mode++] + i;
    }
    return off;
  }

  /// Copy of frontal face f as a matrix.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> face(std::size_t f) const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows(), cols());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) m(i, j) = at(i, j, f);
    return m;
  }

  template <typename Derived>
  void set_face(std::size_t f, const Eigen::MatrixBase<Derived>& expr) {
    const auto m = expr.eval();
    if (static_cast<std::size_t>(m.rows()) != rows() || static_cast<std::size_t>(m.cols()) != cols())
      throw DimensionError("face of size " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                           " does not fit tensor " + shape_.str());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) at(i, j, f) = m(i, j);
  }

  BasicTensor& operator+=(const BasicTensor& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  BasicTensor& operator-=(const BasicTensor& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  BasicTensor& operator*=(Scalar s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  /// this += s * o
  BasicTensor& axpy(Scalar s, const BasicTensor& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
    return *this;
  }

  friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }
  friend BasicTensor operator-(BasicTensor a, const BasicTensor& b) { return a -= b; }
  friend BasicTensor operator*(Scalar s, BasicTensor a) { return a *= s; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const Scalar& v) { return is_finite(v); });
  }

  void require_same_shape(const BasicTensor& o) const {
    if (!(shape_ == o.shape_))
      throw DimensionError("shape mismatch: " + shape_.str() + " vs " + o.shape_.str());
  }

private:
  static bool is_finite(const Scalar& v) {
    if constexpr (std::is_same_v<Scalar, Complex>)
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    else
      return std::isfinite(v);
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using DenseTensor = BasicTensor<double>;
using ComplexTensor = BasicTensor<Complex>;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline ComplexTensor to_complex(const DenseTensor& t) {
  ComplexTensor out(t.shape());
  for (std::size_t k = 0; k < t.size(); ++k) out[k] = t[k];
  return out;
}

inline double frobenius_norm(const DenseTensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

inline double frobenius_norm(const ComplexTensor& t) {
  double s = 0.0;
  for (const auto& v : t.data()) s += std::norm(v);
  return std::sqrt(s);
}

inline double inner_product(const DenseTensor& a, const DenseTensor& b) {
  a.require_same_shape(b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double max_abs(const DenseTensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  a.require_same_shape(b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  a.require_same_shape(b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

/// Rows idxs (1-based, in the given order) stacked into a |idxs| x n2 x ... tensor.
template <typename Scalar>
BasicTensor<Scalar> horizontal_subtensor(const BasicTensor<Scalar>& a, std::span<const std::size_t> idxs) {
  if (idxs.empty()) throw IndexError("empty row index set");
  const std::size_t row_len = a.cols() * a.faces();
  BasicTensor<Scalar> out(a.shape().with_matrix(idxs.size(), a.cols()));
  for (std::size_t r = 0; r < idxs.size(); ++r) {
    const std::size_t i = idxs[r];
    if (i < 1 || i > a.rows())
      throw IndexError("row index " + std::to_string(i) + " outside [1, " + std::to_string(a.rows()) + "]");
    std::copy_n(a.data().begin() + (i - 1) * row_len, row_len, out.data().begin() + r * row_len);
  }
  return out;
}

template <typename Scalar>
BasicTensor<Scalar> horizontal_subtensor(const BasicTensor<Scalar>& a, std::initializer_list<std::size_t> idxs) {
  return horizontal_subtensor(a, std::span<const std::size_t>(idxs.begin(), idxs.size()));
}

/// The i-th horizontal slice A(i, :, ..., :), 1-based; a copy.
template <typename Scalar>
BasicTensor<Scalar> horizontal_slice(const BasicTensor<Scalar>& a, std::size_t i) {
  const std::size_t idx[] = {i};
  return horizontal_subtensor(a, std::span<const std::size_t>(idx));
}

/// Stacks tensors with equal trailing extents along mode 1.
template <typename Scalar>
BasicTensor<Scalar> vertical_stack(std::span<const BasicTensor<Scalar>> parts) {
  if (parts.empty()) throw DimensionError("nothing to stack");
  std::size_t n1 = 0;
  for (const auto& p : parts) {
    if (p.shape().with_matrix(1, 1) != parts[0].shape().with_matrix(1, 1) || p.cols() != parts[0].cols())
      throw DimensionError("cannot stack " + p.shape().str() + " onto " + parts[0].shape().str());
    n1 += p.rows();
  }
  BasicTensor<Scalar> out(parts[0].shape().with_matrix(n1, parts[0].cols()));
  auto it = out.data().begin();
  for (const auto& p : parts) it = std::copy(p.data().begin(), p.data().end(), it);
  return out;
}

/// Face position under the block-diagonal ordering j = i3 + (i4-1) n3 + ...
/// (mode 3 fastest) for storage face index f (mode m fastest).
inline std::size_t bdiag_block_of_face(const Shape& s, std::size_t f) {
  const auto rest = s.rest();
  std::vector<std::size_t> idx(rest.size());
  for (std::size_t p = rest.size(); p-- > 0;) {
    idx[p] = f % rest[p];
    f /= rest[p];
  }
  std::size_t j = 0;
  for (std::size_t p = rest.size(); p-- > 0;) j = j * rest[p] + idx[p];
  return j;
}

/// Block-diagonal matricization diag(A^1, ..., A^J). Dense, quadratic memory:
/// intended for tests and audits only.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> bdiag(const BasicTensor<Scalar>& a) {
  const std::size_t n1 = a.rows(), n2 = a.cols(), nf = a.faces();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n1 * nf, n2 * nf);
  for (std::size_t f = 0; f < nf; ++f) {
    const std::size_t j = bdiag_block_of_face(a.shape(), f);
    m.block(j * n1, j * n2, n1, n2) = a.face(f);
  }
  return m;
}

}  // namespace lspk

#endif  // LSPK_TENSOR_HPP
