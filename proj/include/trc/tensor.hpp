#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace trc {

using index_t = std::int64_t;

//! Extents of a dense tensor. Linearization is first-index-fastest throughout:
//! flat = i_0 + i_1*I_0 + i_2*I_0*I_1 + ...
struct Shape {
  std::vector<index_t> dims;

  Shape() = default;
  Shape(std::initializer_list<index_t> d) : dims(d) {}
  explicit Shape(std::vector<index_t> d) : dims(std::move(d)) {}

  int order() const { return static_cast<int>(dims.size()); }
  index_t operator[](int n) const { return dims[static_cast<size_t>(n)]; }
  index_t numel() const;
  //! stride of mode n under the first-index-fastest layout
  index_t stride(int n) const;
  bool operator==(const Shape& o) const { return dims == o.dims; }
  std::string str() const;  // "10x10x10x10"
};

//! Dense real tensor, flat storage in first-index-fastest order.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape, double fill = 0.0);
  DenseTensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  int order() const { return shape_.order(); }
  index_t numel() const { return static_cast<index_t>(data_.size()); }

  double& operator[](index_t flat) { return data_[static_cast<size_t>(flat)]; }
  double operator[](index_t flat) const { return data_[static_cast<size_t>(flat)]; }
  double& at(std::span<const index_t> idx);
  double at(std::span<const index_t> idx) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  index_t flat_index(std::span<const index_t> idx) const;
  void unflatten(index_t flat, std::span<index_t> idx) const;

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

//! Elementwise product; shapes must match.
DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b);

//! Flatten view of the tensor under the declared linearization.
Eigen::Map<const Eigen::VectorXd> vec(const DenseTensor& t);

//! Rebuild a tensor from a flat vector; v.size() must equal shape.numel().
DenseTensor ten(const Eigen::Ref<const Eigen::VectorXd>& v, Shape shape);

//! Cyclic mode shift: output dims (I_n..I_{N-1}, I_0..I_{n-1}), entries
//! y(i_n,...,i_{n-1}) = x(i_0,...,i_{N-1}). n = 0 is the identity.
DenseTensor tensor_permute(const DenseTensor& x, int n);

//! Pure reshape: same flat data reinterpreted under new extents.
//! numel must be preserved; this is the only sanctioned re-dimensioning.
DenseTensor reshape(const DenseTensor& x, Shape shape);

}  // namespace trc
