#include "trc/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace trc {

index_t Shape::numel() const {
  index_t n = 1;
  for (index_t d : dims) n *= d;
  return n;
}

index_t Shape::stride(int n) const {
  index_t s = 1;
  for (int k = 0; k < n; ++k) s *= dims[static_cast<size_t>(k)];
  return s;
}

std::string Shape::str() const {
  std::ostringstream os;
  for (size_t k = 0; k < dims.size(); ++k) {
    if (k) os << 'x';
    os << dims[k];
  }
  return os.str();
}

DenseTensor::DenseTensor(Shape shape, double fill)
    : shape_(std::move(shape)) {
  for (index_t d : shape_.dims)
    if (d <= 0) throw std::invalid_argument("DenseTensor: nonpositive extent");
  data_.assign(static_cast<size_t>(shape_.numel()), fill);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<index_t>(data_.size()) != shape_.numel())
    throw std::invalid_argument("DenseTensor: data size does not match shape");
}

index_t DenseTensor::flat_index(std::span<const index_t> idx) const {
  if (static_cast<int>(idx.size()) != order())
    throw std::invalid_argument("DenseTensor: index order mismatch");
  index_t flat = 0, stride = 1;
  for (int n = 0; n < order(); ++n) {
    const index_t i = idx[static_cast<size_t>(n)];
    if (i < 0 || i >= shape_[n])
      throw std::out_of_range("DenseTensor: index out of range");
    flat += i * stride;
    stride *= shape_[n];
  }
  return flat;
}

void DenseTensor::unflatten(index_t flat, std::span<index_t> idx) const {
  for (int n = 0; n < order(); ++n) {
    idx[static_cast<size_t>(n)] = flat % shape_[n];
    flat /= shape_[n];
  }
}

double& DenseTensor::at(std::span<const index_t> idx) {
  return data_[static_cast<size_t>(flat_index(idx))];
}

double DenseTensor::at(std::span<const index_t> idx) const {
  return data_[static_cast<size_t>(flat_index(idx))];
}

bool DenseTensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b) {
  if (!(a.shape() == b.shape()))
    throw std::invalid_argument("hadamard: shape mismatch");
  DenseTensor out(a.shape());
  for (index_t k = 0; k < a.numel(); ++k) out[k] = a[k] * b[k];
  return out;
}

Eigen::Map<const Eigen::VectorXd> vec(const DenseTensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.numel())};
}

DenseTensor ten(const Eigen::Ref<const Eigen::VectorXd>& v, Shape shape) {
  if (static_cast<index_t>(v.size()) != shape.numel())
    throw std::invalid_argument("ten: vector length does not match shape");
  std::vector<double> data(v.data(), v.data() + v.size());
  return {std::move(shape), std::move(data)};
}

DenseTensor tensor_permute(const DenseTensor& x, int n) {
  const int N = x.order();
  if (n < 0 || n >= N) throw std::invalid_argument("tensor_permute: mode out of range");
  if (n == 0) return x;

  Shape out_shape;
  out_shape.dims.resize(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k)
    out_shape.dims[static_cast<size_t>(k)] = x.shape()[(n + k) % N];
  DenseTensor y(out_shape);

  // out stride of original mode m: modes rotate left by n
  std::vector<index_t> ostride(static_cast<size_t>(N));
  for (int m = 0; m < N; ++m)
    ostride[static_cast<size_t>(m)] = out_shape.stride(((m - n) % N + N) % N);

  std::vector<index_t> idx(static_cast<size_t>(N), 0);
  for (index_t flat = 0; flat < x.numel(); ++flat) {
    index_t of = 0;
    for (int m = 0; m < N; ++m) of += idx[static_cast<size_t>(m)] * ostride[static_cast<size_t>(m)];
    y[of] = x[flat];
    for (int m = 0; m < N; ++m) {
      if (++idx[static_cast<size_t>(m)] < x.shape()[m]) break;
      idx[static_cast<size_t>(m)] = 0;
    }
  }
  return y;
}

DenseTensor reshape(const DenseTensor& x, Shape shape) {
  if (shape.numel() != x.numel())
    throw std::invalid_argument("reshape: element count must be preserved");
  return {std::move(shape), x.storage()};
}

}  // namespace trc
