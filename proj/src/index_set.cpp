#include "trc/index_set.hpp"

#include <algorithm>
#include <stdexcept>

namespace trc {

IndexSet::IndexSet(Shape shape, std::vector<index_t> flat)
    : shape_(std::move(shape)), flat_(std::move(flat)) {
  const index_t n = shape_.numel();
  std::sort(flat_.begin(), flat_.end());
  for (size_t k = 0; k < flat_.size(); ++k) {
    if (flat_[k] < 0 || flat_[k] >= n)
      throw std::invalid_argument("IndexSet: flat index out of range");
    if (k > 0 && flat_[k] == flat_[k - 1])
      throw std::invalid_argument("IndexSet: duplicate observation");
  }
  build_buckets();
}

IndexSet IndexSet::from_mask(const DenseTensor& mask) {
  std::vector<index_t> flat;
  for (index_t k = 0; k < mask.numel(); ++k)
    if (mask[k] != 0.0) flat.push_back(k);
  return {mask.shape(), std::move(flat)};
}

IndexSet IndexSet::full(const Shape& shape) {
  std::vector<index_t> flat(shape.numel());
  for (index_t k = 0; k < shape.numel(); ++k) flat[k] = k;
  return {shape, std::move(flat)};
}

index_t IndexSet::cyclic_row(index_t flat, int mode) const {
  const int N = shape_.order();
  index_t idx[64];
  index_t f = flat;
  for (int m = 0; m < N; ++m) {
    idx[m] = f % shape_[m];
    f /= shape_[m];
  }
  index_t row = 0, stride = 1;
  for (int off = 1; off < N; ++off) {
    const int l = (mode + off) % N;
    row += idx[l] * stride;
    stride *= shape_[l];
  }
  return row;
}

void IndexSet::build_buckets() {
  const int N = shape_.order();
  if (N > 64) throw std::invalid_argument("IndexSet: order above 64 unsupported");
  buckets_.assign(N, {});
  for (int n = 0; n < N; ++n) {
    buckets_[n].assign(shape_[n], {});
    const index_t stride = shape_.stride(n);
    for (index_t f : flat_) {
      const index_t i = (f / stride) % shape_[n];
      buckets_[n][i].push_back(f);
    }
    for (index_t i = 0; i < shape_[n]; ++i)
      std::sort(buckets_[n][i].begin(), buckets_[n][i].end(),
                [this, n](index_t a, index_t b) {
                  return cyclic_row(a, n) < cyclic_row(b, n);
                });
  }
}

const std::vector<index_t>& IndexSet::bucket(int mode, index_t slice) const {
  return buckets_[mode][slice];
}

bool IndexSet::contains(index_t flat) const {
  return std::binary_search(flat_.begin(), flat_.end(), flat);
}

DenseTensor IndexSet::to_mask() const {
  DenseTensor m(shape_);
  for (index_t f : flat_) m[f] = 1.0;
  return m;
}

SliceObservations cyclic_unfold_observed(const DenseTensor& t, const IndexSet& obs,
                                         int n, index_t i) {
  if (!(t.shape() == obs.shape()))
    throw std::invalid_argument("cyclic_unfold_observed: shape mismatch");
  if (n < 0 || n >= t.order())
    throw std::invalid_argument("cyclic_unfold_observed: mode out of range");
  if (i < 0 || i >= t.shape()[n])
    throw std::invalid_argument("cyclic_unfold_observed: slice out of range");
  SliceObservations out;
  const auto& b = obs.bucket(n, i);
  out.values.reserve(b.size());
  out.rows.reserve(b.size());
  for (index_t f : b) {
    out.values.push_back(t[f]);
    out.rows.push_back(obs.cyclic_row(f, n));
  }
  return out;
}

}  // namespace trc
