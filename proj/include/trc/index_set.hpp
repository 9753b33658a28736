#pragma once

#include "trc/tensor.hpp"

namespace trc {

//! Observation pattern over a tensor: the observed flat indices, kept sorted
//! ascending, plus per-mode buckets. bucket(n, i) lists the observed entries
//! with i_n = i, ordered by the cyclic row index
//! j = i_{n+1} + i_{n+2}*I_{n+1} + ... over modes n+1, ..., n-1 (mod N),
//! matching the subchain middle-index linearization.
class IndexSet {
 public:
  IndexSet() = default;
  //! flat indices need not be sorted; duplicates or out-of-range throw
  IndexSet(Shape shape, std::vector<index_t> flat);

  //! entries where mask is nonzero
  static IndexSet from_mask(const DenseTensor& mask);
  //! every entry observed
  static IndexSet full(const Shape& shape);

  const Shape& shape() const { return shape_; }
  index_t count() const { return static_cast<index_t>(flat_.size()); }
  bool empty() const { return flat_.empty(); }
  const std::vector<index_t>& flat() const { return flat_; }
  const std::vector<index_t>& bucket(int mode, index_t slice) const;
  bool contains(index_t flat) const;

  //! 0/1 tensor of the pattern
  DenseTensor to_mask() const;

  //! cyclic row index of a flat entry for the given mode
  index_t cyclic_row(index_t flat, int mode) const;

 private:
  void build_buckets();

  Shape shape_;
  std::vector<index_t> flat_;
  std::vector<std::vector<std::vector<index_t>>> buckets_;  // [mode][slice]
};

struct SliceObservations {
  std::vector<double> values;   // observed entries of slice i_n of mode n
  std::vector<index_t> rows;    // their subchain row indices, ascending
};

//! Observed entries of the mode-n slice i_n together with the complementary
//! multi-indices linearized cyclically, for subchain row lookup.
SliceObservations cyclic_unfold_observed(const DenseTensor& t, const IndexSet& obs,
                                         int n, index_t i);

}  // namespace trc
