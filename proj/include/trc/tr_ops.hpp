#pragma once

#include <span>

#include "trc/tensor.hpp"

namespace trc {

using SliceMap = Eigen::Map<const Eigen::MatrixXd, Eigen::Unaligned,
                            Eigen::OuterStride<>>;
using MutSliceMap = Eigen::Map<Eigen::MatrixXd, Eigen::Unaligned,
                               Eigen::OuterStride<>>;

//! Ring of N third-order cores. Core n has extents (R_{n-1}, I_n, R_n) with
//! bond n shared between core n and core n+1 (indices mod N), so the ring
//! closes through bond N-1 back to core 0.
struct TRCores {
  std::vector<DenseTensor> cores;

  TRCores() = default;
  explicit TRCores(std::vector<DenseTensor> c) : cores(std::move(c)) { validate(); }

  int order() const { return static_cast<int>(cores.size()); }
  //! mode extents I_0..I_{N-1}
  Shape dims() const;
  //! bond extents R_0..R_{N-1}; left bond of core n is rank((n-1+N)%N)
  std::vector<index_t> ranks() const;
  index_t rank(int bond) const { return cores[static_cast<size_t>(bond)].shape()[2]; }
  index_t left_rank(int n) const { return cores[static_cast<size_t>(n)].shape()[0]; }

  //! lateral slice G_n(:, i, :) as an (R_{n-1} x R_n) matrix view
  SliceMap slice(int n, index_t i) const;
  MutSliceMap slice(int n, index_t i);

  //! throws if any core is not third-order or the bond extents do not chain
  void validate() const;
};

//! Dense reconstruction: X(i_0..i_{N-1}) = tr(G_0(:,i_0,:) ... G_{N-1}(:,i_{N-1},:)).
DenseTensor tr_reconstruct(const TRCores& g);

//! Single entry of the reconstruction.
double tr_entry(const TRCores& g, std::span<const index_t> idx);

//! Tensor connection product of consecutive cores: result has shape
//! (left rank of first, prod of middle extents, right rank of last), middle
//! index linearized first-listed-fastest. One core is copied through.
DenseTensor tcp(std::span<const DenseTensor> cores);

//! TCP of all cores except n, in cyclic order n+1, ..., n-1. Shape
//! (R_n, prod_{l != n} I_l, R_{n-1}); slice j multiplies G_n(:,i_n,:) from the
//! right, tr(G_n(:,i_n,:) * S_j) giving the entry at (i_n, j).
DenseTensor subchain(const TRCores& g, int n);

}  // namespace trc
