#pragma once

#include <vector>

#include <Eigen/Dense>

#include "trc/index_set.hpp"
#include "trc/model.hpp"
#include "trc/tensor.hpp"

namespace trc {

//! W = E[G (x) G] for one lateral slice, an (Rl^2 x Rr^2) matrix, given the
//! slice mean (Rl x Rr) and the covariance of its column-major vec.
Eigen::MatrixXd expected_kron_slice(const Eigen::Ref<const Eigen::MatrixXd>& mean,
                                    const Eigen::Ref<const Eigen::MatrixXd>& cov);

//! Reorders E[S (x) S] of a subchain slice (S is Rr x Rl) into the Gram
//! E[vec(S^T) vec(S^T)^T] over the column-major vec, size (Rl*Rr)^2.
Eigen::MatrixXd gram_from_ess(const Eigen::Ref<const Eigen::MatrixXd>& ess,
                              index_t rl, index_t rr);

//! w[n][i] = E[G_n(:,i,:) (x) G_n(:,i,:)] for every core and slice.
using MomentTable = std::vector<std::vector<Eigen::MatrixXd>>;
MomentTable moment_table(const ModelState& state);
//! recompute row n after core n changed
void refresh_moment_table(MomentTable& w, const ModelState& state, int n);

//! Observed-entry subchain statistics for one lateral slice of mode n.
//! xhat denotes the posterior-mean reconstruction of an entry.
struct SliceMoments {
  Eigen::MatrixXd ess;      //!< sum_j E[S_j (x) S_j], (R_n^2 x R_{n-1}^2)
  Eigen::MatrixXd ts;       //!< sum_j t_j S_j over mean cores, (R_n x R_{n-1})
  double sum_t2 = 0.0;        //!< sum_j t_j^2
  double sum_t_xhat = 0.0;    //!< sum_j t_j * xhat_j
  double sum_xhat2 = 0.0;     //!< sum_j xhat_j^2
  double sum_sq_resid = 0.0;  //!< sum_j (t_j - xhat_j)^2
  index_t count = 0;          //!< observed entries in the slice
};

//! Accumulates SliceMoments for every slice of mode n by walking the
//! cyclically sorted observation buckets, grouping runs that share all but
//! the fastest cyclic index and caching suffix products of the chain.
std::vector<SliceMoments> accumulate_slice_moments(const DenseTensor& t,
                                                   const IndexSet& obs,
                                                   const ModelState& state,
                                                   const MomentTable& w, int n);

}  // namespace trc
