#pragma once

#include <cstdint>
#include <vector>

#include "trc/index_set.hpp"
#include "trc/tensor.hpp"
#include "trc/tr_ops.hpp"

namespace trc {

struct AlsOptions {
  std::vector<index_t> ranks;  //!< one per bond, or a single value broadcast
  double ridge = 1e-10;
  int max_sweeps = 100;
  double tol = 1e-8;  //!< relative change of observed RMSE between sweeps
  std::uint64_t seed = 0;
};

struct AlsTrace {
  std::vector<double> rmse;  //!< observed-entry RMSE after each sweep
  bool converged = false;
};

//! One ridge-regularized least-squares update of core n against the observed
//! entries, each lateral slice solved independently over deterministic
//! subchain rows. Throws std::runtime_error if the normal equations are
//! singular and ridge is zero.
void tr_als_step_oracle(TRCores& cores, const DenseTensor& t, const IndexSet& obs,
                        int n, double ridge);

//! Cyclic ALS completion with fixed ranks. Cores start i.i.d. N(0,1) from the
//! seed. Warns on stderr when a mode has more unknowns per slice than
//! observations (overfitting regime) but still solves.
std::pair<TRCores, AlsTrace> tr_als_fit(const DenseTensor& t, const IndexSet& obs,
                                        const AlsOptions& options);

}  // namespace trc
