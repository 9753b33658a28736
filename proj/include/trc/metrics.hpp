#pragma once

#include <vector>

#include "trc/tensor.hpp"

namespace trc {

//! Relative Frobenius error ||est - truth||_F / ||truth||_F.
//! Throws if shapes differ or truth has zero norm.
double rse(const DenseTensor& est, const DenseTensor& truth);

//! Peak signal-to-noise ratio 10*log10(max_val^2 / MSE) in dB, with
//! MSE = ||est - truth||_F^2 / numel. Returns the sentinel 999.0 when the
//! tensors match exactly (zero MSE), keeping CSV output numeric.
double psnr(const DenseTensor& est, const DenseTensor& truth, double max_val);

struct RankStats {
  double air = 0.0;  // mean over runs of per-run mean rank
  double var = 0.0;  // mean over runs of per-run sample standard deviation
};

//! Aggregates inferred rank vectors from repeated runs. Runs with a single
//! bond contribute zero spread.
RankStats air_var(const std::vector<std::vector<index_t>>& rank_lists);

//! Recovery counts as successful when AIR is within 0.25 of the true rank.
bool rank_recovery_success(double air, index_t true_rank);

}  // namespace trc
