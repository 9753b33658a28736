#include "trc/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace trc {

namespace {

void check_shapes(const DenseTensor& est, const DenseTensor& truth) {
  if (!(est.shape() == truth.shape()))
    throw std::invalid_argument("metrics: shape mismatch");
}

}  // namespace

double rse(const DenseTensor& est, const DenseTensor& truth) {
  check_shapes(est, truth);
  double diff = 0.0, ref = 0.0;
  for (index_t i = 0; i < truth.numel(); ++i) {
    const double d = est[i] - truth[i];
    diff += d * d;
    ref += truth[i] * truth[i];
  }
  if (ref == 0.0) throw std::invalid_argument("rse: truth has zero norm");
  return std::sqrt(diff / ref);
}

double psnr(const DenseTensor& est, const DenseTensor& truth, double max_val) {
  check_shapes(est, truth);
  if (max_val <= 0.0) throw std::invalid_argument("psnr: max_val must be positive");
  double diff = 0.0;
  for (index_t i = 0; i < truth.numel(); ++i) {
    const double d = est[i] - truth[i];
    diff += d * d;
  }
  const double mse = diff / static_cast<double>(truth.numel());
  if (mse == 0.0) return 999.0;
  return 10.0 * std::log10(max_val * max_val / mse);
}

RankStats air_var(const std::vector<std::vector<index_t>>& rank_lists) {
  if (rank_lists.empty()) throw std::invalid_argument("air_var: no runs");
  RankStats out;
  for (const auto& ranks : rank_lists) {
    if (ranks.empty()) throw std::invalid_argument("air_var: empty rank vector");
    const double n = static_cast<double>(ranks.size());
    double mean = 0.0;
    for (index_t r : ranks) mean += static_cast<double>(r);
    mean /= n;
    out.air += mean;
    if (ranks.size() > 1) {
      double ss = 0.0;
      for (index_t r : ranks) {
        const double d = static_cast<double>(r) - mean;
        ss += d * d;
      }
      out.var += std::sqrt(ss / (n - 1.0));
    }
  }
  const double runs = static_cast<double>(rank_lists.size());
  out.air /= runs;
  out.var /= runs;
  return out;
}

bool rank_recovery_success(double air, index_t true_rank) {
  const double r = static_cast<double>(true_rank);
  return air >= r - 0.25 && air <= r + 0.25;
}

}  // namespace trc
