#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "trc/index_set.hpp"
#include "trc/tensor.hpp"
#include "trc/tr_ops.hpp"

namespace trc {

struct SynthData {
  DenseTensor clean;
  DenseTensor noisy;
  TRCores cores;
};

//! Draws ring cores with i.i.d. standard normal entries, contracts them to the
//! clean tensor, and adds white Gaussian noise scaled so that
//! 10*log10(var(clean) / var(noise)) equals snr_db, both variances taken over
//! the realized entries. No snr means the noisy tensor is the clean one,
//! bitwise. Deterministic per seed.
SynthData gen_synthetic(const Shape& dims, const std::vector<index_t>& ranks,
                        std::optional<double> snr_db, std::uint64_t seed);

//! Uniformly random observation pattern keeping exactly
//! round((1 - mr) * numel) entries, without replacement, seeded. mr is the
//! missing ratio; mr that rounds to zero observations throws.
IndexSet sample_mask(const Shape& shape, double mr, std::uint64_t seed);

}  // namespace trc
