#include "trc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "trc/rng.hpp"

namespace trc {

namespace {

//! population mean/variance in one pass
std::pair<double, double> moments(const DenseTensor& t) {
  double mean = 0.0;
  for (index_t i = 0; i < t.numel(); ++i) mean += t[i];
  mean /= static_cast<double>(t.numel());
  double var = 0.0;
  for (index_t i = 0; i < t.numel(); ++i) {
    const double d = t[i] - mean;
    var += d * d;
  }
  return {mean, var / static_cast<double>(t.numel())};
}

}  // namespace

SynthData gen_synthetic(const Shape& dims, const std::vector<index_t>& ranks,
                        std::optional<double> snr_db, std::uint64_t seed) {
  const int N = dims.order();
  if (N < 2) throw std::invalid_argument("gen_synthetic: need at least 2 modes");
  std::vector<index_t> r = ranks;
  if (r.size() == 1) r.assign(static_cast<size_t>(N), r[0]);
  if (static_cast<int>(r.size()) != N)
    throw std::invalid_argument("gen_synthetic: need one rank per bond (or one overall)");
  for (index_t v : r)
    if (v < 1) throw std::invalid_argument("gen_synthetic: ranks must be >= 1");

  Rng rng(seed);
  std::vector<DenseTensor> cs;
  cs.reserve(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    DenseTensor c(Shape{r[static_cast<size_t>((n - 1 + N) % N)], dims[n],
                        r[static_cast<size_t>(n)]});
    for (index_t j = 0; j < c.numel(); ++j) c[j] = rng.normal();
    cs.push_back(std::move(c));
  }
  TRCores cores(std::move(cs));
  DenseTensor clean = tr_reconstruct(cores);
  DenseTensor noisy = clean;

  if (snr_db) {
    DenseTensor e(dims);
    for (index_t j = 0; j < e.numel(); ++j) e[j] = rng.normal();
    const double sig_var = moments(clean).second;
    const double noise_var = moments(e).second;
    if (noise_var > 0.0) {
      const double target_sd =
          std::sqrt(sig_var) * std::pow(10.0, -*snr_db / 20.0);
      const double scale = target_sd / std::sqrt(noise_var);
      for (index_t j = 0; j < noisy.numel(); ++j) noisy[j] += scale * e[j];
    }
  }
  return {std::move(clean), std::move(noisy), std::move(cores)};
}

IndexSet sample_mask(const Shape& shape, double mr, std::uint64_t seed) {
  if (!(mr >= 0.0 && mr < 1.0))
    throw std::invalid_argument("sample_mask: missing ratio must be in [0,1)");
  const index_t total = shape.numel();
  const index_t kept = static_cast<index_t>(
      std::llround((1.0 - mr) * static_cast<double>(total)));
  if (kept <= 0)
    throw std::invalid_argument("sample_mask: missing ratio leaves zero observations");

  std::vector<index_t> perm(static_cast<size_t>(total));
  std::iota(perm.begin(), perm.end(), index_t{0});
  Rng rng(seed);
  for (index_t j = 0; j < kept; ++j)
    std::swap(perm[static_cast<size_t>(j)],
              perm[static_cast<size_t>(j + rng.index(total - j))]);
  perm.resize(static_cast<size_t>(kept));
  std::sort(perm.begin(), perm.end());
  return IndexSet(shape, std::move(perm));
}

}  // namespace trc
