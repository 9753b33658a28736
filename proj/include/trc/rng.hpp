#pragma once

#include <cstdint>
#include <random>

namespace trc {

//! Seeded generator with an explicit Box-Muller normal so that streams are
//! reproducible bit-for-bit across standard library implementations
//! (std::normal_distribution is not pinned by the standard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  //! uniform in [0, 1)
  double uniform();
  //! standard normal
  double normal();
  //! uniform integer in [0, n)
  std::uint64_t index(std::uint64_t n);

  //! decorrelated substream for (cell, repetition) style derivations
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace trc
