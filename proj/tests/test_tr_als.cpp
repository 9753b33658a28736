#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "trc/index_set.hpp"
#include "trc/metrics.hpp"
#include "trc/rng.hpp"
#include "trc/synth.hpp"
#include "trc/tr_als.hpp"

using namespace trc;

// init matters: the objective is multilinear, so a handful of restarts is the
// honest way to ask for exact recovery
static double best_rse(const DenseTensor& t, const IndexSet& obs, AlsOptions opt,
                       const DenseTensor& truth, AlsTrace* best_trace = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < 5; ++s) {
    opt.seed = 51 + s;
    auto [cores, trace] = tr_als_fit(t, obs, opt);
    double r = rse(tr_reconstruct(cores), truth);
    if (r < best) {
      best = r;
      if (best_trace) *best_trace = trace;
    }
  }
  return best;
}

TEST_CASE("alternating sweeps drive the fit onto exact data") {
  SynthData d = gen_synthetic({6, 6, 6}, {2}, std::nullopt, 50);
  IndexSet obs = IndexSet::full(d.clean.shape());
  AlsOptions opt;
  opt.ranks = {2};
  opt.ridge = 1e-12;
  opt.max_sweeps = 300;
  opt.tol = 1e-14;

  AlsTrace trace;
  double best = best_rse(d.clean, obs, opt, d.clean, &trace);
  REQUIRE_FALSE(trace.rmse.empty());
  CHECK(trace.rmse.back() < trace.rmse.front());
  CHECK(trace.rmse.back() < 1e-7);
  CHECK(best < 1e-6);

  opt.seed = 51;
  auto [cores, single] = tr_als_fit(d.clean, obs, opt);
  for (int n = 0; n < 3; ++n) {
    CHECK(cores.cores[static_cast<size_t>(n)].shape() == Shape{2, 6, 2});
  }
}

TEST_CASE("partial observation still recovers the ring") {
  SynthData d = gen_synthetic({6, 6, 6}, {2}, std::nullopt, 52);
  IndexSet obs = sample_mask(d.clean.shape(), 0.3, 53);
  AlsOptions opt;
  opt.ranks = {2, 2, 2};
  opt.ridge = 1e-10;
  opt.max_sweeps = 200;
  opt.tol = 1e-12;

  CHECK(best_rse(d.clean, obs, opt, d.clean) < 1e-4);
}

TEST_CASE("descent is reproducible per seed") {
  SynthData d = gen_synthetic({5, 4, 3}, {2}, 20.0, 55);
  IndexSet obs = sample_mask(d.clean.shape(), 0.2, 56);
  AlsOptions opt;
  opt.ranks = {2};
  opt.max_sweeps = 10;
  opt.seed = 57;
  auto [c1, t1] = tr_als_fit(d.noisy, obs, opt);
  auto [c2, t2] = tr_als_fit(d.noisy, obs, opt);
  REQUIRE(t1.rmse.size() == t2.rmse.size());
  for (size_t k = 0; k < t1.rmse.size(); ++k) CHECK(t1.rmse[k] == t2.rmse[k]);
  for (int n = 0; n < 3; ++n)
    for (index_t f = 0; f < c1.cores[static_cast<size_t>(n)].numel(); ++f)
      CHECK(c1.cores[static_cast<size_t>(n)][f] == c2.cores[static_cast<size_t>(n)][f]);
}

TEST_CASE("a huge ridge crushes the updated core") {
  SynthData d = gen_synthetic({4, 4, 4}, {2}, std::nullopt, 58);
  IndexSet obs = IndexSet::full(d.clean.shape());
  Rng rng(59);
  std::vector<DenseTensor> init;
  for (int n = 0; n < 3; ++n) {
    DenseTensor c(Shape{2, 4, 2});
    for (index_t f = 0; f < c.numel(); ++f) c[f] = rng.normal();
    init.push_back(std::move(c));
  }
  TRCores cores(std::move(init));
  tr_als_step_oracle(cores, d.clean, obs, 1, 1e12);
  double biggest = 0.0;
  for (index_t f = 0; f < cores.cores[1].numel(); ++f)
    biggest = std::max(biggest, std::abs(cores.cores[1][f]));
  CHECK(biggest < 1e-6);
}

TEST_CASE("empty slice makes the normal equations singular without ridge") {
  Shape shape{3, 2, 2};
  std::vector<index_t> flat;
  for (index_t f = 0; f < shape.numel(); ++f)
    if ((f % 3) != 2) flat.push_back(f);  // mode-0 slice 2 never observed
  IndexSet obs(shape, flat);
  DenseTensor t(shape, std::vector<double>(static_cast<size_t>(shape.numel()), 1.0));

  Rng rng(60);
  std::vector<DenseTensor> init;
  for (int n = 0; n < 3; ++n) {
    DenseTensor c(Shape{2, shape[n], 2});
    for (index_t f = 0; f < c.numel(); ++f) c[f] = rng.normal();
    init.push_back(std::move(c));
  }
  TRCores a(init);
  CHECK_THROWS_AS(tr_als_step_oracle(a, t, obs, 0, 0.0), std::runtime_error);

  TRCores b(init);
  tr_als_step_oracle(b, t, obs, 0, 1e-8);
  CHECK(b.cores[0].all_finite());
}

TEST_CASE("options are validated") {
  SynthData d = gen_synthetic({4, 4, 4}, {2}, std::nullopt, 61);
  IndexSet obs = IndexSet::full(d.clean.shape());
  AlsOptions opt;
  opt.ranks = {2, 3};  // neither one value nor one per bond
  CHECK_THROWS(tr_als_fit(d.clean, obs, opt));
  opt.ranks = {0};
  CHECK_THROWS(tr_als_fit(d.clean, obs, opt));
  opt.ranks = {};
  CHECK_THROWS(tr_als_fit(d.clean, obs, opt));
  opt.ranks = {2};
  CHECK_THROWS(tr_als_fit(d.clean, IndexSet(), opt));
}

TEST_CASE("underdetermined modes are warned about but still solved") {
  SynthData d = gen_synthetic({2, 2, 2}, {3}, std::nullopt, 62);
  IndexSet obs = sample_mask(d.clean.shape(), 0.5, 63);
  AlsOptions opt;
  opt.ranks = {3};
  opt.max_sweeps = 5;
  opt.ridge = 1e-6;
  opt.seed = 64;
  auto [cores, trace] = tr_als_fit(d.clean, obs, opt);
  for (const auto& c : cores.cores) CHECK(c.all_finite());
}
