#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trc/image.hpp"
#include "trc/index_set.hpp"
#include "trc/linalg.hpp"
#include "trc/metrics.hpp"
#include "trc/model.hpp"
#include "trc/moments.hpp"
#include "trc/rng.hpp"
#include "trc/synth.hpp"
#include "trc/tensor.hpp"
#include "trc/tr_als.hpp"
#include "trc/tr_ops.hpp"
#include "trc/vbi.hpp"

using namespace trc;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TRCores random_ring(Rng& rng, const std::vector<index_t>& dims,
                    const std::vector<index_t>& ranks) {
  int n = static_cast<int>(dims.size());
  std::vector<DenseTensor> cores;
  for (int k = 0; k < n; ++k) {
    DenseTensor c(Shape{ranks[static_cast<size_t>((k - 1 + n) % n)],
                        dims[static_cast<size_t>(k)], ranks[static_cast<size_t>(k)]});
    for (index_t f = 0; f < c.numel(); ++f) c[f] = rng.normal();
    cores.push_back(std::move(c));
  }
  return TRCores(std::move(cores));
}

double trace_oracle(const TRCores& g, const std::vector<index_t>& idx) {
  Eigen::MatrixXd p = g.slice(0, idx[0]);
  for (int n = 1; n < g.order(); ++n) p = p * g.slice(n, idx[static_cast<size_t>(n)]);
  return p.trace();
}

std::vector<index_t> unflat(const Shape& s, index_t flat) {
  std::vector<index_t> idx(static_cast<size_t>(s.order()));
  for (int n = 0; n < s.order(); ++n)
    idx[static_cast<size_t>(n)] = (flat / s.stride(n)) % s[n];
  return idx;
}

// every variational fit performed by the criteria lands here so that the
// invariant sweep (criterion 8) can audit all of them
struct VbiRun {
  std::string label;
  index_t r_init;
  FitTrace trace;
  ModelState state;
};
std::vector<VbiRun> g_runs;

std::pair<ModelState, FitTrace> tracked_fit(const std::string& label,
                                            const DenseTensor& t, const IndexSet& obs,
                                            const FitConfig& cfg) {
  auto res = fit(t, obs, cfg);
  index_t r = cfg.r_init > 0 ? cfg.r_init : std::min<index_t>(10, *std::min_element(
      t.shape().dims.begin(), t.shape().dims.end()));
  g_runs.push_back({label, r, res.second, res.first});
  return res;
}

// deterministic per-(cell, repetition) streams, independent for data, mask
// and initialization
std::uint64_t derive(std::uint64_t master, std::uint64_t purpose,
                     std::uint64_t cell, std::uint64_t rep) {
  return Rng::mix(Rng::mix(Rng::mix(master, purpose), cell), rep);
}

// ---------------------------------------------------------------- criterion 1

bool criterion1() {
  const auto t0 = Clock::now();
  Rng rng(12001);
  double worst = 0.0;
  const int trials = 1000;

  for (int trial = 0; trial < trials; ++trial) {
    int n = 2 + static_cast<int>(rng.index(4));
    std::vector<index_t> dims, ranks;
    for (int k = 0; k < n; ++k) {
      dims.push_back(1 + static_cast<index_t>(rng.index(4)));
      ranks.push_back(1 + static_cast<index_t>(rng.index(3)));
    }
    TRCores g = random_ring(rng, dims, ranks);
    DenseTensor x = tr_reconstruct(g);

    for (index_t f = 0; f < x.numel(); ++f)
      worst = std::max(worst, std::abs(x[f] - trace_oracle(g, unflat(x.shape(), f))));

    // cyclic shift of the ring equals the cyclically permuted tensor
    int s = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - 1)));
    std::vector<DenseTensor> rot;
    for (int k = 0; k < n; ++k) rot.push_back(g.cores[static_cast<size_t>((k + s) % n)]);
    DenseTensor y = tr_reconstruct(TRCores(std::move(rot)));
    DenseTensor xp = tensor_permute(x, s);
    for (index_t f = 0; f < y.numel(); ++f)
      worst = std::max(worst, std::abs(y[f] - xp[f]));

    // merging cores is associative, and the full merge closes the trace
    DenseTensor all = tcp(g.cores);
    int split = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - 1)));
    DenseTensor left = tcp(std::span<const DenseTensor>(g.cores.data(),
                                                        static_cast<size_t>(split)));
    std::vector<DenseTensor> parts = {left};
    for (int k = split; k < n; ++k) parts.push_back(g.cores[static_cast<size_t>(k)]);
    DenseTensor merged = tcp(parts);
    for (index_t f = 0; f < all.numel(); ++f)
      worst = std::max(worst, std::abs(merged[f] - all[f]));
    TRCores allg({all});
    for (index_t f = 0; f < x.numel(); ++f)
      worst = std::max(worst, std::abs(allg.slice(0, f).trace() - x[f]));

    // vec/ten and commutation-matrix identities
    DenseTensor back = ten(vec(x), x.shape());
    for (index_t f = 0; f < x.numel(); ++f)
      worst = std::max(worst, std::abs(back[f] - x[f]));
    int m = 1 + static_cast<int>(rng.index(4)), c = 1 + static_cast<int>(rng.index(4));
    Eigen::MatrixXd a(m, c);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < c; ++j) a(i, j) = rng.normal();
    Eigen::MatrixXd at = a.transpose();
    Eigen::VectorXd va = Eigen::Map<Eigen::VectorXd>(a.data(), m * c);
    Eigen::VectorXd vat = Eigen::Map<Eigen::VectorXd>(at.data(), m * c);
    worst = std::max(worst,
                     (commutation_matrix(m, c) * va - vat).cwiseAbs().maxCoeff());
  }

  double secs = elapsed(t0);
  bool pass = worst < 1e-12 && secs < 10.0;
  report(1, pass, fmt("algebra exactness: max abs err %.2e over %d trials (%.1fs)",
                      worst, trials, secs));
  return pass;
}

// ---------------------------------------------------------------- criterion 2

bool criterion2() {
  const auto t0 = Clock::now();
  const int draws = 100000;
  double worst_gram = 0.0, worst_second = 0.0, worst_zero = 0.0;

  for (std::uint64_t inst = 0; inst < 2; ++inst) {
    SynthData d = gen_synthetic({2, 2, 2}, {2}, std::nullopt, 500 + inst);
    std::vector<index_t> kept;
    Rng mask_rng(600 + inst);
    for (index_t f = 0; f < 8; ++f)
      if (mask_rng.uniform() < 0.75 || f == 0) kept.push_back(f);
    IndexSet obs(d.clean.shape(), kept);
    ModelState s = init_state(d.clean, obs, 2, Hyperpriors{}, 700 + inst);
    Rng rng(800 + inst);
    for (auto& core : s.cores)
      for (auto& v : core.cov) {
        Eigen::MatrixXd b(4, 4);
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) b(i, j) = 0.15 * rng.normal();
        v = b * b.transpose() + 0.02 * Eigen::MatrixXd::Identity(4, 4);
      }

    std::vector<std::vector<Eigen::MatrixXd>> chol(3);
    for (int n = 0; n < 3; ++n)
      for (index_t i = 0; i < 2; ++i)
        chol[static_cast<size_t>(n)].push_back(
            Eigen::LLT<Eigen::MatrixXd>(s.cores[static_cast<size_t>(n)].cov[static_cast<size_t>(i)])
                .matrixL());

    auto sample_slice = [&](Rng& r, int n, index_t i) {
      Eigen::VectorXd z(4);
      for (int k = 0; k < 4; ++k) z(k) = r.normal();
      Eigen::MatrixXd ms = s.cores[static_cast<size_t>(n)].mean_slice(i);
      Eigen::VectorXd g = Eigen::Map<Eigen::VectorXd>(ms.data(), 4) +
                          chol[static_cast<size_t>(n)][static_cast<size_t>(i)] * z;
      return Eigen::MatrixXd(Eigen::Map<Eigen::MatrixXd>(g.data(), 2, 2));
    };

    // per-mode Monte Carlo of the subchain row moments; rows are indexed by
    // the cyclic digits of the two complementary modes
    Rng mc(900 + inst);
    for (int n = 0; n < 3; ++n) {
      int m1 = (n + 1) % 3, m2 = (n + 2) % 3;
      std::vector<Eigen::MatrixXd> acc(4, Eigen::MatrixXd::Zero(4, 4));
      for (int dr = 0; dr < draws; ++dr) {
        Eigen::MatrixXd g1[2] = {sample_slice(mc, m1, 0), sample_slice(mc, m1, 1)};
        Eigen::MatrixXd g2[2] = {sample_slice(mc, m2, 0), sample_slice(mc, m2, 1)};
        for (index_t d1 = 0; d1 < 2; ++d1)
          for (index_t d2 = 0; d2 < 2; ++d2) {
            Eigen::MatrixXd st = (g1[d1] * g2[d2]).transpose();
            Eigen::VectorXd row = Eigen::Map<Eigen::VectorXd>(st.data(), 4);
            acc[static_cast<size_t>(d1 + 2 * d2)] += row * row.transpose();
          }
      }
      for (index_t i = 0; i < 2; ++i) {
        if (obs.bucket(n, i).empty()) continue;
        Eigen::MatrixXd sampled = Eigen::MatrixXd::Zero(4, 4);
        for (index_t f : obs.bucket(n, i))
          sampled += acc[static_cast<size_t>(obs.cyclic_row(f, n))];
        sampled /= static_cast<double>(draws);
        Eigen::MatrixXd analytic = expected_subchain_gram(s, obs, n, i);
        worst_gram = std::max(worst_gram,
                              (sampled - analytic).norm() / analytic.norm());
      }
    }

    // per-entry second moment E[xhat^2] against the chained Kronecker moments
    std::vector<double> acc2(8, 0.0);
    Rng mc2(1000 + inst);
    for (int dr = 0; dr < draws; ++dr) {
      Eigen::MatrixXd g[3][2];
      for (int n = 0; n < 3; ++n)
        for (index_t i = 0; i < 2; ++i) g[n][i] = sample_slice(mc2, n, i);
      for (index_t f = 0; f < 8; ++f) {
        auto idx = unflat(d.clean.shape(), f);
        double x = (g[0][idx[0]] * g[1][idx[1]] * g[2][idx[2]]).trace();
        acc2[static_cast<size_t>(f)] += x * x;
      }
    }
    MomentTable w = moment_table(s);
    for (index_t f = 0; f < 8; ++f) {
      auto idx = unflat(d.clean.shape(), f);
      Eigen::MatrixXd chain = w[0][static_cast<size_t>(idx[0])] *
                              w[1][static_cast<size_t>(idx[1])] *
                              w[2][static_cast<size_t>(idx[2])];
      double analytic = chain.trace();
      double sampled = acc2[static_cast<size_t>(f)] / draws;
      worst_second = std::max(worst_second, std::abs(sampled - analytic) / analytic);
    }

    // zero covariance: the chain must reduce to the deterministic Gram
    ModelState z = s;
    for (auto& core : z.cores)
      for (auto& v : core.cov) v.setZero();
    TRCores mean = z.mean_cores();
    for (int n = 0; n < 3; ++n) {
      for (index_t i = 0; i < 2; ++i) {
        if (obs.bucket(n, i).empty()) continue;
        Eigen::MatrixXd det = Eigen::MatrixXd::Zero(4, 4);
        for (index_t f : obs.bucket(n, i)) {
          auto idx = unflat(d.clean.shape(), f);
          Eigen::MatrixXd st =
              (mean.slice((n + 1) % 3, idx[static_cast<size_t>((n + 1) % 3)]) *
               mean.slice((n + 2) % 3, idx[static_cast<size_t>((n + 2) % 3)]))
                  .transpose();
          Eigen::VectorXd row = Eigen::Map<Eigen::VectorXd>(st.data(), 4);
          det += row * row.transpose();
        }
        Eigen::MatrixXd got = expected_subchain_gram(z, obs, n, i);
        double scale = std::max(1.0, det.cwiseAbs().maxCoeff());
        worst_zero = std::max(worst_zero, (got - det).cwiseAbs().maxCoeff() / scale);
      }
    }
    MomentTable wz = moment_table(z);
    for (index_t f = 0; f < 8; ++f) {
      auto idx = unflat(d.clean.shape(), f);
      double second = (wz[0][static_cast<size_t>(idx[0])] *
                       wz[1][static_cast<size_t>(idx[1])] *
                       wz[2][static_cast<size_t>(idx[2])])
                          .trace();
      double xhat = tr_entry(mean, idx);
      worst_zero = std::max(worst_zero,
                            std::abs(second - xhat * xhat) / std::max(1.0, xhat * xhat));
    }
  }

  double secs = elapsed(t0);
  bool pass = worst_gram < 0.02 && worst_second < 0.02 && worst_zero < 1e-12 &&
              secs < 60.0;
  report(2, pass,
         fmt("chain moments vs 1e5-draw Monte Carlo: gram %.3f%%, second moment "
             "%.3f%%, zero-cov err %.2e (%.1fs)",
             100 * worst_gram, 100 * worst_second, worst_zero, secs));
  return pass;
}

// ---------------------------------------------------------------- criterion 3

bool criterion3() {
  bool shape_exact = true;
  double worst_scalar = 0.0, worst_als = 0.0;

  // Gamma shape parameters are exact counting identities
  {
    SynthData d = gen_synthetic({3, 4, 2}, {2}, 15.0, 42);
    IndexSet obs = sample_mask(d.clean.shape(), 0.3, 43);
    ModelState s = init_state(d.noisy, obs, 3, Hyperpriors{}, 44);
    for (int n = 0; n < 3; ++n) {
      update_lambda(s, n);
      double want = s.prior.c + 0.5 * static_cast<double>(s.dims[n] * 3 +
                                                          s.dims[(n + 1) % 3] * 3);
      for (index_t r = 0; r < 3; ++r)
        shape_exact &= s.lambda[static_cast<size_t>(n)].c_hat(r) == want;
    }
    update_tau(s, d.noisy, obs);
    shape_exact &= s.tau.a_hat == s.prior.a + 0.5 * static_cast<double>(obs.count());
  }

  // all-rank-one ring: the Gaussian update is a scalar ridge solve
  {
    SynthData d = gen_synthetic({4, 3, 2}, {1}, std::nullopt, 45);
    IndexSet obs = sample_mask(d.clean.shape(), 0.2, 46);
    ModelState s = init_state(d.clean, obs, 1, Hyperpriors{}, 47);
    for (auto& core : s.cores)
      for (auto& v : core.cov) v.setZero();
    s.tau.a_hat = 4.0;
    s.tau.b_hat = 2.0;
    for (auto& l : s.lambda) {
      l.c_hat = Eigen::VectorXd::Constant(1, 3.0);
      l.d_hat = Eigen::VectorXd::Constant(1, 1.2);
    }
    const double e_tau = 2.0, e_lam = 3.0 / 1.2;
    for (int n = 0; n < 3; ++n) {
      ModelState before = s;
      update_core_factor(s, d.clean, obs, n);
      for (index_t i = 0; i < s.dims[n]; ++i) {
        double s2 = 0.0, st = 0.0;
        for (index_t f : obs.bucket(n, i)) {
          Eigen::MatrixXd p;
          auto idx = unflat(d.clean.shape(), f);
          for (int off = 1; off < 3; ++off) {
            int l = (n + off) % 3;
            Eigen::MatrixXd sl = before.cores[static_cast<size_t>(l)].mean_slice(
                idx[static_cast<size_t>(l)]);
            p = off == 1 ? sl : Eigen::MatrixXd(p * sl);
          }
          s2 += p(0, 0) * p(0, 0);
          st += d.clean[f] * p(0, 0);
        }
        double v = 1.0 / (e_tau * s2 + e_lam * e_lam);
        double m = e_tau * v * st;
        worst_scalar = std::max(
            worst_scalar,
            std::abs(s.cores[static_cast<size_t>(n)].cov[static_cast<size_t>(i)](0, 0) - v) /
                v);
        worst_scalar = std::max(
            worst_scalar, std::abs(s.cores[static_cast<size_t>(n)].mean_slice(i)(0, 0) - m) /
                              std::max(1e-12, std::abs(m)));
      }
      s = before;
    }
  }

  // zero covariance + unit noise precision + lambda product = ridge:
  // the Gaussian mean is the deterministic least-squares update
  {
    const double ridge = 1e-2;
    SynthData d = gen_synthetic({4, 3, 3}, {2}, 25.0, 48);
    IndexSet obs = IndexSet::full(d.clean.shape());
    ModelState s = init_state(d.noisy, obs, 2, Hyperpriors{}, 49);
    for (auto& core : s.cores)
      for (auto& v : core.cov) v.setZero();
    s.tau.a_hat = 3.0;
    s.tau.b_hat = 3.0;
    for (auto& l : s.lambda) {
      l.c_hat = Eigen::VectorXd::Constant(2, std::sqrt(ridge));
      l.d_hat = Eigen::VectorXd::Constant(2, 1.0);
    }
    for (int n = 0; n < 3; ++n) {
      ModelState vb = s;
      update_core_factor(vb, d.noisy, obs, n);
      TRCores als = s.mean_cores();
      tr_als_step_oracle(als, d.noisy, obs, n, ridge);
      for (index_t i = 0; i < s.dims[n]; ++i) {
        Eigen::MatrixXd a = vb.cores[static_cast<size_t>(n)].mean_slice(i);
        Eigen::MatrixXd b = als.slice(n, i);
        worst_als = std::max(worst_als, (a - b).cwiseAbs().maxCoeff() /
                                            std::max(1.0, b.cwiseAbs().maxCoeff()));
      }
    }
  }

  bool pass = shape_exact && worst_scalar < 1e-12 && worst_als < 1e-10;
  report(3, pass,
         fmt("update fidelity: shape identities %s, scalar ridge err %.2e, "
             "least-squares agreement %.2e",
             shape_exact ? "exact" : "BROKEN", worst_scalar, worst_als));
  return pass;
}

// ---------------------------------------------------------------- criterion 4

bool criterion4() {
  const auto t0 = Clock::now();
  const std::uint64_t master = 20260819;
  const int reps = 10;
  std::vector<std::vector<index_t>> finals;

  for (int rep = 0; rep < reps; ++rep) {
    SynthData d = gen_synthetic({10, 10, 10, 10}, {3}, 20.0,
                                derive(master, 1, 0, static_cast<std::uint64_t>(rep)));
    IndexSet obs = sample_mask(d.clean.shape(), 0.1,
                               derive(master, 2, 0, static_cast<std::uint64_t>(rep)));
    FitConfig cfg;
    cfg.r_init = 8;
    cfg.max_iters = 200;
    cfg.tol = 0.0;  // rank shedding outlasts the noise-precision plateau
    cfg.seed = derive(master, 3, 0, static_cast<std::uint64_t>(rep));
    auto [state, trace] = tracked_fit(fmt("recovery rep %d", rep), d.noisy, obs, cfg);
    finals.push_back(state.ranks());
    std::fprintf(stderr, "  rank recovery rep %d: ranks %lld,%lld,%lld,%lld (%.0fs)\n",
                 rep, static_cast<long long>(finals.back()[0]),
                 static_cast<long long>(finals.back()[1]),
                 static_cast<long long>(finals.back()[2]),
                 static_cast<long long>(finals.back()[3]), elapsed(t0));
  }

  RankStats stats = air_var(finals);
  bool pass = stats.air >= 2.75 && stats.air <= 3.25 && stats.var <= 0.5;
  report(4, pass,
         fmt("rank recovery: AIR %.3f in [2.75,3.25], Var %.3f <= 0.5 "
             "(10 runs, %.0fs)",
             stats.air, stats.var, elapsed(t0)));
  return pass;
}

// ---------------------------------------------------------------- criterion 5

// reproducibility probes for criterion 8 reuse these
DenseTensor g_c5_tensor;
IndexSet g_c5_obs;
FitConfig g_c5_cfg;

bool criterion5() {
  const auto t0 = Clock::now();
  SynthData d = gen_synthetic({6, 6, 6}, {2}, std::nullopt, 78);
  IndexSet obs = IndexSet::full(d.clean.shape());
  FitConfig cfg;
  cfg.r_init = 4;
  cfg.max_iters = 200;
  cfg.tol = 0.0;
  cfg.seed = 1;
  cfg.priors.b = 1e-9;  // start from a confident noise precision
  auto [state, trace] = tracked_fit("noiseless recovery", d.clean, obs, cfg);

  g_c5_tensor = d.clean;
  g_c5_obs = obs;
  g_c5_cfg = cfg;

  std::vector<index_t> ranks = state.ranks();
  double rmse = trace.items.empty() ? std::nan("") : trace.items.back().obs_rmse;
  bool pass = ranks == std::vector<index_t>{2, 2, 2} && rmse < 1e-6;
  report(5, pass,
         fmt("noiseless recovery: ranks %lld,%lld,%lld (want 2,2,2), observed rmse "
             "%.2e within %d sweeps (%.0fs)",
             static_cast<long long>(ranks[0]), static_cast<long long>(ranks[1]),
             static_cast<long long>(ranks[2]), rmse,
             static_cast<int>(trace.items.size()), elapsed(t0)));
  return pass;
}

// ---------------------------------------------------------------- criterion 6

DenseTensor g_c6_tensor;
IndexSet g_c6_obs;
FitConfig g_c6_cfg;
ModelState g_c6_state;
FitTrace g_c6_trace;
bool g_c6_set = false;

bool criterion6() {
  const auto t0 = Clock::now();
  const std::uint64_t master = 611;
  const std::vector<double> mrs = {0.1, 0.3, 0.5};
  const int reps = 10;
  std::vector<double> vbi_median, als_median;

  for (size_t cell = 0; cell < mrs.size(); ++cell) {
    std::vector<double> vbi_rse, als_rse;
    for (int rep = 0; rep < reps; ++rep) {
      SynthData d = gen_synthetic({10, 10, 10, 10}, {3}, 30.0,
                                  derive(master, 1, cell, static_cast<std::uint64_t>(rep)));
      IndexSet obs = sample_mask(d.clean.shape(), mrs[cell],
                                 derive(master, 2, cell, static_cast<std::uint64_t>(rep)));
      std::uint64_t fit_seed = derive(master, 3, cell, static_cast<std::uint64_t>(rep));

      FitConfig cfg;
      cfg.r_init = 6;
      cfg.max_iters = 200;
      cfg.seed = fit_seed;
      auto [state, trace] =
          tracked_fit(fmt("completion mr %.1f rep %d", mrs[cell], rep), d.noisy, obs, cfg);
      vbi_rse.push_back(rse(expected_reconstruction(state), d.clean));

      AlsOptions opt;
      opt.ranks = {3};
      opt.seed = fit_seed;
      auto [cores, als_trace] = tr_als_fit(d.noisy, obs, opt);
      als_rse.push_back(rse(tr_reconstruct(cores), d.clean));

      if (cell == 2 && rep == 0) {
        g_c6_tensor = d.noisy;
        g_c6_obs = obs;
        g_c6_cfg = cfg;
        g_c6_state = state;
        g_c6_trace = trace;
        g_c6_set = true;
      }
    }
    vbi_median.push_back(median(vbi_rse));
    als_median.push_back(median(als_rse));
    std::fprintf(stderr, "  completion mr %.1f: vbi median rse %.4f, als %.4f (%.0fs)\n",
                 mrs[cell], vbi_median.back(), als_median.back(), elapsed(t0));
  }

  bool close = true, monotone = true;
  for (size_t c = 0; c < mrs.size(); ++c) {
    close &= vbi_median[c] <= als_median[c] + 0.02;
    if (c > 0) monotone &= vbi_median[c] + 1e-12 >= vbi_median[c - 1];
  }
  bool pass = close && monotone;
  report(6, pass,
         fmt("completion quality: median rse vbi {%.4f, %.4f, %.4f} vs als "
             "{%.4f, %.4f, %.4f} at mr {0.1,0.3,0.5}; within +0.02 %s, "
             "nondecreasing %s (%.0fs)",
             vbi_median[0], vbi_median[1], vbi_median[2], als_median[0],
             als_median[1], als_median[2], close ? "yes" : "NO",
             monotone ? "yes" : "NO", elapsed(t0)));
  return pass;
}

// ---------------------------------------------------------------- criterion 7

DenseTensor benchmark_image() {
  DenseTensor img(Shape{64, 64, 3});
  for (index_t k = 0; k < 3; ++k)
    for (index_t c = 0; c < 64; ++c)
      for (index_t r = 0; r < 64; ++r) {
        double x = static_cast<double>(r) / 63.0, y = static_cast<double>(c) / 63.0;
        double kk = static_cast<double>(k);
        double v = 0.45 + 0.22 * std::sin(6.2 * x + 1.3 * kk) * std::cos(4.4 * y) +
                   0.16 * std::cos(2.6 * (x + y) + 0.8 * kk) + 0.1 * (x - y);
        img[r + c * 64 + k * 64 * 64] = std::min(1.0, std::max(0.0, v));
      }
  return img;
}

bool criterion7() {
  const auto t0 = Clock::now();
  fs::path dir = fs::temp_directory_path() / "trc_acceptance";
  fs::create_directories(dir);
  std::string png = (dir / "bench64.png").string();
  save_image(benchmark_image(), png);
  DenseTensor truth = load_image(png);  // 8-bit quantized reference

  Shape high = tensorize_preset(truth.shape());
  DenseTensor t = tensorize(truth, high);
  std::vector<double> gains;

  for (int rep = 0; rep < 10; ++rep) {
    IndexSet obs = sample_mask(high, 0.7, 3000 + static_cast<std::uint64_t>(rep));

    double obs_mean = 0.0;
    for (index_t f : obs.flat()) obs_mean += t[f];
    obs_mean /= static_cast<double>(obs.count());
    DenseTensor filled(high, obs_mean);
    for (index_t f : obs.flat()) filled[f] = t[f];
    double psnr_mean = psnr(detensorize(filled, truth.shape()), truth, 1.0);

    FitConfig cfg;
    cfg.r_init = 6;
    cfg.max_iters = 50;
    cfg.seed = 4000 + static_cast<std::uint64_t>(rep);
    cfg.priors.b = 1e-11;  // entries are O(0.25): needs the stronger head start
    auto [state, trace] = tracked_fit(fmt("image rep %d", rep), t, obs, cfg);
    DenseTensor rec = complete(state, t, obs, true);
    double psnr_vbi = psnr(detensorize(rec, truth.shape()), truth, 1.0);

    gains.push_back(psnr_vbi - psnr_mean);
    std::fprintf(stderr, "  image rep %d: %.2f dB vs mean-fill %.2f dB (%.0fs)\n", rep,
                 psnr_vbi, psnr_mean, elapsed(t0));
  }

  double med = median(gains);
  double secs = elapsed(t0);
  bool pass = med >= 5.0 && secs < 900.0;
  report(7, pass,
         fmt("image completion at 70%% missing: median gain over mean-fill "
             "%.2f dB (>= 5 dB), order-%d tensorization (%.0fs)",
             med, high.order(), secs));
  return pass;
}

// ---------------------------------------------------------------- criterion 8

bool criterion8() {
  bool monotone = true, spd = true, gammas = true, reproducible = true;
  double min_eig = 0.0;

  for (const auto& run : g_runs) {
    std::vector<index_t> prev(run.state.ranks().size(), run.r_init);
    for (const auto& item : run.trace.items) {
      for (size_t b = 0; b < item.ranks.size(); ++b)
        monotone &= item.ranks[b] <= prev[b];
      prev = item.ranks;
    }

    for (const auto& core : run.state.cores)
      for (const auto& v : core.cov) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v, Eigen::EigenvaluesOnly);
        double lo = es.eigenvalues().minCoeff();
        double hi = es.eigenvalues().maxCoeff();
        min_eig = std::min(min_eig, lo);
        spd &= lo > -1e-10 * std::max(1.0, hi);
        spd &= (v - v.transpose()).cwiseAbs().maxCoeff() == 0.0;
      }

    gammas &= run.state.tau.a_hat > 0 && run.state.tau.b_hat > 0;
    gammas &= run.state.tau.b_hat >= run.state.prior.b;
    gammas &= run.state.tau.a_hat >= run.state.prior.a;
    for (const auto& l : run.state.lambda) {
      gammas &= (l.c_hat.array() > 0).all() && (l.d_hat.array() > 0).all();
      gammas &= (l.d_hat.array() >= run.state.prior.d).all();
    }
  }

  // re-run two representative fits and demand bitwise identical trajectories
  auto rerun_matches = [](const DenseTensor& t, const IndexSet& obs,
                          const FitConfig& cfg, const FitTrace& trace,
                          const ModelState& state) {
    auto [s2, t2] = fit(t, obs, cfg);
    if (t2.items.size() != trace.items.size()) return false;
    for (size_t k = 0; k < trace.items.size(); ++k) {
      if (t2.items[k].e_tau != trace.items[k].e_tau) return false;
      if (t2.items[k].obs_rmse != trace.items[k].obs_rmse) return false;
      if (t2.items[k].ranks != trace.items[k].ranks) return false;
    }
    for (size_t n = 0; n < state.cores.size(); ++n)
      for (index_t f = 0; f < state.cores[n].mean.numel(); ++f)
        if (s2.cores[n].mean[f] != state.cores[n].mean[f]) return false;
    return true;
  };
  const VbiRun* c5 = nullptr;
  for (const auto& run : g_runs)
    if (run.label == "noiseless recovery") c5 = &run;
  if (c5)
    reproducible &= rerun_matches(g_c5_tensor, g_c5_obs, g_c5_cfg, c5->trace, c5->state);
  if (g_c6_set)
    reproducible &= rerun_matches(g_c6_tensor, g_c6_obs, g_c6_cfg, g_c6_trace, g_c6_state);

  bool pass = monotone && spd && gammas && reproducible && !g_runs.empty();
  report(8, pass,
         fmt("invariants over %zu fits: ranks nonincreasing %s, covariances SPD %s "
             "(min eig %.1e), Gamma parameters positive with b >= prior %s, "
             "bit-identical reruns %s",
             g_runs.size(), monotone ? "yes" : "NO", spd ? "yes" : "NO", min_eig,
             gammas ? "yes" : "NO", reproducible ? "yes" : "NO"));
  return pass;
}

// ---------------------------------------------------------------- criterion 9

bool criterion9() {
  fs::path dir = fs::temp_directory_path() / "trc_acceptance" / "ckpt";
  std::vector<std::pair<index_t, index_t>> combos = {{8, 2}, {8, 4}, {16, 2}, {16, 4}};
  std::vector<double> measured, predicted;

  for (auto [i, r] : combos) {
    SynthData d = gen_synthetic({i, i, i}, {r}, std::nullopt, 5000 + i * 10 + r);
    IndexSet obs = IndexSet::full(d.clean.shape());
    FitConfig cfg;
    cfg.r_init = r;
    cfg.max_iters = 2;
    cfg.tol = 0.0;
    cfg.prune_threshold = 0.0;  // keep the bond dimensions fixed
    cfg.seed = 6000 + static_cast<std::uint64_t>(i * 10 + r);
    auto [state, trace] = fit(d.clean, obs, cfg);

    fs::path sub = dir / fmt("i%lld_r%lld", static_cast<long long>(i),
                             static_cast<long long>(r));
    fs::remove_all(sub);
    save_checkpoint(state, sub.string());
    double bytes = 0;
    for (const auto& e : fs::recursive_directory_iterator(sub))
      if (e.is_regular_file()) bytes += static_cast<double>(e.file_size());
    measured.push_back(bytes);
    double rr = static_cast<double>(r) * static_cast<double>(r);
    predicted.push_back(3.0 * 8.0 * static_cast<double>(i) * (rr * rr + rr));
  }

  bool pass = true;
  std::string ratios;
  for (size_t k = 1; k < combos.size(); ++k) {
    double got = measured[k] / measured[0];
    double want = predicted[k] / predicted[0];
    pass &= got / want <= 2.0 && want / got <= 2.0;
    ratios += fmt("%s(%lld,%lld) %.2fx vs %.2fx", k > 1 ? ", " : "",
                  static_cast<long long>(combos[k].first),
                  static_cast<long long>(combos[k].second), got, want);
  }
  report(9, pass,
         fmt("checkpoint storage vs covariance-dominated model: measured/predicted "
             "ratios %s (within 2x)",
             ratios.c_str()));
  return pass;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= criterion1();
  ok &= criterion2();
  ok &= criterion3();
  ok &= criterion4();
  ok &= criterion5();
  ok &= criterion6();
  ok &= criterion7();
  ok &= criterion8();
  ok &= criterion9();
  std::printf("%s\n", ok ? "acceptance: all criteria passed"
                         : "acceptance: FAILURES above");
  return ok ? 0 : 1;
}
