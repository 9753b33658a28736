#include "trc/tr_als.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <Eigen/Dense>

#include "trc/rng.hpp"

namespace trc {

namespace {

//! Calls fn(flat, s) for every observed entry of slice i of mode n, where s
//! is the deterministic subchain slice (R_n x R_{n-1}) of the complementary
//! indices, walking the cyclically sorted bucket with cached suffix products.
template <typename Fn>
void walk_bucket(const TRCores& cores, const IndexSet& obs, int n, index_t i, Fn fn) {
  const Shape& shape = obs.shape();
  const int N = cores.order();
  const int K = N - 1;
  const index_t rl = cores.left_rank(n);
  const auto& bucket = obs.bucket(n, i);
  if (bucket.empty()) return;

  std::vector<Eigen::MatrixXd> suf(static_cast<size_t>(K) + 1);
  suf[static_cast<size_t>(K)] = Eigen::MatrixXd::Identity(rl, rl);
  const int m0 = (n + 1) % N;
  Eigen::MatrixXd s(cores.rank(n), rl);

  index_t digit[64], prev[64];
  bool first = true;
  auto rebuild = [&](int from) {
    for (int p = from; p >= 1; --p) {
      const int m = (n + 1 + p) % N;
      suf[static_cast<size_t>(p)] =
          cores.slice(m, digit[p]) * suf[static_cast<size_t>(p) + 1];
    }
  };
  for (index_t flat : bucket) {
    for (int p = 0; p < K; ++p) {
      const int m = (n + 1 + p) % N;
      digit[p] = (flat / shape.stride(m)) % shape[m];
    }
    if (first) {
      rebuild(K - 1);
      first = false;
    } else {
      for (int p = K - 1; p >= 1; --p)
        if (digit[p] != prev[p]) { rebuild(p); break; }
    }
    s.noalias() = cores.slice(m0, digit[0]) * suf[1];
    fn(flat, s);
    for (int p = 0; p < K; ++p) prev[p] = digit[p];
  }
}

double observed_rmse(const TRCores& cores, const DenseTensor& t, const IndexSet& obs) {
  double sq = 0.0;
  for (index_t i = 0; i < obs.shape()[0]; ++i) {
    walk_bucket(cores, obs, 0, i, [&](index_t flat, const Eigen::MatrixXd& s) {
      const double xh = Eigen::MatrixXd(cores.slice(0, i)).cwiseProduct(s.transpose()).sum();
      const double r = t[flat] - xh;
      sq += r * r;
    });
  }
  return std::sqrt(sq / static_cast<double>(obs.count()));
}

}  // namespace

void tr_als_step_oracle(TRCores& cores, const DenseTensor& t, const IndexSet& obs,
                        int n, double ridge) {
  const index_t rl = cores.left_rank(n);
  const index_t rr = cores.rank(n);
  const index_t k = rl * rr;
  const index_t extent = cores.dims()[n];

  for (index_t i = 0; i < extent; ++i) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd row(k);
    walk_bucket(cores, obs, n, i, [&](index_t flat, const Eigen::MatrixXd& s) {
      for (index_t b = 0; b < rr; ++b)
        for (index_t a = 0; a < rl; ++a)
          row[a + b * rl] = s(b, a);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(row);
      rhs += t[flat] * row;
    });
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success ||
        ldlt.vectorD().minCoeff() <= dmax * 1e-14)
      throw std::runtime_error("tr_als: singular normal equations at mode " +
                               std::to_string(n) + " slice " + std::to_string(i) +
                               " (add ridge)");
    Eigen::VectorXd x = ldlt.solve(rhs);
    auto slice = cores.slice(n, i);
    for (index_t b = 0; b < rr; ++b)
      for (index_t a = 0; a < rl; ++a)
        slice(a, b) = x[a + b * rl];
  }
}

std::pair<TRCores, AlsTrace> tr_als_fit(const DenseTensor& t, const IndexSet& obs,
                                        const AlsOptions& options) {
  if (t.order() < 2) throw std::invalid_argument("tr_als_fit: tensor must be at least 2-order");
  if (!(obs.shape() == t.shape()))
    throw std::invalid_argument("tr_als_fit: mask shape differs from tensor");
  if (obs.empty()) throw std::invalid_argument("tr_als_fit: no observed entries");

  const int N = t.order();
  std::vector<index_t> ranks = options.ranks;
  if (ranks.size() == 1) ranks.assign(static_cast<size_t>(N), ranks[0]);
  if (static_cast<int>(ranks.size()) != N)
    throw std::invalid_argument("tr_als_fit: need one rank per bond (or one overall)");
  for (index_t r : ranks)
    if (r < 1) throw std::invalid_argument("tr_als_fit: ranks must be >= 1");

  Rng rng(options.seed);
  std::vector<DenseTensor> init;
  init.reserve(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    DenseTensor c(Shape{ranks[static_cast<size_t>((n - 1 + N) % N)], t.shape()[n],
                        ranks[static_cast<size_t>(n)]});
    for (index_t j = 0; j < c.numel(); ++j) c[j] = rng.normal();
    init.push_back(std::move(c));
  }
  TRCores cores(std::move(init));

  for (int n = 0; n < N; ++n) {
    const index_t k = cores.left_rank(n) * cores.rank(n);
    index_t least = obs.count();
    for (index_t i = 0; i < t.shape()[n]; ++i)
      least = std::min(least, static_cast<index_t>(obs.bucket(n, i).size()));
    if (least < k) {
      std::fprintf(stderr,
                   "tr_als: mode %d has slices with %lld observations for %lld "
                   "unknowns; expect overfitting\n",
                   n, static_cast<long long>(least), static_cast<long long>(k));
      break;
    }
  }

  AlsTrace trace;
  double prev = observed_rmse(cores, t, obs);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    for (int n = 0; n < N; ++n) tr_als_step_oracle(cores, t, obs, n, options.ridge);
    const double rmse = observed_rmse(cores, t, obs);
    trace.rmse.push_back(rmse);
    if (std::abs(prev - rmse) <= options.tol * std::max(rmse, 1e-300)) {
      trace.converged = true;
      break;
    }
    prev = rmse;
  }
  return {std::move(cores), std::move(trace)};
}

}  // namespace trc
