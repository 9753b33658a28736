#include "trc/moments.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trc {

Eigen::MatrixXd expected_kron_slice(const Eigen::Ref<const Eigen::MatrixXd>& mean,
                                    const Eigen::Ref<const Eigen::MatrixXd>& cov) {
  const index_t rl = mean.rows(), rr = mean.cols();
  Eigen::MatrixXd md = mean;
  Eigen::Map<const Eigen::VectorXd> m(md.data(), rl * rr);
  Eigen::MatrixXd second = m * m.transpose() + cov;
  Eigen::MatrixXd w(rl * rl, rr * rr);
  for (index_t b = 0; b < rr; ++b)
    for (index_t d = 0; d < rr; ++d)
      for (index_t a = 0; a < rl; ++a)
        for (index_t c = 0; c < rl; ++c)
          w(a * rl + c, b * rr + d) = second(a + b * rl, c + d * rl);
  return w;
}

Eigen::MatrixXd gram_from_ess(const Eigen::Ref<const Eigen::MatrixXd>& ess,
                              index_t rl, index_t rr) {
  Eigen::MatrixXd gram(rl * rr, rl * rr);
  for (index_t b = 0; b < rr; ++b)
    for (index_t d = 0; d < rr; ++d)
      for (index_t a = 0; a < rl; ++a)
        for (index_t c = 0; c < rl; ++c)
          gram(a + b * rl, c + d * rl) = ess(b * rr + d, a * rl + c);
  return gram;
}

MomentTable moment_table(const ModelState& state) {
  MomentTable w(static_cast<size_t>(state.order()));
  for (int n = 0; n < state.order(); ++n) refresh_moment_table(w, state, n);
  return w;
}

void refresh_moment_table(MomentTable& w, const ModelState& state, int n) {
  const auto& c = state.cores[static_cast<size_t>(n)];
  auto& row = w[static_cast<size_t>(n)];
  row.resize(static_cast<size_t>(c.extent()));
  for (index_t i = 0; i < c.extent(); ++i)
    row[static_cast<size_t>(i)] =
        expected_kron_slice(c.mean_slice(i), c.cov[static_cast<size_t>(i)]);
}

namespace {

//! digits of a flat index for the chain modes of mode n, cyclic order
void decode(const Shape& shape, index_t flat, int n, int nchain, index_t* digit) {
  const int N = shape.order();
  for (int p = 0; p < nchain; ++p) {
    const int m = (n + 1 + p) % N;
    digit[p] = (flat / shape.stride(m)) % shape[m];
  }
}

}  // namespace

std::vector<SliceMoments> accumulate_slice_moments(const DenseTensor& t,
                                                   const IndexSet& obs,
                                                   const ModelState& state,
                                                   const MomentTable& w, int n) {
  const int N = state.order();
  const int K = N - 1;  // chain length
  const Shape& shape = state.dims;
  const index_t rl = state.cores[static_cast<size_t>(n)].left_rank();
  const index_t rr = state.cores[static_cast<size_t>(n)].right_rank();
  const index_t extent = shape[n];

  std::vector<SliceMoments> out(static_cast<size_t>(extent));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (index_t i = 0; i < extent; ++i) {
    SliceMoments& sm = out[static_cast<size_t>(i)];
    sm.ess = Eigen::MatrixXd::Zero(rr * rr, rl * rl);
    sm.ts = Eigen::MatrixXd::Zero(rr, rl);
    const auto& bucket = obs.bucket(n, i);
    if (bucket.empty()) continue;

    // suffix products over chain positions 1..K-1; sufW[p] chains the W of
    // modes n+1+p, ..., n-1, and sufM the same over mean slices
    std::vector<Eigen::MatrixXd> sufW(static_cast<size_t>(K) + 1);
    std::vector<Eigen::MatrixXd> sufM(static_cast<size_t>(K) + 1);
    sufW[static_cast<size_t>(K)] = Eigen::MatrixXd::Identity(rl * rl, rl * rl);
    sufM[static_cast<size_t>(K)] = Eigen::MatrixXd::Identity(rl, rl);

    const int m0 = (n + 1) % N;
    const index_t rm0 = state.cores[static_cast<size_t>(m0)].right_rank();

    Eigen::MatrixXd runW = Eigen::MatrixXd::Zero(rr * rr, rm0 * rm0);
    Eigen::MatrixXd runM = Eigen::MatrixXd::Zero(rr, rm0);
    Eigen::MatrixXd sj(rr, rl);
    const Eigen::MatrixXd mslice = state.cores[static_cast<size_t>(n)].mean_slice(i);

    index_t digit[64], prev[64];
    bool first = true;

    auto rebuild = [&](int from) {
      for (int p = from; p >= 1; --p) {
        const int m = (n + 1 + p) % N;
        sufW[static_cast<size_t>(p)] =
            w[static_cast<size_t>(m)][static_cast<size_t>(digit[p])] *
            sufW[static_cast<size_t>(p) + 1];
        sufM[static_cast<size_t>(p)] =
            state.cores[static_cast<size_t>(m)].mean_slice(digit[p]) *
            sufM[static_cast<size_t>(p) + 1];
      }
    };
    auto flush = [&]() {
      sm.ess.noalias() += runW * sufW[1];
      sm.ts.noalias() += runM * sufM[1];
      runW.setZero();
      runM.setZero();
    };

    for (index_t flat : bucket) {
      decode(shape, flat, n, K, digit);
      if (first) {
        rebuild(K - 1);
        first = false;
      } else {
        int changed = 0;
        for (int p = K - 1; p >= 1; --p)
          if (digit[p] != prev[p]) { changed = p; break; }
        if (changed >= 1) {
          flush();
          rebuild(changed);
        }
      }
      const double tv = t[flat];
      runW += w[static_cast<size_t>(m0)][static_cast<size_t>(digit[0])];
      runM += tv * state.cores[static_cast<size_t>(m0)].mean_slice(digit[0]);
      sj.noalias() = state.cores[static_cast<size_t>(m0)].mean_slice(digit[0]) *
                     sufM[1];
      const double xh = mslice.cwiseProduct(sj.transpose()).sum();
      sm.sum_t2 += tv * tv;
      sm.sum_t_xhat += tv * xh;
      sm.sum_xhat2 += xh * xh;
      sm.sum_sq_resid += (tv - xh) * (tv - xh);
      ++sm.count;
      for (int p = 0; p < K; ++p) prev[p] = digit[p];
    }
    flush();
  }
  return out;
}

}  // namespace trc
