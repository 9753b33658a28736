#include "trc/tr_ops.hpp"

#include <stdexcept>

namespace trc {

Shape TRCores::dims() const {
  Shape s;
  s.dims.reserve(cores.size());
  for (const auto& c : cores) s.dims.push_back(c.shape()[1]);
  return s;
}

std::vector<index_t> TRCores::ranks() const {
  std::vector<index_t> r;
  r.reserve(cores.size());
  for (const auto& c : cores) r.push_back(c.shape()[2]);
  return r;
}

SliceMap TRCores::slice(int n, index_t i) const {
  const DenseTensor& c = cores[n];
  const index_t rl = c.shape()[0], in = c.shape()[1], rr = c.shape()[2];
  return {c.data() + i * rl, rl, rr, Eigen::OuterStride<>(rl * in)};
}

MutSliceMap TRCores::slice(int n, index_t i) {
  DenseTensor& c = cores[n];
  const index_t rl = c.shape()[0], in = c.shape()[1], rr = c.shape()[2];
  return {c.data() + i * rl, rl, rr, Eigen::OuterStride<>(rl * in)};
}

void TRCores::validate() const {
  const int N = order();
  if (N == 0) throw std::invalid_argument("TRCores: empty ring");
  for (int n = 0; n < N; ++n) {
    const auto& c = cores[n];
    if (c.order() != 3)
      throw std::invalid_argument("TRCores: core must be third-order");
    const auto& prev = cores[(n - 1 + N) % N];
    if (c.shape()[0] != prev.shape()[2])
      throw std::invalid_argument("TRCores: bond extent mismatch between cores " +
                                  std::to_string((n - 1 + N) % N) + " and " +
                                  std::to_string(n));
  }
}

double tr_entry(const TRCores& g, std::span<const index_t> idx) {
  const int N = g.order();
  if (static_cast<int>(idx.size()) != N)
    throw std::invalid_argument("tr_entry: index order mismatch");
  Eigen::MatrixXd p = g.slice(0, idx[0]);
  for (int n = 1; n < N; ++n) p = p * g.slice(n, idx[n]);
  return p.trace();
}

DenseTensor tr_reconstruct(const TRCores& g) {
  g.validate();
  const int N = g.order();
  const Shape shape = g.dims();
  DenseTensor out(shape);

  // Suffix products S_k = G_k(i_k) ... G_{N-1}(i_{N-1}). The entry is
  // tr(S_0). i_0 varies fastest under the flat order, so a step that
  // carries into mode lo rebuilds levels lo..0 only.
  std::vector<Eigen::MatrixXd> suffix(N);
  std::vector<index_t> idx(N, 0);
  for (index_t flat = 0; flat < out.numel(); ++flat) {
    int lo;
    if (flat == 0) {
      lo = N - 1;
    } else {
      lo = 0;
      while (idx[lo] + 1 == shape[lo]) {
        idx[lo] = 0;
        ++lo;
      }
      ++idx[lo];
    }
    for (int k = lo; k >= 0; --k) {
      if (k == N - 1)
        suffix[k] = g.slice(k, idx[k]);
      else
        suffix[k] = g.slice(k, idx[k]) * suffix[k + 1];
    }
    out[flat] = suffix[0].trace();
  }
  return out;
}

DenseTensor tcp(std::span<const DenseTensor> cores) {
  if (cores.empty()) throw std::invalid_argument("tcp: no cores");
  for (const auto& c : cores)
    if (c.order() != 3) throw std::invalid_argument("tcp: core must be third-order");
  for (size_t k = 0; k + 1 < cores.size(); ++k)
    if (cores[k].shape()[2] != cores[k + 1].shape()[0])
      throw std::invalid_argument("tcp: bond extent mismatch");

  DenseTensor acc = cores[0];
  for (size_t k = 1; k < cores.size(); ++k) {
    const DenseTensor& b = cores[k];
    const index_t rl = acc.shape()[0], jn = acc.shape()[1], rm = acc.shape()[2];
    const index_t in = b.shape()[1], rr = b.shape()[2];
    DenseTensor next(Shape{std::vector<index_t>{rl, jn * in, rr}});
    // combined middle index ja + ib*jn: earlier-listed extent varies fastest
    for (index_t ib = 0; ib < in; ++ib) {
      SliceMap bs(b.data() + ib * rm, rm, rr, Eigen::OuterStride<>(rm * in));
      for (index_t ja = 0; ja < jn; ++ja) {
        SliceMap as(acc.data() + ja * rl, rl, rm, Eigen::OuterStride<>(rl * jn));
        MutSliceMap ns(next.data() + (ja + ib * jn) * rl, rl, rr,
                       Eigen::OuterStride<>(rl * jn * in));
        ns = as * bs;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

DenseTensor subchain(const TRCores& g, int n) {
  const int N = g.order();
  if (N < 2) throw std::invalid_argument("subchain: ring must have at least two cores");
  if (n < 0 || n >= N) throw std::invalid_argument("subchain: mode out of range");
  std::vector<DenseTensor> rest;
  rest.reserve(N - 1);
  for (int off = 1; off < N; ++off) rest.push_back(g.cores[(n + off) % N]);
  return tcp(rest);
}

}  // namespace trc
