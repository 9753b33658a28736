#include "trc/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "trc/dtf.hpp"
#include "trc/rng.hpp"
#include "json.hpp"

namespace trc {

SliceMap CorePosterior::mean_slice(index_t i) const {
  const index_t rl = left_rank(), rr = right_rank();
  return SliceMap(mean.data() + rl * i, rl, rr,
                  Eigen::OuterStride<>(rl * extent()));
}

MutSliceMap CorePosterior::mean_slice(index_t i) {
  const index_t rl = left_rank(), rr = right_rank();
  return MutSliceMap(mean.data() + rl * i, rl, rr,
                     Eigen::OuterStride<>(rl * extent()));
}

Eigen::VectorXd LambdaPosterior::expectation() const {
  return c_hat.array() / d_hat.array();
}

index_t ModelState::rank(int bond) const {
  return cores[static_cast<size_t>(bond)].right_rank();
}

std::vector<index_t> ModelState::ranks() const {
  std::vector<index_t> r(cores.size());
  for (size_t n = 0; n < cores.size(); ++n) r[n] = cores[n].right_rank();
  return r;
}

TRCores ModelState::mean_cores() const {
  std::vector<DenseTensor> g;
  g.reserve(cores.size());
  for (const auto& c : cores) g.push_back(c.mean);
  return TRCores(std::move(g));
}

void ModelState::validate() const {
  const int N = order();
  if (N == 0) throw std::runtime_error("ModelState: empty");
  if (dims.order() != N) throw std::runtime_error("ModelState: dims/core count mismatch");
  if (static_cast<int>(lambda.size()) != N)
    throw std::runtime_error("ModelState: lambda/bond count mismatch");
  for (int n = 0; n < N; ++n) {
    const auto& c = cores[static_cast<size_t>(n)];
    const auto& next = cores[static_cast<size_t>((n + 1) % N)];
    if (c.mean.order() != 3) throw std::runtime_error("ModelState: core must be third-order");
    if (c.extent() != dims[n]) throw std::runtime_error("ModelState: core extent mismatch");
    if (c.right_rank() != next.left_rank())
      throw std::runtime_error("ModelState: bond extents do not chain");
    if (lambda[static_cast<size_t>(n)].c_hat.size() != c.right_rank() ||
        lambda[static_cast<size_t>(n)].d_hat.size() != c.right_rank())
      throw std::runtime_error("ModelState: lambda length != bond rank");
    if (!c.mean.all_finite()) throw std::runtime_error("ModelState: non-finite core mean");
    const index_t k = c.left_rank() * c.right_rank();
    if (static_cast<index_t>(c.cov.size()) != c.extent())
      throw std::runtime_error("ModelState: covariance block count mismatch");
    for (const auto& v : c.cov) {
      if (v.rows() != k || v.cols() != k)
        throw std::runtime_error("ModelState: covariance block size mismatch");
      if (!v.allFinite()) throw std::runtime_error("ModelState: non-finite covariance");
    }
    if (!lambda[static_cast<size_t>(n)].c_hat.allFinite() ||
        !lambda[static_cast<size_t>(n)].d_hat.allFinite() ||
        (lambda[static_cast<size_t>(n)].c_hat.array() <= 0.0).any() ||
        (lambda[static_cast<size_t>(n)].d_hat.array() <= 0.0).any())
      throw std::runtime_error("ModelState: lambda parameters must be positive");
  }
  if (!(tau.a_hat > 0.0) || !(tau.b_hat > 0.0) || !std::isfinite(tau.a_hat) ||
      !std::isfinite(tau.b_hat))
    throw std::runtime_error("ModelState: tau parameters must be positive");
}

ModelState init_state(const DenseTensor& t, const IndexSet& mask, index_t r_init,
                      const Hyperpriors& priors, std::uint64_t seed) {
  if (mask.empty()) throw std::invalid_argument("init_state: no observed entries");
  if (!(mask.shape() == t.shape()))
    throw std::invalid_argument("init_state: mask shape differs from tensor");
  if (r_init < 1) throw std::invalid_argument("init_state: r_init must be >= 1");

  ModelState s;
  s.dims = t.shape();
  s.prior = priors;
  s.seed = seed;
  const int N = t.order();
  Rng rng(seed);
  s.cores.resize(static_cast<size_t>(N));
  s.lambda.resize(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    auto& c = s.cores[static_cast<size_t>(n)];
    c.mean = DenseTensor(Shape{r_init, s.dims[n], r_init});
    for (index_t k = 0; k < c.mean.numel(); ++k) c.mean[k] = rng.normal();
    c.cov.assign(static_cast<size_t>(s.dims[n]),
                 Eigen::MatrixXd::Identity(r_init * r_init, r_init * r_init));
    auto& l = s.lambda[static_cast<size_t>(n)];
    l.c_hat = Eigen::VectorXd::Constant(r_init, priors.c);
    l.d_hat = Eigen::VectorXd::Constant(r_init, priors.d);
  }
  s.tau.a_hat = priors.a;
  s.tau.b_hat = priors.b;
  return s;
}

Eigen::MatrixXd expected_slice_moment(const ModelState& state, int n, index_t i) {
  const auto& c = state.cores[static_cast<size_t>(n)];
  Eigen::MatrixXd md = c.mean_slice(i);
  Eigen::Map<const Eigen::VectorXd> m(md.data(), c.left_rank() * c.right_rank());
  return m * m.transpose() + c.cov[static_cast<size_t>(i)];
}

DenseTensor expected_reconstruction(const ModelState& state) {
  return tr_reconstruct(state.mean_cores());
}

namespace {

std::string core_file(int n) { return "core" + std::to_string(n) + ".dtf"; }
std::string cov_file(int n) { return "cov" + std::to_string(n) + ".dtf"; }

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const int N = state.order();
  nlohmann::ordered_json meta;
  meta["format"] = "trc-checkpoint-1";
  meta["dims"] = state.dims.dims;
  meta["ranks"] = state.ranks();
  meta["iteration"] = state.iteration;
  meta["seed"] = state.seed;
  meta["priors"] = {{"a", state.prior.a}, {"b", state.prior.b},
                    {"c", state.prior.c}, {"d", state.prior.d}};
  meta["tau"] = {{"a_hat", state.tau.a_hat}, {"b_hat", state.tau.b_hat}};
  auto lambdas = nlohmann::ordered_json::array();
  for (int n = 0; n < N; ++n) {
    const auto& l = state.lambda[static_cast<size_t>(n)];
    lambdas.push_back({{"c_hat", std::vector<double>(l.c_hat.begin(), l.c_hat.end())},
                       {"d_hat", std::vector<double>(l.d_hat.begin(), l.d_hat.end())}});
  }
  meta["lambda"] = std::move(lambdas);

  for (int n = 0; n < N; ++n) {
    const auto& c = state.cores[static_cast<size_t>(n)];
    write_dtf((fs::path(dir) / core_file(n)).string(), c.mean);
    const index_t k = c.left_rank() * c.right_rank();
    DenseTensor stack(Shape{c.extent(), k, k});
    for (index_t i = 0; i < c.extent(); ++i)
      for (index_t col = 0; col < k; ++col)
        for (index_t row = 0; row < k; ++row)
          stack[i + c.extent() * (row + k * col)] =
              c.cov[static_cast<size_t>(i)](row, col);
    write_dtf((fs::path(dir) / cov_file(n)).string(), stack);
  }

  std::ofstream out(fs::path(dir) / "state.json");
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + dir + "/state.json");
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_checkpoint: write failed in " + dir);
}

ModelState load_checkpoint(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "state.json");
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + dir + "/state.json");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_checkpoint: bad state.json in " + dir + ": " + e.what());
  }
  if (meta.value("format", "") != "trc-checkpoint-1")
    throw std::runtime_error("load_checkpoint: unrecognized format in " + dir);

  ModelState s;
  s.dims = Shape(meta.at("dims").get<std::vector<index_t>>());
  s.iteration = meta.at("iteration").get<int>();
  s.seed = meta.at("seed").get<std::uint64_t>();
  s.prior.a = meta.at("priors").at("a").get<double>();
  s.prior.b = meta.at("priors").at("b").get<double>();
  s.prior.c = meta.at("priors").at("c").get<double>();
  s.prior.d = meta.at("priors").at("d").get<double>();
  s.tau.a_hat = meta.at("tau").at("a_hat").get<double>();
  s.tau.b_hat = meta.at("tau").at("b_hat").get<double>();

  const int N = s.dims.order();
  s.cores.resize(static_cast<size_t>(N));
  s.lambda.resize(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n) {
    auto& c = s.cores[static_cast<size_t>(n)];
    c.mean = read_dtf((fs::path(dir) / core_file(n)).string());
    if (c.mean.order() != 3)
      throw std::runtime_error("load_checkpoint: core " + std::to_string(n) +
                               " is not third-order");
    DenseTensor stack = read_dtf((fs::path(dir) / cov_file(n)).string());
    const index_t k = c.left_rank() * c.right_rank();
    if (stack.order() != 3 || stack.shape()[0] != c.extent() ||
        stack.shape()[1] != k || stack.shape()[2] != k)
      throw std::runtime_error("load_checkpoint: covariance stack " + std::to_string(n) +
                               " has wrong shape");
    c.cov.assign(static_cast<size_t>(c.extent()), Eigen::MatrixXd(k, k));
    for (index_t i = 0; i < c.extent(); ++i)
      for (index_t col = 0; col < k; ++col)
        for (index_t row = 0; row < k; ++row)
          c.cov[static_cast<size_t>(i)](row, col) =
              stack[i + c.extent() * (row + k * col)];
    const auto& lj = meta.at("lambda").at(static_cast<size_t>(n));
    auto cv = lj.at("c_hat").get<std::vector<double>>();
    auto dv = lj.at("d_hat").get<std::vector<double>>();
    auto& l = s.lambda[static_cast<size_t>(n)];
    l.c_hat = Eigen::Map<const Eigen::VectorXd>(cv.data(), static_cast<index_t>(cv.size()));
    l.d_hat = Eigen::Map<const Eigen::VectorXd>(dv.data(), static_cast<index_t>(dv.size()));
  }
  s.validate();
  return s;
}

}  // namespace trc
