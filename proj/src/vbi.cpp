#include "trc/vbi.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>

#include "trc/linalg.hpp"

namespace trc {

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on") return true;
  if (v == "0" || v == "false" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  }
}

}  // namespace

FitConfig apply_config(FitConfig base, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "r_init") base.r_init = parse_int(key, value);
    else if (key == "max_iters") base.max_iters = static_cast<int>(parse_int(key, value));
    else if (key == "tol") base.tol = parse_double(key, value);
    else if (key == "prune_threshold") base.prune_threshold = parse_double(key, value);
    else if (key == "prune_by_lambda") base.prune_by_lambda = parse_bool(key, value);
    else if (key == "prune_burn_in") base.prune_burn_in = static_cast<int>(parse_int(key, value));
    else if (key == "seed") base.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "priors.a") base.priors.a = parse_double(key, value);
    else if (key == "priors.b") base.priors.b = parse_double(key, value);
    else if (key == "priors.c") base.priors.c = parse_double(key, value);
    else if (key == "priors.d") base.priors.d = parse_double(key, value);
    else if (key == "overwrite_observed") base.overwrite_observed = parse_bool(key, value);
    else if (key == "validate_invariants") base.validate_invariants = parse_bool(key, value);
    else throw std::invalid_argument("config: unknown key " + key);
  }
  return base;
}

namespace {

std::string ranks_str(const ModelState& s) {
  std::ostringstream os;
  auto r = s.ranks();
  for (size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
  return os.str();
}

//! prior precision of the column-major slice vec: entry a + b*Rl carries
//! E[lambda_left[a]] * E[lambda_right[b]]
Eigen::VectorXd prior_diagonal(const ModelState& s, int n) {
  const int N = s.order();
  const Eigen::VectorXd left = s.lambda[static_cast<size_t>((n - 1 + N) % N)].expectation();
  const Eigen::VectorXd right = s.lambda[static_cast<size_t>(n)].expectation();
  Eigen::VectorXd diag(left.size() * right.size());
  for (index_t b = 0; b < right.size(); ++b)
    for (index_t a = 0; a < left.size(); ++a)
      diag[a + b * left.size()] = left[a] * right[b];
  return diag;
}

void update_core_impl(ModelState& s, const DenseTensor& t, const IndexSet& obs,
                      MomentTable& w, int n) {
  const auto sm = accumulate_slice_moments(t, obs, s, w, n);
  const double e_tau = s.tau.expectation();
  const Eigen::VectorXd prior = prior_diagonal(s, n);
  auto& core = s.cores[static_cast<size_t>(n)];
  const index_t rl = core.left_rank(), rr = core.right_rank();
  const index_t extent = core.extent();

  std::exception_ptr failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (index_t i = 0; i < extent; ++i) {
    try {
      Eigen::MatrixXd a = e_tau * gram_from_ess(sm[static_cast<size_t>(i)].ess, rl, rr);
      a.diagonal() += prior;
      Eigen::MatrixXd v = spd_inverse(a);
      Eigen::VectorXd rhs(rl * rr);
      for (index_t bb = 0; bb < rr; ++bb)
        for (index_t aa = 0; aa < rl; ++aa)
          rhs[aa + bb * rl] = sm[static_cast<size_t>(i)].ts(bb, aa);
      Eigen::VectorXd g = e_tau * (v * rhs);
      auto mean = core.mean_slice(i);
      for (index_t bb = 0; bb < rr; ++bb)
        for (index_t aa = 0; aa < rl; ++aa)
          mean(aa, bb) = g[aa + bb * rl];
      core.cov[static_cast<size_t>(i)] = std::move(v);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  if (!core.mean.all_finite())
    throw std::runtime_error("vbi: core " + std::to_string(n) +
                             " went non-finite (iteration " +
                             std::to_string(s.iteration) + ", E[tau]=" +
                             std::to_string(e_tau) + ", ranks " + ranks_str(s) + ")");
  refresh_moment_table(w, s, n);
}

void update_tau_impl(ModelState& s, const DenseTensor& t, const IndexSet& obs,
                     const MomentTable& w, double* obs_rmse) {
  const auto sm = accumulate_slice_moments(t, obs, s, w, 0);
  double sum_xhat2 = 0.0, sum_sq_resid = 0.0, sum_ex2 = 0.0;
  index_t count = 0;
  for (size_t i = 0; i < sm.size(); ++i) {
    sum_ex2 += w[0][i].cwiseProduct(sm[i].ess.transpose()).sum();
    sum_xhat2 += sm[i].sum_xhat2;
    sum_sq_resid += sm[i].sum_sq_resid;
    count += sm[i].count;
  }
  // E[|residual|^2] regrouped as sum (t - xhat)^2 plus the total
  // reconstruction variance, which avoids cancellation between the large
  // aggregate sums of the raw expansion
  const double var_part = std::max(0.0, sum_ex2 - sum_xhat2);
  const double expected_sq = sum_sq_resid + var_part;
  s.tau.a_hat = s.prior.a + 0.5 * static_cast<double>(count);
  s.tau.b_hat = s.prior.b + 0.5 * expected_sq;
  if (obs_rmse)
    *obs_rmse = count ? std::sqrt(sum_sq_resid / static_cast<double>(count)) : 0.0;
}

}  // namespace

Eigen::MatrixXd expected_subchain_gram(const ModelState& state, const IndexSet& obs,
                                       int n, index_t i) {
  const MomentTable w = moment_table(state);
  const auto sm = accumulate_slice_moments(DenseTensor(state.dims), obs, state, w, n);
  const auto& core = state.cores[static_cast<size_t>(n)];
  return gram_from_ess(sm[static_cast<size_t>(i)].ess, core.left_rank(),
                       core.right_rank());
}

void update_core_factor(ModelState& state, const DenseTensor& t, const IndexSet& obs,
                        int n) {
  MomentTable w = moment_table(state);
  update_core_impl(state, t, obs, w, n);
}

void update_lambda(ModelState& state, int n) {
  const int N = state.order();
  const int n1 = (n + 1) % N;
  const auto& cn = state.cores[static_cast<size_t>(n)];
  const auto& cn1 = state.cores[static_cast<size_t>(n1)];
  const index_t rl = cn.left_rank(), rb = cn.right_rank();
  const index_t rn1 = cn1.right_rank();
  const Eigen::VectorXd wl = state.lambda[static_cast<size_t>((n - 1 + N) % N)].expectation();
  const Eigen::VectorXd wr = state.lambda[static_cast<size_t>(n1)].expectation();

  Eigen::VectorXd energy = Eigen::VectorXd::Zero(rb);
  for (index_t i = 0; i < cn.extent(); ++i) {
    const auto m = cn.mean_slice(i);
    const auto& v = cn.cov[static_cast<size_t>(i)];
    for (index_t r = 0; r < rb; ++r)
      for (index_t a = 0; a < rl; ++a) {
        const index_t k = a + r * rl;
        energy[r] += wl[a] * (m(a, r) * m(a, r) + v(k, k));
      }
  }
  for (index_t j = 0; j < cn1.extent(); ++j) {
    const auto m = cn1.mean_slice(j);
    const auto& v = cn1.cov[static_cast<size_t>(j)];
    for (index_t b = 0; b < rn1; ++b)
      for (index_t r = 0; r < rb; ++r) {
        const index_t k = r + b * rb;
        energy[r] += wr[b] * (m(r, b) * m(r, b) + v(k, k));
      }
  }

  auto& l = state.lambda[static_cast<size_t>(n)];
  const double c_hat =
      state.prior.c + 0.5 * static_cast<double>(cn.extent() * rl + cn1.extent() * rn1);
  l.c_hat = Eigen::VectorXd::Constant(rb, c_hat);
  l.d_hat = (0.25 * energy).array() + state.prior.d;
}

void update_tau(ModelState& state, const DenseTensor& t, const IndexSet& obs) {
  const MomentTable w = moment_table(state);
  update_tau_impl(state, t, obs, w, nullptr);
}

namespace {

//! unweighted expected energy of bond component r across its two cores,
//! normalized by element count
Eigen::VectorXd group_power(const ModelState& s, int bond) {
  const int N = s.order();
  const int n1 = (bond + 1) % N;
  const auto& cn = s.cores[static_cast<size_t>(bond)];
  const auto& cn1 = s.cores[static_cast<size_t>(n1)];
  const index_t rl = cn.left_rank(), rb = cn.right_rank(), rn1 = cn1.right_rank();
  Eigen::VectorXd energy = Eigen::VectorXd::Zero(rb);
  for (index_t i = 0; i < cn.extent(); ++i) {
    const auto m = cn.mean_slice(i);
    const auto& v = cn.cov[static_cast<size_t>(i)];
    for (index_t r = 0; r < rb; ++r)
      for (index_t a = 0; a < rl; ++a)
        energy[r] += m(a, r) * m(a, r) + v(a + r * rl, a + r * rl);
  }
  for (index_t j = 0; j < cn1.extent(); ++j) {
    const auto m = cn1.mean_slice(j);
    const auto& v = cn1.cov[static_cast<size_t>(j)];
    for (index_t b = 0; b < rn1; ++b)
      for (index_t r = 0; r < rb; ++r)
        energy[r] += m(r, b) * m(r, b) + v(r + b * rb, r + b * rb);
  }
  const double elems = static_cast<double>(cn.extent() * rl + cn1.extent() * rn1);
  return energy / elems;
}

void shrink_bond(ModelState& s, int bond, const std::vector<index_t>& keep) {
  const int N = s.order();
  const int n1 = (bond + 1) % N;
  auto& cn = s.cores[static_cast<size_t>(bond)];
  auto& cn1 = s.cores[static_cast<size_t>(n1)];
  const index_t rl = cn.left_rank(), old_rb = cn.right_rank();
  const index_t rn1 = cn1.right_rank();
  const index_t nk = static_cast<index_t>(keep.size());

  DenseTensor mean_n(Shape{rl, cn.extent(), nk});
  for (index_t q = 0; q < nk; ++q)
    for (index_t i = 0; i < cn.extent(); ++i)
      for (index_t a = 0; a < rl; ++a)
        mean_n[a + rl * (i + cn.extent() * q)] =
            cn.mean[a + rl * (i + cn.extent() * keep[static_cast<size_t>(q)])];
  for (index_t i = 0; i < cn.extent(); ++i) {
    std::vector<index_t> sel;
    sel.reserve(static_cast<size_t>(nk * rl));
    for (index_t q = 0; q < nk; ++q)
      for (index_t a = 0; a < rl; ++a)
        sel.push_back(a + keep[static_cast<size_t>(q)] * rl);
    Eigen::MatrixXd v(nk * rl, nk * rl);
    const auto& old = cn.cov[static_cast<size_t>(i)];
    for (size_t p = 0; p < sel.size(); ++p)
      for (size_t q = 0; q < sel.size(); ++q)
        v(static_cast<index_t>(p), static_cast<index_t>(q)) = old(sel[p], sel[q]);
    cn.cov[static_cast<size_t>(i)] = std::move(v);
  }
  cn.mean = std::move(mean_n);

  DenseTensor mean_n1(Shape{nk, cn1.extent(), rn1});
  for (index_t b = 0; b < rn1; ++b)
    for (index_t j = 0; j < cn1.extent(); ++j)
      for (index_t q = 0; q < nk; ++q)
        mean_n1[q + nk * (j + cn1.extent() * b)] =
            cn1.mean[keep[static_cast<size_t>(q)] + old_rb * (j + cn1.extent() * b)];
  for (index_t j = 0; j < cn1.extent(); ++j) {
    std::vector<index_t> sel;
    sel.reserve(static_cast<size_t>(nk * rn1));
    for (index_t b = 0; b < rn1; ++b)
      for (index_t q = 0; q < nk; ++q)
        sel.push_back(keep[static_cast<size_t>(q)] + b * old_rb);
    Eigen::MatrixXd v(nk * rn1, nk * rn1);
    const auto& old = cn1.cov[static_cast<size_t>(j)];
    for (size_t p = 0; p < sel.size(); ++p)
      for (size_t q = 0; q < sel.size(); ++q)
        v(static_cast<index_t>(p), static_cast<index_t>(q)) = old(sel[p], sel[q]);
    cn1.cov[static_cast<size_t>(j)] = std::move(v);
  }
  cn1.mean = std::move(mean_n1);

  auto& l = s.lambda[static_cast<size_t>(bond)];
  Eigen::VectorXd c_hat(nk), d_hat(nk);
  for (index_t q = 0; q < nk; ++q) {
    c_hat[q] = l.c_hat[keep[static_cast<size_t>(q)]];
    d_hat[q] = l.d_hat[keep[static_cast<size_t>(q)]];
  }
  l.c_hat = std::move(c_hat);
  l.d_hat = std::move(d_hat);
}

}  // namespace

bool prune_ranks(ModelState& state, double threshold, bool by_lambda) {
  const int N = state.order();
  bool changed = false;
  for (int bond = 0; bond < N; ++bond) {
    const index_t rb = state.rank(bond);
    if (rb <= 1) continue;
    std::vector<index_t> keep;
    if (by_lambda) {
      const Eigen::VectorXd el = state.lambda[static_cast<size_t>(bond)].expectation();
      const double floor = el.minCoeff();
      for (index_t r = 0; r < rb; ++r)
        if (el[r] * threshold <= floor) keep.push_back(r);
    } else {
      const Eigen::VectorXd power = group_power(state, bond);
      const double peak = power.maxCoeff();
      for (index_t r = 0; r < rb; ++r)
        if (power[r] >= threshold * peak) keep.push_back(r);
    }
    if (keep.empty() || static_cast<index_t>(keep.size()) == rb) continue;
    shrink_bond(state, bond, keep);
    changed = true;
  }
  return changed;
}

std::pair<ModelState, FitTrace> fit(const DenseTensor& t, const IndexSet& obs,
                                    const FitConfig& config) {
  if (t.order() < 2) throw std::invalid_argument("fit: tensor must be at least 2-order");
  if (!(obs.shape() == t.shape()))
    throw std::invalid_argument("fit: mask shape differs from tensor");
  index_t r_init = config.r_init;
  if (r_init <= 0) {
    r_init = 10;
    for (index_t d : t.shape().dims) r_init = std::min(r_init, d);
  }
  ModelState s = init_state(t, obs, r_init, config.priors, config.seed);
  FitTrace trace;
  if (config.max_iters <= 0) return {std::move(s), std::move(trace)};

  MomentTable w = moment_table(s);
  const int N = s.order();
  double prev_tau = 0.0;
  bool have_prev = false;
  for (int it = 1; it <= config.max_iters; ++it) {
    s.iteration = it;
    for (int n = 0; n < N; ++n) update_core_impl(s, t, obs, w, n);
    for (int n = 0; n < N; ++n) update_lambda(s, n);
    if (it > config.prune_burn_in &&
        prune_ranks(s, config.prune_threshold, config.prune_by_lambda))
      w = moment_table(s);
    double obs_rmse = 0.0;
    update_tau_impl(s, t, obs, w, &obs_rmse);
    const double e_tau = s.tau.expectation();
    if (!std::isfinite(e_tau))
      throw std::runtime_error("vbi: E[tau] went non-finite at iteration " +
                               std::to_string(it) + " (ranks " + ranks_str(s) + ")");
    trace.items.push_back({it, e_tau, s.ranks(), obs_rmse});
    if (config.validate_invariants) s.validate();
    if (have_prev && std::abs(e_tau - prev_tau) / e_tau < config.tol) {
      trace.converged = true;
      break;
    }
    prev_tau = e_tau;
    have_prev = true;
  }
  return {std::move(s), std::move(trace)};
}

DenseTensor complete(const ModelState& state, const DenseTensor& t,
                     const IndexSet& obs, bool overwrite_observed) {
  if (!(t.shape() == state.dims))
    throw std::invalid_argument("complete: tensor shape differs from model");
  DenseTensor out = expected_reconstruction(state);
  if (overwrite_observed)
    for (index_t flat : obs.flat()) out[flat] = t[flat];
  return out;
}

}  // namespace trc
