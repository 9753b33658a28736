#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trc/index_set.hpp"
#include "trc/model.hpp"
#include "trc/moments.hpp"
#include "trc/tensor.hpp"

namespace trc {

struct FitConfig {
  index_t r_init = -1;            //!< -1: min(10, smallest extent)
  int max_iters = 200;
  double tol = 1e-5;              //!< relative change of E[tau] between sweeps
  double prune_threshold = 1e-6;  //!< relative group power below which a component dies
  bool prune_by_lambda = false;   //!< prune on precision ratio instead of power
  int prune_burn_in = 2;          //!< sweeps before pruning may start
  std::uint64_t seed = 0;
  Hyperpriors priors;
  bool overwrite_observed = true;
  bool validate_invariants = false;  //!< run full state validation every sweep
};

//! Applies key=value overrides onto a config; unknown keys throw. Keys:
//! r_init, max_iters, tol, prune_threshold, prune_by_lambda, prune_burn_in,
//! seed, priors.a, priors.b, priors.c, priors.d, overwrite_observed,
//! validate_invariants.
FitConfig apply_config(FitConfig base, const std::map<std::string, std::string>& kv);

struct FitTrace {
  struct Item {
    int iter;
    double e_tau;
    std::vector<index_t> ranks;
    double obs_rmse;
  };
  std::vector<Item> items;
  bool converged = false;
};

//! E[(subchain rows)^T (subchain rows)] for slice i of mode n: the Gram of
//! the observed complementary rows with all posterior uncertainty folded in,
//! size (R_{n-1} R_n)^2. Builds its own moment table; the fit loop uses the
//! incremental path instead.
Eigen::MatrixXd expected_subchain_gram(const ModelState& state, const IndexSet& obs,
                                       int n, index_t i);

//! One Gaussian coordinate update of core n against the observed entries.
void update_core_factor(ModelState& state, const DenseTensor& t, const IndexSet& obs,
                        int n);

//! One Gamma coordinate update of bond n's precision vector.
void update_lambda(ModelState& state, int n);

//! One Gamma coordinate update of the noise precision.
void update_tau(ModelState& state, const DenseTensor& t, const IndexSet& obs);

//! Removes rank components whose expected group power falls below
//! threshold * (largest group power at the bond); with by_lambda, removes
//! components whose E[lambda] exceeds the bond minimum by 1/threshold.
//! Never empties a bond. Returns true if anything was pruned.
bool prune_ranks(ModelState& state, double threshold, bool by_lambda = false);

//! Coordinate-ascent loop: per sweep, all core updates in mode order, all
//! lambda updates, pruning (after burn-in), then the tau update. Stops when
//! the relative change of E[tau] drops below tol or after max_iters sweeps.
//! Throws std::runtime_error with diagnostics if the state goes non-finite.
std::pair<ModelState, FitTrace> fit(const DenseTensor& t, const IndexSet& obs,
                                    const FitConfig& config);

//! Posterior-mean reconstruction; observed entries are copied back from t
//! when overwrite_observed is set.
DenseTensor complete(const ModelState& state, const DenseTensor& t,
                     const IndexSet& obs, bool overwrite_observed = true);

}  // namespace trc
