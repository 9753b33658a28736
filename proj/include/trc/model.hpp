#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trc/index_set.hpp"
#include "trc/tensor.hpp"
#include "trc/tr_ops.hpp"

namespace trc {

//! Gamma hyperpriors: (a, b) for the noise precision tau, (c, d) shared by
//! every rank-component precision lambda.
struct Hyperpriors {
  double a = 1e-7;
  double b = 1e-7;
  double c = 1e-7;
  double d = 1e-7;
};

//! Gaussian posterior over one core: slice means stacked as an
//! (R_{n-1} x I_n x R_n) tensor plus one covariance block per lateral slice,
//! each (R_{n-1}*R_n)^2 over the column-major vec of the slice.
struct CorePosterior {
  DenseTensor mean;
  std::vector<Eigen::MatrixXd> cov;

  index_t left_rank() const { return mean.shape()[0]; }
  index_t extent() const { return mean.shape()[1]; }
  index_t right_rank() const { return mean.shape()[2]; }

  SliceMap mean_slice(index_t i) const;
  MutSliceMap mean_slice(index_t i);
};

//! Gamma posterior over the precision vector of one bond.
struct LambdaPosterior {
  Eigen::VectorXd c_hat;
  Eigen::VectorXd d_hat;

  Eigen::VectorXd expectation() const;
};

//! Gamma posterior over the noise precision.
struct TauPosterior {
  double a_hat = 0.0;
  double b_hat = 0.0;

  double expectation() const { return a_hat / b_hat; }
};

//! Full variational state. lambda[n] lives on bond n, the edge shared by
//! core n (third axis) and core (n+1) % N (first axis).
struct ModelState {
  Shape dims;
  std::vector<CorePosterior> cores;
  std::vector<LambdaPosterior> lambda;
  TauPosterior tau;
  Hyperpriors prior;
  int iteration = 0;
  std::uint64_t seed = 0;

  int order() const { return static_cast<int>(cores.size()); }
  index_t rank(int bond) const;
  std::vector<index_t> ranks() const;

  //! posterior means copied into a plain TR factorization
  TRCores mean_cores() const;

  //! throws std::runtime_error if shapes, bonds, or lambda lengths are
  //! inconsistent or any stored value is non-finite
  void validate() const;
};

//! Core means i.i.d. N(0,1), covariances identity, Gamma posteriors equal to
//! their priors. Throws std::invalid_argument on an empty mask or r_init < 1.
ModelState init_state(const DenseTensor& t, const IndexSet& mask, index_t r_init,
                      const Hyperpriors& priors, std::uint64_t seed);

//! E[vec(g) vec(g)^T] = mean mean^T + V for one lateral slice.
Eigen::MatrixXd expected_slice_moment(const ModelState& state, int n, index_t i);

//! Reconstruction from posterior means: tr_reconstruct over mean_cores().
DenseTensor expected_reconstruction(const ModelState& state);

//! Checkpoints occupy a directory: one DTF per core mean, one DTF per
//! covariance stack (I_n x RlRr x RlRr), and state.json carrying the Gamma
//! parameters, ranks, iteration counter and seed.
void save_checkpoint(const ModelState& state, const std::string& dir);
ModelState load_checkpoint(const std::string& dir);

}  // namespace trc
