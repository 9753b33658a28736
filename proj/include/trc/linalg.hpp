#pragma once

#include <Eigen/Dense>

namespace trc {

//! Kronecker product, (p*m) x (q*n) for A (p x q), B (m x n):
//! (A (x) B)[ia*m+ib, ja*n+jb] = A(ia,ja) * B(ib,jb).
Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     const Eigen::Ref<const Eigen::MatrixXd>& b);

//! Commutation matrix K_{mn}: K * vec(A) = vec(A^T) for A (m x n),
//! vec taken column-major.
Eigen::MatrixXd commutation_matrix(int m, int n);

//! Inverse of a symmetric positive definite matrix via LDLT. If the
//! factorization is not positive, a jitter of 1e-12*trace/size is added to
//! the diagonal and escalated tenfold, at most three times, before throwing.
//! The result is re-symmetrized. min_pivot (optional out) receives the
//! smallest pivot of the successful factorization.
Eigen::MatrixXd spd_inverse(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            double* min_pivot = nullptr);

}  // namespace trc
