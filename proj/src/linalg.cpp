#include "trc/linalg.hpp"

#include <stdexcept>

namespace trc {

Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     const Eigen::Ref<const Eigen::MatrixXd>& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index ja = 0; ja < a.cols(); ++ja)
    for (Eigen::Index ia = 0; ia < a.rows(); ++ia)
      out.block(ia * b.rows(), ja * b.cols(), b.rows(), b.cols()) = a(ia, ja) * b;
  return out;
}

Eigen::MatrixXd commutation_matrix(int m, int n) {
  if (m <= 0 || n <= 0)
    throw std::invalid_argument("commutation_matrix: dimensions must be positive");
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m * n, m * n);
  // vec(A^T)[j + i*n] = A(i,j) = vec(A)[i + j*m]
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) k(j + i * n, i + j * m) = 1.0;
  return k;
}

Eigen::MatrixXd spd_inverse(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            double* min_pivot) {
  const Eigen::Index d = a.rows();
  if (d != a.cols()) throw std::invalid_argument("spd_inverse: matrix not square");
  double jitter = 1e-12 * a.trace() / static_cast<double>(d);
  Eigen::MatrixXd m = a;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    const double piv = ldlt.vectorD().minCoeff();
    if (ldlt.info() == Eigen::Success && piv > 0.0) {
      if (min_pivot) *min_pivot = piv;
      Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
      return 0.5 * (inv + inv.transpose());
    }
    m = a + jitter * Eigen::MatrixXd::Identity(d, d);
    jitter *= 10.0;
  }
  throw std::runtime_error("spd_inverse: matrix not positive definite after jitter escalation");
}

}  // namespace trc
