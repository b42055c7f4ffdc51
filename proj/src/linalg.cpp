#include "bnngp/linalg.hpp"

#include "bnngp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bnngp {

JitteredCholesky cholesky_with_jitter(const Matrix& K) {
  if (K.rows() != K.cols() || K.rows() == 0)
    throw Error(ErrorKind::InvalidInput, "Cholesky needs a non-empty square matrix");
  if (!all_finite(K)) throw Error(ErrorKind::DegenerateKernel, "kernel has non-finite entries");

  Eigen::LLT<Matrix> llt(K);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

  const double mean_diag = K.diagonal().mean();
  double jitter = 1e-8 * (mean_diag > 0.0 ? mean_diag : 1.0);
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Matrix shifted = K;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }
  throw Error(ErrorKind::DegenerateKernel, "Cholesky failed after jitter");
}

bool is_psd_with_jitter(const Matrix& K, double relative_jitter) {
  if (!all_finite(K)) return false;
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() == Eigen::Success) return true;
  Matrix shifted = K;
  shifted.diagonal().array() += relative_jitter * std::max(K.diagonal().mean(), 1e-300);
  llt.compute(shifted);
  return llt.info() == Eigen::Success;
}

double max_asymmetry(const Matrix& K) {
  return (K - K.transpose()).cwiseAbs().maxCoeff();
}

double correlation(const Matrix& K, Eigen::Index a, Eigen::Index b) {
  const double denom = std::sqrt(K(a, a) * K(b, b));
  return std::clamp(K(a, b) / denom, -1.0, 1.0);
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

bool cholesky_into(const Matrix& A, double jitter, Matrix& L) {
  const Eigen::Index n = A.rows();
  L.setZero();
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = A(j, j) + jitter;
    for (Eigen::Index k = 0; k < j; ++k) s -= L(j, k) * L(j, k);
    if (!(s > 0.0)) return false;
    const double d = std::sqrt(s);
    L(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double t = A(i, j);
      for (Eigen::Index k = 0; k < j; ++k) t -= L(i, k) * L(j, k);
      L(i, j) = t / d;
    }
  }
  return true;
}

double cholesky_jitter_into(const Matrix& A, Matrix& L) {
  if (cholesky_into(A, 0.0, L)) return 0.0;
  if (!A.allFinite()) throw Error(ErrorKind::DegenerateKernel, "kernel has non-finite entries");
  const double mean_diag = A.diagonal().mean();
  double jitter = 1e-8 * (mean_diag > 0.0 ? mean_diag : 1.0);
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0)
    if (cholesky_into(A, jitter, L)) return jitter;
  throw Error(ErrorKind::DegenerateKernel, "Cholesky failed after jitter");
}

}  // namespace bnngp
