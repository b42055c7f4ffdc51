#pragma once

#include "bnngp/types.hpp"

namespace bnngp {

struct JitteredCholesky {
  Matrix lower;         ///< L with L L^T = K + jitter I
  double jitter = 0.0;  ///< absolute jitter that was added (0 when none was needed)
};

/// Cholesky factor of a symmetric PSD matrix. Jitter of 1e-8 x mean diagonal
/// is added only if the plain factorization fails, then grown x10 up to three
/// times. Throws degenerate-kernel if every attempt fails.
JitteredCholesky cholesky_with_jitter(const Matrix& K);

/// True when Cholesky succeeds after at most 1e-8 x mean-diagonal jitter.
bool is_psd_with_jitter(const Matrix& K, double relative_jitter = 1e-8);

double max_asymmetry(const Matrix& K);

/// K[a][b] / sqrt(K[a][a] K[b][b]) clamped to [-1, 1].
double correlation(const Matrix& K, Eigen::Index a, Eigen::Index b);

bool all_finite(const Matrix& M);

/// Lower Cholesky factor of A + jitter I written into a preallocated L.
/// Returns false when a pivot is not positive. No allocation.
bool cholesky_into(const Matrix& A, double jitter, Matrix& L);

/// cholesky_into with the jitter ladder of cholesky_with_jitter. Returns the
/// jitter used; throws degenerate-kernel when every attempt fails.
double cholesky_jitter_into(const Matrix& A, Matrix& L);

}  // namespace bnngp
