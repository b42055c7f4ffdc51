#pragma once

#include "bnngp/types.hpp"

namespace bnngp {

/// K[a][b] = v_b + v_w x_a . x_b, the preactivation covariance of the first
/// hidden layer. Throws invalid-input on non-finite X.
KernelMatrix linear_kernel(const Matrix& X, const Hyperparams& h);

/// J1(theta) = sin(theta) + (pi - theta) cos(theta) on [0, pi]. Inputs within
/// 1e-12 of the interval are clamped; anything further out is a domain error.
double j1(double theta);

/// J2(beta) = 3 sin(beta) cos(beta) + (pi - beta)(1 + 2 cos^2(beta)) on [0, pi].
double j2(double beta);

/// theta in [0, pi] with J1(theta) = target, by bisection. target in [0, pi].
double j1_inverse(double target);

/// beta in [0, pi] with J2(beta) = target, by bisection. target in [0, 3 pi].
double j2_inverse(double target);

/// One hidden layer of the normalized ReLU:
/// K'[a][b] = v_b + (v_w / pi) sqrt(K[a][a] K[b][b]) J1(theta_ab).
/// Throws degenerate-kernel on a non-positive diagonal entry.
KernelMatrix relu_kernel_step(const KernelMatrix& K, const Hyperparams& h);

/// Inverse of relu_kernel_step. Throws not-in-image when a diagonal entry is
/// <= v_b or a J1 argument leaves [0, pi].
KernelMatrix relu_kernel_backstep(const KernelMatrix& K, const Hyperparams& h);

/// One hidden layer of phi(x) = cos x + sin x:
/// K'[a][b] = v_b + v_w exp(-(K[a][a] + K[b][b] - 2 K[a][b]) / 2).
KernelMatrix sinusoidal_kernel_step(const KernelMatrix& K, const Hyperparams& h);

/// K'[a][b] = v_b + v_w E[phi(z1) phi(z2)] under the 2x2 restriction of K,
/// by nested Gauss-Legendre quadrature split at phi's breakpoints.
KernelMatrix generic_kernel_step(const KernelMatrix& K, const Hyperparams& h,
                                 const Nonlinearity& phi, int order = 40);

/// Closed form for ReLU and sinusoidal, quadrature for custom nonlinearities.
KernelMatrix kernel_step(const KernelMatrix& K, const Hyperparams& h, const Nonlinearity& phi);

/// linear_kernel followed by `depth` kernel steps (depth = hidden layers).
KernelMatrix nngp_kernel(const Matrix& X, int depth, const Hyperparams& h,
                         const Nonlinearity& phi);

/// Applies `steps` kernel steps to an existing kernel.
KernelMatrix propagate_kernel(KernelMatrix K, int steps, const Hyperparams& h,
                              const Nonlinearity& phi);

struct SinusoidalFixedPoint {
  double v_star = 0.0;  ///< deep-limit variance v_b + v_w
  double c_star = 0.0;  ///< deep-limit correlation of distinct inputs
};

/// Deep limit of the sinusoidal kernel recursion. For v_w > 1 the correlation
/// is the unique root in (0, 1) of
///   f(c) = v_b / (v_b + v_w) + v_w / (v_b + v_w) exp((v_b + v_w)(c - 1)).
/// Throws phase-boundary at v_w == 1.
SinusoidalFixedPoint sinusoidal_deep_fixed_point(const Hyperparams& h);

namespace detail {
/// In-place variants used by the samplers to avoid per-sample allocation.
void relu_step_inplace(Eigen::Ref<Matrix> K, const Hyperparams& h);
void sinusoidal_step_inplace(Eigen::Ref<Matrix> K, const Hyperparams& h);
void kernel_step_inplace(Eigen::Ref<Matrix> K, const Hyperparams& h, const Nonlinearity& phi);
}  // namespace detail

}  // namespace bnngp
