#pragma once

#include "bnngp/types.hpp"

#include <optional>
#include <vector>

namespace bnngp {

/// 2x2 covariance of the bottleneck preactivations of two inputs.
struct BottleneckGeometry {
  Matrix C = Matrix::Identity(2, 2);
  double beta = M_PI / 2;  ///< bottleneck angle, cos(beta) = c_ab / sqrt(c_aa c_bb)
  std::optional<double> alpha;

  /// Throws invalid-input unless C is 2x2, symmetric and positive definite.
  static BottleneckGeometry from_covariance(const Matrix& C);
  /// Unit-norm inputs at angle alpha fed straight into the bottleneck.
  static BottleneckGeometry from_input_angle(double alpha, const Hyperparams& h);
  /// Two inputs (rows of X) through `pre_depth` wide ReLU layers; v_n is added
  /// to the diagonal when `bottleneck_noise` is set.
  static BottleneckGeometry from_inputs(const Matrix& X, const Hyperparams& h, int pre_depth,
                                        bool bottleneck_noise);

  double c(int a, int b) const { return C(a, b); }
};

/// b_D = v_n + v_b sum_{d<D} v_w^d.
double b_depth(const Hyperparams& h, int D);
/// log of w_D = v_w^D.
double log_w_depth(const Hyperparams& h, int D);

/// r_D = b_D / w_D. May be +inf when it overflows.
double r_depth(const Hyperparams& h, int D);
double log_r_depth(const Hyperparams& h, int D);

/// v_b / (v_w - 1) for v_w > 1, +inf otherwise.
double r_infinity(const Hyperparams& h);

/// Covariance of F_i(x_a)^2 and F_j(x_b)^2 for distinct output channels.
double quad_cov_between(const BottleneckGeometry& g, const Hyperparams& h, int D, int H, int a, int b);

/// Correlation of F_i(x_a)^2 and F_j(x_b)^2 for distinct output channels.
double quad_corr_between(const BottleneckGeometry& g, const Hyperparams& h, int D, int H, int a, int b);

/// Limit of quad_corr_between as D -> infinity; 0 for v_w <= 1.
double quad_corr_between_inf(const BottleneckGeometry& g, const Hyperparams& h, int H, int a, int b);

/// quad_corr_between(D) - quad_corr_between_inf, without cancellation.
double quad_corr_gap(const BottleneckGeometry& g, const Hyperparams& h, int D, int H, int a, int b);

/// Infinite-depth correlation of F_i(x_a)^2 and F_i(x_b)^2 for one channel;
/// 1 for v_w <= 1 and on the diagonal.
double quad_corr_single_inf(const BottleneckGeometry& g, const Hyperparams& h, int H, int a, int b);

/// e-folding depth of the decay of quad_corr_between towards its limit.
double depth_scale(const Hyperparams& h);

/// beta = acos((v_b + v_w cos alpha) / (v_b + v_w)).
double bottleneck_angle_from_input_angle(double alpha, const Hyperparams& h);

/// quad_corr_between for D = 1..D_max.
std::vector<double> depth_series(const BottleneckGeometry& g, const Hyperparams& h, int H, int D_max,
                                 int a = 0, int b = 1);

/// Recovers the 2x2 input Gram matrix from the infinite-depth between-output
/// quadratic correlations. Needs v_w > 1 and v_b > 0.
Matrix recover_gram_between(const Matrix& Qx_inf, const Hyperparams& h, int H, int pre_depth,
                            bool bottleneck_noise = false);

/// Recovers the Gram matrix from the single-output infinite-depth quadratic
/// correlations and the Gram diagonal. Needs v_w > 1.
Matrix recover_gram_single(const Matrix& Q_inf, const Vector& diag_G, const Hyperparams& h, int H,
                           int pre_depth, bool bottleneck_noise = false);

struct CorrelationReport {
  int H = 0;
  int D = 0;
  double b_D = 0.0;
  double w_D = 0.0;
  double r_D = 0.0;
  Matrix q_cross;
  Matrix q_cross_inf;
  Matrix q_single_inf;
  double lambda = 0.0;
  double beta = 0.0;
};

CorrelationReport correlation_report(const BottleneckGeometry& g, const Hyperparams& h, int D, int H);

}  // namespace bnngp
