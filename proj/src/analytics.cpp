#include "bnngp/analytics.hpp"

#include "bnngp/errors.hpp"
#include "bnngp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bnngp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool at_boundary(double v_w) { return std::abs(v_w - 1.0) < 1e-12; }

double logaddexp(double x, double y) {
  if (x == -kInf) return y;
  if (y == -kInf) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

void check_hyper(const Hyperparams& h) { h.validate(); }

void check_ab(const BottleneckGeometry& g, int a, int b) {
  if (a < 0 || a > 1 || b < 0 || b > 1) throw Error(ErrorKind::InvalidInput, "index must be 0 or 1");
  if (g.C.rows() != 2 || g.C.cols() != 2) throw Error(ErrorKind::InvalidInput, "C must be 2x2");
}

void check_width(int H) {
  if (H < 1) throw Error(ErrorKind::InvalidInput, "bottleneck width must be >= 1");
}

double cos_of(const BottleneckGeometry& g, int a, int b) {
  if (a == b) return 1.0;
  return std::clamp(g.C(a, b) / std::sqrt(g.C(a, a) * g.C(b, b)), -1.0, 1.0);
}

double beta_of(const BottleneckGeometry& g, int a, int b) { return std::acos(cos_of(g, a, b)); }

// (2/pi) J2(beta) - 1 from cos(beta); exactly 0 at cos = 0 and 5 at cos = 1
double numerator_cos(double c) {
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double j = 3.0 * s * c + (M_PI - std::acos(c)) * (1.0 + 2.0 * c * c);
  return 2.0 * j / M_PI - 1.0;
}

// log sqrt(15 + 2H (r/c + 1)^2) from log r
double log_factor(double log_r, double c, int H) {
  const double log_u = logaddexp(log_r - std::log(c), 0.0);
  return 0.5 * logaddexp(std::log(15.0), 2.0 * log_u + std::log(2.0 * H));
}

}  // namespace

BottleneckGeometry BottleneckGeometry::from_covariance(const Matrix& C) {
  if (C.rows() != 2 || C.cols() != 2 || !C.allFinite())
    throw Error(ErrorKind::InvalidInput, "bottleneck covariance must be a finite 2x2 matrix");
  if (!(C(0, 0) > 0.0) || !(C(1, 1) > 0.0))
    throw Error(ErrorKind::InvalidInput, "bottleneck covariance needs a positive diagonal");
  const double scale = std::sqrt(C(0, 0) * C(1, 1));
  if (std::abs(C(0, 1) - C(1, 0)) > 1e-12 * scale)
    throw Error(ErrorKind::InvalidInput, "bottleneck covariance is not symmetric");
  if (std::abs(C(0, 1)) > scale * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidInput, "bottleneck covariance is not positive semidefinite");
  BottleneckGeometry g;
  g.C = C;
  g.C(1, 0) = g.C(0, 1);
  g.beta = beta_of(g, 0, 1);
  return g;
}

BottleneckGeometry BottleneckGeometry::from_input_angle(double alpha, const Hyperparams& h) {
  const double beta = bottleneck_angle_from_input_angle(alpha, h);
  Matrix C(2, 2);
  C << h.v_b + h.v_w, h.v_b + h.v_w * std::cos(alpha), h.v_b + h.v_w * std::cos(alpha), h.v_b + h.v_w;
  BottleneckGeometry g = from_covariance(C);
  g.beta = beta;
  g.alpha = alpha;
  return g;
}

BottleneckGeometry BottleneckGeometry::from_inputs(const Matrix& X, const Hyperparams& h, int pre_depth,
                                                   bool bottleneck_noise) {
  if (X.rows() != 2) throw Error(ErrorKind::InvalidInput, "need exactly two inputs");
  KernelMatrix C = nngp_kernel(X, pre_depth, h, Nonlinearity::relu());
  if (bottleneck_noise) C.diagonal().array() += h.v_n;
  return from_covariance(C);
}

double b_depth(const Hyperparams& h, int D) {
  check_hyper(h);
  if (D < 1) throw Error(ErrorKind::InvalidInput, "D must be >= 1");
  if (at_boundary(h.v_w)) return h.v_n + D * h.v_b;
  return h.v_n + h.v_b * std::expm1(D * std::log(h.v_w)) / (h.v_w - 1.0);
}

double log_w_depth(const Hyperparams& h, int D) {
  check_hyper(h);
  return D * std::log(h.v_w);
}

double log_r_depth(const Hyperparams& h, int D) {
  check_hyper(h);
  if (D < 1) throw Error(ErrorKind::InvalidInput, "D must be >= 1");
  if (at_boundary(h.v_w)) return std::log(h.v_n + D * h.v_b);
  const double log_vw = std::log(h.v_w);
  if (h.v_w > 1.0) {
    const double inv_w = std::exp(-D * log_vw);
    return std::log(h.v_n * inv_w - h.v_b / (h.v_w - 1.0) * std::expm1(-D * log_vw));
  }
  return -D * log_vw + std::log(h.v_n - h.v_b / (1.0 - h.v_w) * std::expm1(D * log_vw));
}

double r_depth(const Hyperparams& h, int D) { return std::exp(log_r_depth(h, D)); }

double r_infinity(const Hyperparams& h) {
  check_hyper(h);
  if (h.v_w > 1.0 && !at_boundary(h.v_w)) return h.v_b / (h.v_w - 1.0);
  return kInf;
}

double quad_cov_between(const BottleneckGeometry& g, const Hyperparams& h, int D, int H, int a, int b) {
  check_ab(g, a, b);
  check_width(H);
  if (D < 1) throw Error(ErrorKind::InvalidInput, "D must be >= 1");
  const double n = numerator_cos(cos_of(g, a, b));
  if (n == 0.0) return 0.0;
  return std::exp(2.0 * log_w_depth(h, D)) * g.C(a, a) * g.C(b, b) / H * n;
}

double quad_corr_between(const BottleneckGeometry& g, const Hyperparams& h, int D, int H, int a, int b) {
  check_ab(g, a, b);
  check_width(H);
  const double log_r = log_r_depth(h, D);
  const double n = numerator_cos(cos_of(g, a, b));
  return n * std::exp(-log_factor(log_r, g.C(a, a), H) - log_factor(log_r, g.C(b, b), H));
}

double quad_corr_between_inf(const BottleneckGeometry& g, const Hyperparams& h, int H, int a, int b) {
  check_ab(g, a, b);
  check_width(H);
  check_hyper(h);
  if (h.v_w <= 1.0 || at_boundary(h.v_w)) return 0.0;
  const double log_r = std::log(r_infinity(h));
  const double n = numerator_cos(cos_of(g, a, b));
  return n * std::exp(-log_factor(log_r, g.C(a, a), H) - log_factor(log_r, g.C(b, b), H));
}

double quad_corr_gap(const BottleneckGeometry& g, const Hyperparams& h, int D, int H, int a, int b) {
  if (h.v_w <= 1.0 || at_boundary(h.v_w)) return quad_corr_between(g, h, D, H, a, b);
  check_ab(g, a, b);
  check_width(H);
  const double n = numerator_cos(cos_of(g, a, b));
  const double r_inf = r_infinity(h);
  const double r_d = r_depth(h, D);
  // r_D - r_inf = (v_n - r_inf) v_w^-D
  const double dr = (h.v_n - r_inf) * std::exp(-D * std::log(h.v_w));
  const double ca = g.C(a, a), cb = g.C(b, b);
  const double ua = r_d / ca + 1.0, ub = r_d / cb + 1.0;
  const double ua_inf = r_inf / ca + 1.0, ub_inf = r_inf / cb + 1.0;
  const double fa2 = 15.0 + 2.0 * H * ua * ua, fb2 = 15.0 + 2.0 * H * ub * ub;
  const double fa2_inf = 15.0 + 2.0 * H * ua_inf * ua_inf, fb2_inf = 15.0 + 2.0 * H * ub_inf * ub_inf;
  const double dfa2 = 2.0 * H * (-dr / ca) * (ua_inf + ua);  // fa_inf^2 - fa^2
  const double dfb2 = 2.0 * H * (-dr / cb) * (ub_inf + ub);
  const double dprod2 = fa2_inf * dfb2 + fb2 * dfa2;  // (fa fb)_inf^2 - (fa fb)^2
  const double p = std::sqrt(fa2 * fb2), p_inf = std::sqrt(fa2_inf * fb2_inf);
  return n * (dprod2 / (p_inf + p)) / (p * p_inf);
}

double quad_corr_single_inf(const BottleneckGeometry& g, const Hyperparams& h, int H, int a, int b) {
  check_ab(g, a, b);
  check_width(H);
  check_hyper(h);
  if (h.v_w <= 1.0 || at_boundary(h.v_w) || a == b) return 1.0;
  const double r_inf = r_infinity(h);
  const double ua = r_inf / g.C(a, a) + 1.0;
  const double ub = r_inf / g.C(b, b) + 1.0;
  const double k = 15.0 / (2.0 * H);
  return 3.0 * quad_corr_between_inf(g, h, H, a, b) + ua * ub / std::sqrt((k + ua * ua) * (k + ub * ub));
}

double depth_scale(const Hyperparams& h) {
  check_hyper(h);
  if (at_boundary(h.v_w)) return kInf;
  if (h.v_w < 1.0) return 1.0 / std::log(1.0 / (h.v_w * h.v_w));
  return 1.0 / std::log(h.v_w);
}

double bottleneck_angle_from_input_angle(double alpha, const Hyperparams& h) {
  check_hyper(h);
  if (!(alpha >= 0.0 && alpha <= M_PI)) throw Error(ErrorKind::Domain, "alpha must lie in [0, pi]");
  if (alpha == 0.0) return 0.0;
  return std::acos(std::clamp((h.v_b + h.v_w * std::cos(alpha)) / (h.v_b + h.v_w), -1.0, 1.0));
}

std::vector<double> depth_series(const BottleneckGeometry& g, const Hyperparams& h, int H, int D_max,
                                 int a, int b) {
  if (D_max < 2) throw Error(ErrorKind::InvalidInput, "D_max must be >= 2");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(D_max));
  for (int D = 1; D <= D_max; ++D) out.push_back(quad_corr_between(g, h, D, H, a, b));
  return out;
}

namespace {

void require_symmetric_phase_broken(const Hyperparams& h) {
  check_hyper(h);
  if (h.v_w <= 1.0 || at_boundary(h.v_w))
    throw Error(ErrorKind::NotInvertible, "Gram recovery needs v_w > 1");
}

// Off-diagonal recovery once the bottleneck diagonal is known.
Matrix recover_from_cross(double qx_ab, double c_aa, double c_bb, const Hyperparams& h, int H,
                          int pre_depth, bool bottleneck_noise) {
  if (pre_depth < 0) throw Error(ErrorKind::InvalidInput, "pre_depth must be >= 0");
  const double log_r = std::log(r_infinity(h));
  const double n = qx_ab * std::exp(log_factor(log_r, c_aa, H) + log_factor(log_r, c_bb, H));
  const double target = 0.5 * M_PI * (n + 1.0);
  if (!(target >= -1e-12 && target <= 3.0 * M_PI * (1.0 + 1e-12)))
    throw Error(ErrorKind::NotInImage, "between-output correlation outside the attainable range");
  const double beta = j2_inverse(target);
  KernelMatrix K(2, 2);
  K(0, 0) = c_aa;
  K(1, 1) = c_bb;
  K(0, 1) = K(1, 0) = std::cos(beta) * std::sqrt(c_aa * c_bb);
  if (bottleneck_noise) K.diagonal().array() -= h.v_n;
  for (int d = 0; d < pre_depth; ++d) K = relu_kernel_backstep(K, h);
  KernelMatrix G = (K.array() - h.v_b) / h.v_w;
  return G;
}

}  // namespace

Matrix recover_gram_between(const Matrix& Qx_inf, const Hyperparams& h, int H, int pre_depth,
                            bool bottleneck_noise) {
  require_symmetric_phase_broken(h);
  check_width(H);
  if (Qx_inf.rows() != 2 || Qx_inf.cols() != 2 || !Qx_inf.allFinite())
    throw Error(ErrorKind::InvalidInput, "Q must be a finite 2x2 matrix");
  if (!(h.v_b > 0.0))
    throw Error(ErrorKind::NotInvertible, "with v_b = 0 the diagonal correlation does not depend on C");
  const double r_inf = r_infinity(h);
  double c[2];
  for (int k = 0; k < 2; ++k) {
    const double q = Qx_inf(k, k);
    if (!(q > 0.0 && q < 5.0 / (15.0 + 2.0 * H)))
      throw Error(ErrorKind::NotInImage, "diagonal correlation outside (0, 5 / (15 + 2H))");
    // 5 / q = 15 + 2H (r_inf / c + 1)^2
    const double s = std::sqrt((5.0 / q - 15.0) / (2.0 * H));
    c[k] = r_inf / (s - 1.0);
  }
  const double q_ab = 0.5 * (Qx_inf(0, 1) + Qx_inf(1, 0));
  return recover_from_cross(q_ab, c[0], c[1], h, H, pre_depth, bottleneck_noise);
}

Matrix recover_gram_single(const Matrix& Q_inf, const Vector& diag_G, const Hyperparams& h, int H,
                           int pre_depth, bool bottleneck_noise) {
  require_symmetric_phase_broken(h);
  check_width(H);
  if (Q_inf.rows() != 2 || Q_inf.cols() != 2 || !Q_inf.allFinite() || diag_G.size() != 2)
    throw Error(ErrorKind::InvalidInput, "Q must be 2x2 and diag(G) of length 2");
  if (pre_depth < 0) throw Error(ErrorKind::InvalidInput, "pre_depth must be >= 0");
  // forward the diagonal: identical inputs stay identical through ReLU layers
  double c[2];
  for (int k = 0; k < 2; ++k) {
    if (!(diag_G(k) >= 0.0)) throw Error(ErrorKind::NotInImage, "Gram diagonal must be non-negative");
    c[k] = h.v_b + h.v_w * diag_G(k);
    for (int d = 0; d < pre_depth; ++d) c[k] = h.v_b + h.v_w * c[k];
    if (bottleneck_noise) c[k] += h.v_n;
    if (!(c[k] > 0.0)) throw Error(ErrorKind::NotInImage, "bottleneck variance must be positive");
  }
  const double r_inf = r_infinity(h);
  const double ua = r_inf / c[0] + 1.0, ub = r_inf / c[1] + 1.0;
  const double k = 15.0 / (2.0 * H);
  const double q_ab = 0.5 * (Q_inf(0, 1) + Q_inf(1, 0));
  const double qx_ab = (q_ab - ua * ub / std::sqrt((k + ua * ua) * (k + ub * ub))) / 3.0;
  Matrix G = recover_from_cross(qx_ab, c[0], c[1], h, H, pre_depth, bottleneck_noise);
  G(0, 0) = diag_G(0);
  G(1, 1) = diag_G(1);
  return G;
}

CorrelationReport correlation_report(const BottleneckGeometry& g, const Hyperparams& h, int D, int H) {
  CorrelationReport r;
  r.H = H;
  r.D = D;
  r.b_D = b_depth(h, D);
  r.w_D = std::exp(log_w_depth(h, D));
  r.r_D = r_depth(h, D);
  r.q_cross = Matrix(2, 2);
  r.q_cross_inf = Matrix(2, 2);
  r.q_single_inf = Matrix(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      r.q_cross(a, b) = quad_corr_between(g, h, D, H, a, b);
      r.q_cross_inf(a, b) = quad_corr_between_inf(g, h, H, a, b);
      r.q_single_inf(a, b) = quad_corr_single_inf(g, h, H, a, b);
    }
  r.lambda = depth_scale(h);
  r.beta = g.beta;
  return r;
}

}  // namespace bnngp
