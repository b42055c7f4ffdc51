#include "bnngp/kernel.hpp"

#include "bnngp/errors.hpp"
#include "bnngp/linalg.hpp"
#include "bnngp/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace bnngp {

namespace {

constexpr double kBoundarySlack = 1e-12;

void require_square(const Matrix& K, const char* what) {
  if (K.rows() != K.cols() || K.rows() == 0)
    throw Error(ErrorKind::InvalidInput, std::string(what) + ": kernel must be square, non-empty");
  if (!K.allFinite())
    throw Error(ErrorKind::InvalidInput, std::string(what) + ": kernel has non-finite entries");
}

}  // namespace

KernelMatrix linear_kernel(const Matrix& X, const Hyperparams& h) {
  if (X.rows() == 0 || X.cols() == 0) throw Error(ErrorKind::InvalidInput, "empty input matrix");
  if (!X.allFinite()) throw Error(ErrorKind::InvalidInput, "input matrix has non-finite entries");
  KernelMatrix K = h.v_w * (X * X.transpose());
  K.array() += h.v_b;
  return K;
}

double j1(double theta) {
  if (theta < -kBoundarySlack || theta > M_PI + kBoundarySlack || std::isnan(theta))
    throw Error(ErrorKind::Domain, "J1 argument outside [0, pi]");
  theta = std::clamp(theta, 0.0, M_PI);
  return std::sin(theta) + (M_PI - theta) * std::cos(theta);
}

double j2(double beta) {
  if (beta < -kBoundarySlack || beta > M_PI + kBoundarySlack || std::isnan(beta))
    throw Error(ErrorKind::Domain, "J2 argument outside [0, pi]");
  beta = std::clamp(beta, 0.0, M_PI);
  const double c = std::cos(beta);
  return 3.0 * std::sin(beta) * c + (M_PI - beta) * (1.0 + 2.0 * c * c);
}

namespace {

// Bisection for a strictly decreasing g on [0, pi]. Stops once |g - target|
// falls below `tol` or the bracket cannot shrink further.
template <class G>
double invert_decreasing(G&& g, double target, double tol) {
  double lo = 0.0, hi = M_PI;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double val = g(mid);
    if (std::abs(val - target) < tol) return mid;
    if (val > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double j1_inverse(double target) {
  if (!(target >= -kBoundarySlack && target <= M_PI * (1.0 + kBoundarySlack)))
    throw Error(ErrorKind::NotInImage, "J1 inverse argument outside [0, pi]");
  target = std::clamp(target, 0.0, M_PI);
  if (target == M_PI) return 0.0;
  if (target == 0.0) return M_PI;
  return invert_decreasing([](double t) { return j1(t); }, target, 0.0);
}

double j2_inverse(double target) {
  if (!(target >= -kBoundarySlack && target <= 3.0 * M_PI * (1.0 + kBoundarySlack)))
    throw Error(ErrorKind::NotInImage, "J2 inverse argument outside [0, 3 pi]");
  target = std::clamp(target, 0.0, 3.0 * M_PI);
  if (target == 3.0 * M_PI) return 0.0;
  if (target == 0.0) return M_PI;
  // J1 and J2 are flat near 0, so bisect down to the bracket resolution
  return invert_decreasing([](double t) { return j2(t); }, target, 0.0);
}

namespace detail {

void relu_step_inplace(Eigen::Ref<Matrix> K, const Hyperparams& h) {
  const Eigen::Index n = K.rows();
  for (Eigen::Index a = 0; a < n; ++a)
    if (!(K(a, a) > 0.0))
      throw Error(ErrorKind::DegenerateKernel, "ReLU step needs a strictly positive diagonal");
  const double scale = h.v_w / M_PI;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double s = std::sqrt(K(a, a) * K(b, b));
      const double rho = std::clamp(K(a, b) / s, -1.0, 1.0);
      const double theta = std::acos(rho);
      const double v = h.v_b + scale * s * (std::sin(theta) + (M_PI - theta) * rho);
      K(a, b) = v;
      K(b, a) = v;
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) K(a, a) = h.v_b + h.v_w * K(a, a);
}

void sinusoidal_step_inplace(Eigen::Ref<Matrix> K, const Hyperparams& h) {
  const Eigen::Index n = K.rows();
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double v = h.v_b + h.v_w * std::exp(-0.5 * (K(a, a) + K(b, b) - 2.0 * K(a, b)));
      K(a, b) = v;
      K(b, a) = v;
    }
  }
  for (Eigen::Index a = 0; a < n; ++a) K(a, a) = h.v_b + h.v_w;
}

void kernel_step_inplace(Eigen::Ref<Matrix> K, const Hyperparams& h, const Nonlinearity& phi) {
  switch (phi.kind()) {
    case Nonlinearity::Kind::NormalizedReLU: relu_step_inplace(K, h); return;
    case Nonlinearity::Kind::Sinusoidal: sinusoidal_step_inplace(K, h); return;
    case Nonlinearity::Kind::Custom: K = generic_kernel_step(K, h, phi); return;
  }
}

}  // namespace detail

KernelMatrix relu_kernel_step(const KernelMatrix& K, const Hyperparams& h) {
  require_square(K, "relu_kernel_step");
  KernelMatrix out = K;
  detail::relu_step_inplace(out, h);
  return out;
}

KernelMatrix relu_kernel_backstep(const KernelMatrix& K, const Hyperparams& h) {
  require_square(K, "relu_kernel_backstep");
  if (!(h.v_w > 0.0)) throw Error(ErrorKind::InvalidInput, "backstep needs v_w > 0");
  const Eigen::Index n = K.rows();
  Vector root(n);  // sqrt(K[c][c] - v_b)
  for (Eigen::Index a = 0; a < n; ++a) {
    const double excess = K(a, a) - h.v_b;
    if (!(excess > 0.0))
      throw Error(ErrorKind::NotInImage, "diagonal entry <= v_b has no ReLU preimage");
    root(a) = std::sqrt(excess);
  }
  KernelMatrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    out(a, a) = root(a) * root(a) / h.v_w;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double prod = root(a) * root(b);
      const double arg = M_PI * (K(a, b) - h.v_b) / prod;
      const double theta = j1_inverse(arg);
      out(a, b) = out(b, a) = prod * std::cos(theta) / h.v_w;
    }
  }
  return out;
}

KernelMatrix sinusoidal_kernel_step(const KernelMatrix& K, const Hyperparams& h) {
  require_square(K, "sinusoidal_kernel_step");
  KernelMatrix out = K;
  detail::sinusoidal_step_inplace(out, h);
  return out;
}

KernelMatrix generic_kernel_step(const KernelMatrix& K, const Hyperparams& h,
                                 const Nonlinearity& phi, int order) {
  require_square(K, "generic_kernel_step");
  if (order < 8) throw Error(ErrorKind::InvalidInput, "quadrature order must be >= 8");
  const GaussianQuadrature quad(order);
  const Eigen::Index n = K.rows();
  KernelMatrix out(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    out(a, a) = h.v_b + h.v_w * quad.square_expectation(phi, K(a, a));
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double cab = 0.5 * (K(a, b) + K(b, a));
      out(a, b) = out(b, a) = h.v_b + h.v_w * quad.pair_expectation(phi, K(a, a), cab, K(b, b));
    }
  }
  return out;
}

KernelMatrix kernel_step(const KernelMatrix& K, const Hyperparams& h, const Nonlinearity& phi) {
  switch (phi.kind()) {
    case Nonlinearity::Kind::NormalizedReLU: return relu_kernel_step(K, h);
    case Nonlinearity::Kind::Sinusoidal: return sinusoidal_kernel_step(K, h);
    case Nonlinearity::Kind::Custom: return generic_kernel_step(K, h, phi);
  }
  return K;
}

KernelMatrix propagate_kernel(KernelMatrix K, int steps, const Hyperparams& h,
                              const Nonlinearity& phi) {
  if (steps < 0) throw Error(ErrorKind::InvalidInput, "depth must be >= 0");
  require_square(K, "propagate_kernel");
  for (int d = 0; d < steps; ++d) detail::kernel_step_inplace(K, h, phi);
  return K;
}

KernelMatrix nngp_kernel(const Matrix& X, int depth, const Hyperparams& h,
                         const Nonlinearity& phi) {
  if (depth < 0) throw Error(ErrorKind::InvalidInput, "depth must be >= 0");
  return propagate_kernel(linear_kernel(X, h), depth, h, phi);
}

SinusoidalFixedPoint sinusoidal_deep_fixed_point(const Hyperparams& h) {
  h.validate();
  if (h.v_w == 1.0)
    throw Error(ErrorKind::PhaseBoundary, "v_w = 1 is the sinusoidal phase boundary");
  const double v_star = h.v_b + h.v_w;
  if (h.v_w < 1.0) return {v_star, 1.0};

  const double bias_share = h.v_b / v_star;
  const double weight_share = h.v_w / v_star;
  const auto gap = [&](double c) { return bias_share + weight_share * std::exp(v_star * (c - 1.0)) - c; };

  // gap(0) > 0 and gap is convex with slope v_w - 1 > 0 at c = 1, so it is
  // negative just below 1 and the root in (0, 1) is unique.
  double lo = 0.0;
  double hi = 1.0 - 1e-3;
  while (gap(hi) >= 0.0 && hi < 1.0 - 1e-15) hi = 1.0 - (1.0 - hi) * 0.1;
  double mid = 0.5 * (lo + hi);
  for (int i = 0; i < 400; ++i) {
    mid = 0.5 * (lo + hi);
    const double g = gap(mid);
    if (std::abs(g) < 1e-12 && hi - lo < 1e-12) break;
    if (g > 0.0)
      lo = mid;
    else
      hi = mid;
    if (mid == lo && mid == hi) break;
  }
  return {v_star, mid};
}

}  // namespace bnngp
