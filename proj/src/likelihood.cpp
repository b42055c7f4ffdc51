#include "bnngp/likelihood.hpp"

#include "bnngp/errors.hpp"
#include "bnngp/kernel.hpp"
#include "bnngp/linalg.hpp"
#include "bnngp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bnngp {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

void check_data(const Matrix& X, const Matrix& Y) {
  if (X.rows() < 1 || X.cols() < 1 || Y.cols() < 1)
    throw Error(ErrorKind::InvalidInput, "X and Y must be non-empty");
  if (X.rows() != Y.rows()) throw Error(ErrorKind::InvalidInput, "X and Y row counts differ");
  if (!X.allFinite() || !Y.allFinite()) throw Error(ErrorKind::InvalidInput, "data has non-finite entries");
}

// log N(Y; 0, A) summed over the columns of Y, given the lower factor of A.
double logpdf_from_factor(const Matrix& L, const Matrix& Y, Matrix& scratch) {
  scratch = Y;
  L.triangularView<Eigen::Lower>().solveInPlace(scratch);
  const double quad = scratch.squaredNorm();
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  const double channels = static_cast<double>(Y.cols());
  return -0.5 * quad - 0.5 * channels * logdet - 0.5 * channels * static_cast<double>(Y.rows()) * kLog2Pi;
}

// Gradient of the Gaussian log density over A (entrywise, symmetric):
// 0.5 (A^-1 Y Y^T A^-1 - channels A^-1).
Matrix logpdf_gradient(const Matrix& L, const Matrix& Y) {
  const Eigen::Index n = L.rows();
  Matrix inv = Matrix::Identity(n, n);
  L.triangularView<Eigen::Lower>().solveInPlace(inv);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(inv);
  Matrix alpha = Y;
  L.triangularView<Eigen::Lower>().solveInPlace(alpha);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
  Matrix G = alpha * alpha.transpose();
  G -= static_cast<double>(Y.cols()) * inv;
  G *= 0.5;
  return G;
}

void symmetrize_from_lower(Matrix& K) { K.triangularView<Eigen::StrictlyUpper>() = K.transpose(); }

// K = v_b + v_w Z Z^T without forming Z Z^T twice.
void linear_kernel_into(const Matrix& Z, const Hyperparams& h, Matrix& K) {
  K.setConstant(h.v_b);
  K.selfadjointView<Eigen::Lower>().rankUpdate(Z, h.v_w);
  symmetrize_from_lower(K);
}

void require_analytic(const Nonlinearity& phi, int steps) {
  if (steps > 0 && phi.kind() == Nonlinearity::Kind::Custom)
    throw Error(ErrorKind::InvalidInput,
                "analytic gradient needs a closed-form kernel step; use finite differences for " +
                    phi.name());
}

// Ks[0] is given; fills Ks[1..steps].
void chain_forward(std::vector<Matrix>& Ks, int steps, const Hyperparams& h, const Nonlinearity& phi) {
  Ks.resize(static_cast<std::size_t>(steps) + 1);
  for (int d = 1; d <= steps; ++d) {
    Ks[d] = Ks[d - 1];
    detail::kernel_step_inplace(Ks[d], h, phi);
  }
}

struct ParamGrad {
  double vb = 0.0, vw = 0.0, vn = 0.0;
};

// Reverse pass through the kernel steps. On entry `bar` is the gradient over
// Ks.back(); on exit it is the gradient over Ks.front().
void chain_backward(const std::vector<Matrix>& Ks, Matrix& bar, const Hyperparams& h,
                    const Nonlinearity& phi, ParamGrad& g) {
  const Eigen::Index n = bar.rows();
  Matrix prev(n, n);
  for (std::size_t d = Ks.size() - 1; d >= 1; --d) {
    const Matrix& K = Ks[d - 1];
    const Matrix& out = Ks[d];
    prev.setZero();
    if (phi.kind() == Nonlinearity::Kind::NormalizedReLU) {
      const double scale = h.v_w / M_PI;
      for (Eigen::Index a = 0; a < n; ++a) {
        g.vb += bar(a, a);
        g.vw += K(a, a) * bar(a, a);
        prev(a, a) += h.v_w * bar(a, a);
      }
      for (Eigen::Index b = 0; b < n; ++b) {
        for (Eigen::Index a = 0; a < n; ++a) {
          if (a == b) continue;
          const double gbar = bar(a, b);
          const double s = std::sqrt(K(a, a) * K(b, b));
          const double rho = std::clamp(K(a, b) / s, -1.0, 1.0);
          const double theta = std::acos(rho);
          const double sin_part = s * std::sqrt(std::max(0.0, 1.0 - rho * rho));
          g.vb += gbar;
          g.vw += (out(a, b) - h.v_b) / h.v_w * gbar;
          prev(a, b) += scale * (M_PI - theta) * gbar;
          prev(a, a) += scale * sin_part / (2.0 * K(a, a)) * gbar;
          prev(b, b) += scale * sin_part / (2.0 * K(b, b)) * gbar;
        }
      }
    } else if (phi.kind() == Nonlinearity::Kind::Sinusoidal) {
      for (Eigen::Index a = 0; a < n; ++a) {
        g.vb += bar(a, a);
        g.vw += bar(a, a);
      }
      for (Eigen::Index b = 0; b < n; ++b) {
        for (Eigen::Index a = 0; a < n; ++a) {
          if (a == b) continue;
          const double gbar = bar(a, b);
          const double e = (out(a, b) - h.v_b) / h.v_w;
          g.vb += gbar;
          g.vw += e * gbar;
          const double t = h.v_w * e * gbar;
          prev(a, b) += t;
          prev(a, a) -= 0.5 * t;
          prev(b, b) -= 0.5 * t;
        }
      }
    } else {
      throw Error(ErrorKind::InvalidInput, "no reverse rule for custom kernel steps");
    }
    bar.swap(prev);
  }
}

// Reverse pass through K = v_b + v_w Z Z^T. Returns the gradient over Z when
// requested.
void linear_backward(const Matrix& Z, const Matrix& K0, const Matrix& bar, const Hyperparams& h,
                     ParamGrad& g, Matrix* z_bar) {
  g.vb += bar.sum();
  g.vw += (bar.array() * (K0.array() - h.v_b)).sum() / h.v_w;
  if (z_bar) z_bar->noalias() = h.v_w * ((bar + bar.transpose()) * Z);
}

// Reverse pass through A = L L^T: gradient over A from the gradient over the
// lower factor.
Matrix cholesky_backward(const Matrix& L, const Matrix& L_bar) {
  Matrix P = L.transpose() * L_bar.triangularView<Eigen::Lower>();
  P.triangularView<Eigen::StrictlyUpper>().setZero();
  P.diagonal() *= 0.5;
  // S = L^-T P L^-1
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(P);
  Matrix S = P.transpose();
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(S);
  S.transposeInPlace();
  return 0.5 * (S + S.transpose());
}

// The jitter ladder adds c * mean(diag A) to the diagonal, so it moves with
// the parameters: dA_used/dA_aa = 1 + c / N on the diagonal.
void add_jitter_adjoint(Matrix& bar, double jitter, const Matrix& A) {
  if (jitter == 0.0) return;
  const double c = jitter / A.diagonal().mean();
  bar.diagonal().array() += c / static_cast<double>(A.rows()) * bar.trace();
}

struct PreComponent {
  std::vector<Matrix> Ks;  ///< lin(X) then D1 steps
  Matrix L;                ///< factor of Ks.back() (+ jitter)
  double jitter = 0.0;
};

PreComponent pre_component(const Matrix& X, int D1, const Hyperparams& h, const Nonlinearity& phi) {
  PreComponent pre;
  pre.Ks.push_back(linear_kernel(X, h));
  chain_forward(pre.Ks, D1, h, phi);
  auto chol = cholesky_with_jitter(pre.Ks.back());
  pre.L = std::move(chol.lower);
  pre.jitter = chol.jitter;
  return pre;
}

struct Workspace {
  Matrix E, pre_act, Z, A, L_post, scratch, z_bar;
  std::vector<Matrix> Ks;
  double jitter = 0.0;
};

// One Monte Carlo term: log p(Y | Z_s). Leaves the post-bottleneck chain and
// output factor in `w` for a reverse pass.
double sample_logp(const Matrix& L_pre, const Matrix& Y, int H, int D2, const Hyperparams& h,
                   const Nonlinearity& phi, RngSeed seed, Workspace& w) {
  const Eigen::Index N = L_pre.rows();
  w.E.resize(N, H);
  NormalStream rng(seed);
  rng.fill(w.E.data(), w.E.size());
  w.pre_act.noalias() = L_pre.triangularView<Eigen::Lower>() * w.E;
  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(H));
  w.Z = w.pre_act.unaryExpr([&](double x) { return phi(x) * inv_sqrt_h; });
  w.Ks.resize(static_cast<std::size_t>(D2) + 1);
  w.Ks[0].resize(N, N);
  linear_kernel_into(w.Z, h, w.Ks[0]);
  chain_forward(w.Ks, D2, h, phi);
  w.A = w.Ks.back();
  w.A.diagonal().array() += h.v_n;
  w.L_post.resize(N, N);
  w.jitter = cholesky_jitter_into(w.A, w.L_post);
  return logpdf_from_factor(w.L_post, Y, w.scratch);
}

MllEstimate summarize(const std::vector<double>& logp, int n_mc, RngSeed seed) {
  MllEstimate est;
  est.n_mc = n_mc;
  est.seed = seed;
  est.value = logmeanexp(logp);
  const double m = *std::max_element(logp.begin(), logp.end());
  double mean = 0.0, sq = 0.0;
  for (double v : logp) mean += std::exp(v - m);
  mean /= n_mc;
  for (double v : logp) sq += (std::exp(v - m) - mean) * (std::exp(v - m) - mean);
  est.std_error = n_mc > 1 ? std::sqrt(sq / (n_mc - 1) / n_mc) / mean : std::numeric_limits<double>::quiet_NaN();
  return est;
}

void check_bottleneck_args(const Matrix& X, const Matrix& Y, int D1, int H, int D2, const Hyperparams& h,
                           int n_mc) {
  check_data(X, Y);
  h.validate();
  if (D1 < 0 || D2 < 0) throw Error(ErrorKind::InvalidInput, "depths must be >= 0");
  if (H < 1) throw Error(ErrorKind::ArchitectureValidation, "bottleneck width must be >= 1");
  if (n_mc < 1) throw Error(ErrorKind::InvalidInput, "n_mc must be >= 1");
}

Hyperparams from_log(const std::array<double, 3>& t) { return {std::exp(t[0]), std::exp(t[1]), std::exp(t[2])}; }

std::array<double, 3> to_log(const Hyperparams& h) { return {std::log(h.v_b), std::log(h.v_w), std::log(h.v_n)}; }

}  // namespace

double gaussian_logpdf(const Vector& y, const KernelMatrix& K, double v_n) {
  if (K.rows() != K.cols() || K.rows() != y.size() || y.size() == 0)
    throw Error(ErrorKind::InvalidInput, "y and K sizes do not match");
  if (!(v_n >= 0.0)) throw Error(ErrorKind::InvalidInput, "v_n must be >= 0");
  Matrix A = K;
  A.diagonal().array() += v_n;
  const Matrix L = cholesky_with_jitter(A).lower;
  Matrix scratch;
  return logpdf_from_factor(L, y, scratch);
}

double mll_no_bottleneck(const Matrix& X, const Matrix& Y, int depth, const Hyperparams& h,
                         const Nonlinearity& phi) {
  check_data(X, Y);
  h.validate();
  Matrix A = nngp_kernel(X, depth, h, phi);
  A.diagonal().array() += h.v_n;
  const Matrix L = cholesky_with_jitter(A).lower;
  Matrix scratch;
  return logpdf_from_factor(L, Y, scratch);
}

std::array<double, 3> mll_no_bottleneck_gradient(const Matrix& X, const Matrix& Y, int depth,
                                                 const Hyperparams& h, const Nonlinearity& phi) {
  check_data(X, Y);
  h.validate();
  require_analytic(phi, depth);
  std::vector<Matrix> Ks{linear_kernel(X, h)};
  chain_forward(Ks, depth, h, phi);
  Matrix A = Ks.back();
  A.diagonal().array() += h.v_n;
  const auto chol = cholesky_with_jitter(A);
  Matrix bar = logpdf_gradient(chol.lower, Y);
  add_jitter_adjoint(bar, chol.jitter, A);
  ParamGrad g;
  g.vn = bar.trace();
  chain_backward(Ks, bar, h, phi, g);
  linear_backward(X, Ks.front(), bar, h, g, nullptr);
  return {g.vb * h.v_b, g.vw * h.v_w, g.vn * h.v_n};
}

double logmeanexp(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorKind::InvalidInput, "logmeanexp of an empty set");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s / static_cast<double>(values.size()));
}

MllEstimate mll_single_bottleneck(const Matrix& X, const Matrix& Y, int D1, int H, int D2,
                                  const Hyperparams& h, const Nonlinearity& phi, int n_mc,
                                  RngSeed seed, int threads) {
  check_bottleneck_args(X, Y, D1, H, D2, h, n_mc);
  const PreComponent pre = pre_component(X, D1, h, phi);
  std::vector<double> logp(static_cast<std::size_t>(n_mc));
  parallel_for(
      logp.size(),
      [&](std::size_t begin, std::size_t end, int) {
        Workspace w;
        for (std::size_t s = begin; s < end; ++s)
          logp[s] = sample_logp(pre.L, Y, H, D2, h, phi, seed.child(s), w);
      },
      threads);
  return summarize(logp, n_mc, seed);
}

MllWithGradient mll_gradient(const Matrix& X, const Matrix& Y, int D1, int H, int D2,
                             const Hyperparams& h, const Nonlinearity& phi, int n_mc, RngSeed seed,
                             bool finite_difference, int threads) {
  check_bottleneck_args(X, Y, D1, H, D2, h, n_mc);
  MllWithGradient out;
  if (finite_difference) {
    constexpr double step = 1e-5;
    const auto theta = to_log(h);
    out.value = mll_single_bottleneck(X, Y, D1, H, D2, h, phi, n_mc, seed, threads).value;
    for (int k = 0; k < 3; ++k) {
      auto up = theta, down = theta;
      up[k] += step;
      down[k] -= step;
      const double f_up = mll_single_bottleneck(X, Y, D1, H, D2, from_log(up), phi, n_mc, seed, threads).value;
      const double f_down =
          mll_single_bottleneck(X, Y, D1, H, D2, from_log(down), phi, n_mc, seed, threads).value;
      out.grad[k] = (f_up - f_down) / (2.0 * step);
    }
    return out;
  }

  require_analytic(phi, D1 + D2);
  if (!phi.has_derivative())
    throw Error(ErrorKind::InvalidInput, "analytic gradient needs the derivative of " + phi.name());
  const PreComponent pre = pre_component(X, D1, h, phi);
  const Eigen::Index N = X.rows();
  const auto S = static_cast<std::size_t>(n_mc);
  std::vector<double> logp(S);
  std::vector<ParamGrad> grads(S);
  std::vector<Matrix> l_bars(S);
  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(H));

  parallel_for(
      S,
      [&](std::size_t begin, std::size_t end, int) {
        Workspace w;
        Matrix bar, h_bar;
        for (std::size_t s = begin; s < end; ++s) {
          logp[s] = sample_logp(pre.L, Y, H, D2, h, phi, seed.child(s), w);
          bar = logpdf_gradient(w.L_post, Y);
          add_jitter_adjoint(bar, w.jitter, w.A);
          ParamGrad& g = grads[s];
          g.vn = bar.trace();
          chain_backward(w.Ks, bar, h, phi, g);
          linear_backward(w.Z, w.Ks.front(), bar, h, g, &w.z_bar);
          h_bar = w.z_bar.cwiseProduct(w.pre_act.unaryExpr([&](double x) { return phi.derivative(x); })) *
                  inv_sqrt_h;
          l_bars[s].noalias() = h_bar * w.E.transpose();
        }
      },
      threads);

  // d logmeanexp = sum_s softmax(logp)_s d logp_s
  const double m = *std::max_element(logp.begin(), logp.end());
  std::vector<double> weight(S);
  double total = 0.0;
  for (std::size_t s = 0; s < S; ++s) total += (weight[s] = std::exp(logp[s] - m));
  ParamGrad g;
  Matrix l_bar = Matrix::Zero(N, N);
  for (std::size_t s = 0; s < S; ++s) {
    const double ws = weight[s] / total;
    g.vb += ws * grads[s].vb;
    g.vw += ws * grads[s].vw;
    g.vn += ws * grads[s].vn;
    l_bar += ws * l_bars[s];
  }
  Matrix bar = cholesky_backward(pre.L, l_bar);
  add_jitter_adjoint(bar, pre.jitter, pre.Ks.back());
  chain_backward(pre.Ks, bar, h, phi, g);
  linear_backward(X, pre.Ks.front(), bar, h, g, nullptr);

  out.value = m + std::log(total / static_cast<double>(S));
  out.grad = {g.vb * h.v_b, g.vw * h.v_w, g.vn * h.v_n};
  return out;
}

namespace {

struct Adam {
  std::array<double, 3> m{}, v{};
  int t = 0;

  void step(std::array<double, 3>& theta, const std::array<double, 3>& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    for (int k = 0; k < 3; ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
      v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
      const double m_hat = m[k] / (1.0 - std::pow(b1, t));
      const double v_hat = v[k] / (1.0 - std::pow(b2, t));
      theta[k] += lr * m_hat / (std::sqrt(v_hat) + eps);  // ascent
    }
  }
};

bool moving_average_converged(const std::vector<double>& trace, int window, double tol) {
  const auto w = static_cast<std::size_t>(window);
  if (window < 1 || trace.size() < 2 * w) return false;
  const auto end = trace.end();
  const double last = std::accumulate(end - w, end, 0.0) / window;
  const double prev = std::accumulate(end - 2 * w, end - w, 0.0) / window;
  return std::abs(last - prev) <= tol * std::abs(prev);
}

void check_init(const Hyperparams& init) {
  init.validate();
  if (!(init.v_b > 0.0 && init.v_n > 0.0))
    throw Error(ErrorKind::InvalidInput, "initial hyperparameters must be strictly positive");
}

template <class Eval>
OptimizeResult run_adam(const Hyperparams& init, const OptimizeOptions& opts, Eval&& eval) {
  check_init(init);
  if (opts.max_iters < 0) throw Error(ErrorKind::InvalidInput, "max_iters must be >= 0");
  OptimizeResult res;
  auto theta = to_log(init);
  Adam adam;
  double lr = opts.lr0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    // eval(theta, iteration, want_grad)
    const MllWithGradient here = eval(theta, it, true);
    if (!std::isfinite(here.value)) {
      res.trace.push_back(here.value);
      throw OptimizationDiverged("non-finite MLL at iteration " + std::to_string(it), res.trace);
    }
    res.trace.push_back(here.value);
    res.lr_trace.push_back(lr);
    adam.step(theta, here.grad, lr);
    for (double t : theta)
      if (!std::isfinite(t) || std::abs(t) > 700.0)
        throw OptimizationDiverged("hyperparameters left the representable range", res.trace);
    const double after = eval(theta, it, false).value;
    if (!std::isfinite(after))
      throw OptimizationDiverged("non-finite MLL after step " + std::to_string(it), res.trace);
    if (after < here.value) lr *= 0.9;
    res.iterations = it;
    if (moving_average_converged(res.trace, opts.window, opts.tolerance)) {
      res.converged = true;
      break;
    }
  }
  res.hyper = from_log(theta);
  return res;
}

// Iteration noise streams are seed.child(t) for t >= 1; the final evaluation
// uses a stream index no iteration reaches.
constexpr std::uint64_t kFinalStream = 0xf1a1ULL << 32;

}  // namespace

OptimizeResult optimize_hyperparams(const Matrix& X, const Matrix& Y, int D1, int H, int D2,
                                    const Nonlinearity& phi, const Hyperparams& init,
                                    const OptimizeOptions& opts, RngSeed seed) {
  check_bottleneck_args(X, Y, D1, H, D2, init, std::max(1, opts.n_mc));
  OptimizeResult res = run_adam(init, opts, [&](const std::array<double, 3>& theta, int it, bool grad) {
    const Hyperparams h = from_log(theta);
    const RngSeed s = seed.child(static_cast<std::uint64_t>(it));
    if (grad) return mll_gradient(X, Y, D1, H, D2, h, phi, opts.n_mc, s, opts.finite_difference, opts.threads);
    MllWithGradient v;
    v.value = mll_single_bottleneck(X, Y, D1, H, D2, h, phi, opts.n_mc, s, opts.threads).value;
    return v;
  });
  const MllEstimate fin =
      mll_single_bottleneck(X, Y, D1, H, D2, res.hyper, phi, opts.final_n_mc, seed.child(kFinalStream), opts.threads);
  if (!std::isfinite(fin.value)) throw OptimizationDiverged("non-finite final MLL", res.trace);
  res.final_mll = fin.value;
  res.final_se = fin.std_error;
  return res;
}

OptimizeResult optimize_hyperparams_no_bottleneck(const Matrix& X, const Matrix& Y, int depth,
                                                  const Nonlinearity& phi, const Hyperparams& init,
                                                  const OptimizeOptions& opts) {
  check_data(X, Y);
  OptimizeResult res = run_adam(init, opts, [&](const std::array<double, 3>& theta, int, bool grad) {
    const Hyperparams h = from_log(theta);
    MllWithGradient v;
    v.value = mll_no_bottleneck(X, Y, depth, h, phi);
    if (grad) v.grad = mll_no_bottleneck_gradient(X, Y, depth, h, phi);
    return v;
  });
  res.final_mll = mll_no_bottleneck(X, Y, depth, res.hyper, phi);
  res.final_se = 0.0;
  return res;
}

std::vector<SweepCell> mll_sweep(const Matrix& X, const Matrix& Y, int D1, const std::vector<int>& H_list,
                                 const std::vector<int>& D2_list, const Nonlinearity& phi,
                                 const Hyperparams& init, const OptimizeOptions& opts, RngSeed seed) {
  if (H_list.empty() || D2_list.empty()) throw Error(ErrorKind::InvalidInput, "width and depth lists must be nonempty");
  check_data(X, Y);
  const double n_points = static_cast<double>(X.rows());
  std::vector<SweepCell> cells;
  std::uint64_t index = 0;
  for (int D2 : D2_list) {
    std::vector<int> widths = H_list;
    widths.push_back(0);
    for (int H : widths) {
      SweepCell cell;
      cell.H = H;
      cell.D2 = D2;
      try {
        const OptimizeResult r =
            H == 0 ? optimize_hyperparams_no_bottleneck(X, Y, D1 + D2 + 1, phi, init, opts)
                   : optimize_hyperparams(X, Y, D1, H, D2, phi, init, opts, seed.child(index));
        cell.ok = true;
        cell.hyper = r.hyper;
        cell.mll_per_point = r.final_mll / n_points;
        cell.se_per_point = r.final_se / n_points;
        cell.iterations = r.iterations;
      } catch (const Error& e) {
        cell.ok = false;
        cell.error = e.what();
      }
      cells.push_back(cell);
      ++index;
    }
  }
  return cells;
}

}  // namespace bnngp
