#pragma once

#include "bnngp/rng.hpp"
#include "bnngp/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace bnngp {

/// log N(y; 0, K + v_n I) through a (jittered) Cholesky factor.
double gaussian_logpdf(const Vector& y, const KernelMatrix& K, double v_n);

/// Sum over the columns of Y of gaussian_logpdf(y, nngp_kernel(X, depth), v_n).
double mll_no_bottleneck(const Matrix& X, const Matrix& Y, int depth, const Hyperparams& h,
                         const Nonlinearity& phi = Nonlinearity::relu());

/// Gradient of mll_no_bottleneck over (log v_b, log v_w, log v_n).
std::array<double, 3> mll_no_bottleneck_gradient(const Matrix& X, const Matrix& Y, int depth,
                                                 const Hyperparams& h,
                                                 const Nonlinearity& phi = Nonlinearity::relu());

struct MllEstimate {
  double value = 0.0;
  int n_mc = 0;
  RngSeed seed;
  double std_error = 0.0;  ///< delta-method error of the log-mean-exp
};

/// log of the mean over sample draws of exp(values), computed stably.
double logmeanexp(const std::vector<double>& values);

/// Monte Carlo marginal log-likelihood of a single-bottleneck NNGP with D1
/// wide layers before a bottleneck of width H and D2 wide layers after it.
/// Sample s draws its N x H standard normals from seed.child(s).
MllEstimate mll_single_bottleneck(const Matrix& X, const Matrix& Y, int D1, int H, int D2,
                                  const Hyperparams& h, const Nonlinearity& phi, int n_mc,
                                  RngSeed seed, int threads = 0);

struct MllWithGradient {
  double value = 0.0;
  std::array<double, 3> grad{};  ///< over (log v_b, log v_w, log v_n)
};

/// Value and gradient of mll_single_bottleneck with the noise held fixed.
/// The analytic path handles ReLU and sinusoidal nonlinearities (and custom
/// ones with a derivative when D1 = D2 = 0); `finite_difference` switches to
/// central differences with step 1e-5 in log-parameter space.
MllWithGradient mll_gradient(const Matrix& X, const Matrix& Y, int D1, int H, int D2,
                             const Hyperparams& h, const Nonlinearity& phi, int n_mc, RngSeed seed,
                             bool finite_difference = false, int threads = 0);

struct OptimizeOptions {
  int n_mc = 100;
  double lr0 = 0.1;
  int max_iters = 1000;
  int final_n_mc = 1000;
  int window = 50;               ///< moving-average window of the stopping rule
  double tolerance = 1e-4;       ///< relative change of the moving average
  bool finite_difference = false;
  int threads = 0;
};

struct OptimizeResult {
  Hyperparams hyper;
  std::vector<double> trace;     ///< MLL at the start of each iteration
  std::vector<double> lr_trace;  ///< learning rate used at each iteration
  double final_mll = 0.0;        ///< re-evaluated with final_n_mc samples
  double final_se = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Adam ascent on (log v_b, log v_w, log v_n). Iteration t draws fresh noise
/// from seed.child(t), takes a step, re-evaluates with the same noise, and
/// multiplies the learning rate by 0.9 when the likelihood went down.
/// Throws optimization-diverged on a non-finite likelihood.
OptimizeResult optimize_hyperparams(const Matrix& X, const Matrix& Y, int D1, int H, int D2,
                                    const Nonlinearity& phi, const Hyperparams& init,
                                    const OptimizeOptions& opts, RngSeed seed);

/// The same protocol for the no-bottleneck NNGP with `depth` hidden layers.
/// The objective is deterministic, so there is no noise to redraw.
OptimizeResult optimize_hyperparams_no_bottleneck(const Matrix& X, const Matrix& Y, int depth,
                                                  const Nonlinearity& phi, const Hyperparams& init,
                                                  const OptimizeOptions& opts);

struct SweepCell {
  int H = 0;  ///< 0 stands for the infinite-width column
  int D2 = 0;
  bool ok = false;
  std::string error;
  Hyperparams hyper;
  double mll_per_point = 0.0;
  double se_per_point = 0.0;
  int iterations = 0;
};

/// Optimizes every (H, D2) cell plus an infinite-width cell per D2 (H = 0,
/// depth D1 + D2 + 1). Failing cells are recorded and the sweep goes on.
std::vector<SweepCell> mll_sweep(const Matrix& X, const Matrix& Y, int D1, const std::vector<int>& H_list,
                                 const std::vector<int>& D2_list, const Nonlinearity& phi,
                                 const Hyperparams& init, const OptimizeOptions& opts, RngSeed seed);

}  // namespace bnngp
