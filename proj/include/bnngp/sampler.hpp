#pragma once

#include "bnngp/rng.hpp"
#include "bnngp/types.hpp"

#include <vector>

namespace bnngp {

/// S draws of the network outputs at N inputs, L channels each.
struct SampleBatch {
  int n_samples = 0;
  int n_inputs = 0;
  int n_outputs = 0;
  std::vector<double> values;  ///< index (s * N + n) * L + l
  Architecture arch;
  Hyperparams hyper;
  RngSeed seed;

  double at(int s, int n, int l) const {
    return values[(static_cast<std::size_t>(s) * n_inputs + n) * n_outputs + l];
  }
};

/// Draws from a finite-width BNN prior: every layer in `arch` must be a
/// finite (Bottleneck) layer. Weights into a layer of fan-in H are N(0, v_w/H)
/// with fan-in 1 for the first layer, biases N(0, v_b). No output noise.
SampleBatch sample_bnn_prior(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                             int n_samples, RngSeed seed, int threads = 0);

/// Draws from a bottleneck NNGP prior. Wide segments are realized exactly as
/// GPs through their kernels; each bottleneck of width H draws H IID
/// preactivation vectors from N(0, K) (plus v_n I when arch.bottleneck_noise)
/// and passes phi(h)/sqrt(H) on. Outputs get v_n I noise.
SampleBatch sample_bottleneck_prior(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                                    int n_samples, RngSeed seed, int threads = 0);

struct CorrEstimate {
  double estimate = 0.0;
  double std_error = 0.0;  ///< batch-means error over 10 contiguous blocks
};

/// Pearson correlation of F_i(x_a)^2 and F_j(x_b)^2 across samples.
/// Throws undefined-correlation when either square has zero sample variance.
CorrEstimate empirical_quad_corr(const SampleBatch& samples, int out_i, int out_j, int in_a, int in_b);

/// Pearson correlation of F_i(x_a) and F_j(x_b).
CorrEstimate empirical_linear_corr(const SampleBatch& samples, int out_i, int out_j, int in_a, int in_b);

/// Sample covariance of F_i(x_a) and F_j(x_b) with its standard error.
CorrEstimate empirical_cov(const SampleBatch& samples, int out_i, int out_j, int in_a, int in_b);

/// Sample excess kurtosis of F_i(x_a).
double empirical_excess_kurtosis(const SampleBatch& samples, int out_i, int in_a);

struct RepeatedEstimate {
  double mean = 0.0;
  double std = 0.0;        ///< run-to-run sample standard deviation
  double std_error = 0.0;  ///< std / sqrt(runs)
  std::vector<double> runs;
};

/// Repeats sample_bottleneck_prior n_runs times (run r uses seed.child(r))
/// and summarizes empirical_quad_corr across runs.
RepeatedEstimate repeated_quad_corr(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                                    int n_samples, int n_runs, RngSeed seed, int out_i, int out_j,
                                    int in_a, int in_b, int threads = 0);

/// 1-based positions of k bottlenecks spread evenly over `total_hidden` layers:
/// round(i (total_hidden + 1) / (k + 1)), i = 1..k.
std::vector<int> equally_spaced_positions(int total_hidden, int n_bottlenecks);

struct MultiBottleneckRow {
  int width = 0;
  int n_bottlenecks = 0;
  double q_mean = 0.0;
  double q_std = 0.0;
};

/// q_cross between outputs 1 and 2 at inputs 1 and 2 for a network with
/// `total_hidden` layers of which `n_bottlenecks` have the given width.
MultiBottleneckRow multi_bottleneck_experiment(int total_hidden, int n_bottlenecks, int width,
                                               const Hyperparams& h, const Matrix& X, int n_samples,
                                               int n_runs, RngSeed seed, int threads = 0);

struct CorrespondenceRow {
  int H = 0;
  double mll_h = 0.0;
  double mll_h_se = 0.0;
  double mll_inf = 0.0;
  double gap = 0.0;       ///< |mll_h - mll_inf|
  double zh_error = 0.0;  ///< RMS Frobenius norm of Z_H - E[phi(h) phi(h)^T]
};

/// For each H: the MC marginal likelihood of a single-bottleneck NNGP against
/// the closed-form NNGP likelihood with D1 + D2 + 1 hidden layers, plus the
/// law-of-large-numbers error of the bottleneck Gram matrix
/// Z_H = (1/H) sum_i phi(h_i) phi(h_i)^T, averaged over n_mc draws.
std::vector<CorrespondenceRow> wide_correspondence_check(int D1, int D2, const std::vector<int>& widths,
                                                         const Hyperparams& h, const Matrix& X,
                                                         const Matrix& Y, int n_mc, RngSeed seed,
                                                         const Nonlinearity& phi = Nonlinearity::relu(),
                                                         int threads = 0);

}  // namespace bnngp
