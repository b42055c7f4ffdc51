#include "bnngp/sampler.hpp"

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

void check_inputs(const Architecture& arch, const Matrix& X, int n_samples) {
  arch.validate();
  if (n_samples < 1) throw Error(ErrorKind::InvalidInput, "n_samples must be >= 1");
  if (X.rows() < 1) throw Error(ErrorKind::InvalidInput, "X must have at least one row");
  if (X.cols() != arch.input_dim)
    throw Error(ErrorKind::InvalidInput, "X has " + std::to_string(X.cols()) +
                                             " columns but the architecture expects " +
                                             std::to_string(arch.input_dim));
  if (!X.allFinite()) throw Error(ErrorKind::InvalidInput, "X has non-finite entries");
}

SampleBatch empty_batch(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                        int n_samples, RngSeed seed) {
  SampleBatch b;
  b.n_samples = n_samples;
  b.n_inputs = static_cast<int>(X.rows());
  b.n_outputs = arch.output_dim;
  b.values.assign(static_cast<std::size_t>(n_samples) * b.n_inputs * b.n_outputs, 0.0);
  b.arch = arch;
  b.hyper = h;
  b.seed = seed;
  return b;
}

}  // namespace

SampleBatch sample_bnn_prior(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                             int n_samples, RngSeed seed, int threads) {
  check_inputs(arch, X, n_samples);
  if (!arch.all_finite())
    throw Error(ErrorKind::ArchitectureValidation, "sample_bnn_prior needs finite widths only");
  // v_w = 0 is allowed here: a zero-variance prior is a legitimate BNN
  if (!(h.v_b >= 0.0 && h.v_w >= 0.0 && std::isfinite(h.v_b) && std::isfinite(h.v_w)))
    throw Error(ErrorKind::InvalidInput, "v_b and v_w must be finite and non-negative");

  SampleBatch batch = empty_batch(arch, h, X, n_samples, seed);
  const int N = batch.n_inputs;
  const int L = batch.n_outputs;
  std::vector<int> widths;
  for (const auto& layer : arch.layers) widths.push_back(layer.width);
  widths.push_back(L);
  const double sd_b = std::sqrt(h.v_b);

  parallel_for(
      static_cast<std::size_t>(n_samples),
      [&](std::size_t begin, std::size_t end, int) {
        Matrix in, out;
        Vector w;
        for (std::size_t s = begin; s < end; ++s) {
          NormalStream rng(seed.child(s));
          in = X.transpose();  // fan_in x N, one column per input
          int fan_in_scale = 1;
          for (std::size_t layer = 0; layer < widths.size(); ++layer) {
            const int width = widths[layer];
            const double sd_w = std::sqrt(h.v_w / fan_in_scale);
            out.resize(width, N);
            w.resize(in.rows());
            for (int j = 0; j < width; ++j) {
              rng.fill(w.data(), w.size());
              const double bias = sd_b * rng.next();
              out.row(j) = (sd_w * w.transpose() * in).array() + bias;
            }
            if (layer + 1 < widths.size()) {
              in = out.unaryExpr([&](double x) { return arch.phi(x); });
              fan_in_scale = width;
            }
          }
          double* dst = batch.values.data() + s * N * L;
          for (int n = 0; n < N; ++n)
            for (int l = 0; l < L; ++l) dst[n * L + l] = out(l, n);
        }
      },
      threads);
  return batch;
}

SampleBatch sample_bottleneck_prior(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                                    int n_samples, RngSeed seed, int threads) {
  check_inputs(arch, X, n_samples);
  h.validate();
  SampleBatch batch = empty_batch(arch, h, X, n_samples, seed);
  const int N = batch.n_inputs;
  const int L = batch.n_outputs;
  const Nonlinearity& phi = arch.phi;

  // The segment before the first bottleneck is deterministic.
  const int pre = arch.pre_bottleneck_depth();
  KernelMatrix k_first = nngp_kernel(X, pre, h, phi);
  const bool has_bottleneck = arch.bottleneck_count() > 0;
  KernelMatrix c_first = k_first;
  if (!has_bottleneck || arch.bottleneck_noise) c_first.diagonal().array() += h.v_n;
  const Matrix l_first = cholesky_with_jitter(c_first).lower;

  parallel_for(
      static_cast<std::size_t>(n_samples),
      [&](std::size_t begin, std::size_t end, int) {
        Matrix K(N, N), C(N, N), Lc(N, N), E, pre_act, Z, eps(N, L), out(N, L);
        for (std::size_t s = begin; s < end; ++s) {
          NormalStream rng(seed.child(s));
          const Matrix* chol = &l_first;
          std::size_t layer = static_cast<std::size_t>(pre);
          while (layer < arch.layers.size()) {
            // arch.layers[layer] is a bottleneck here
            const int H = arch.layers[layer].width;
            if (chol != &l_first) {
              C = K;
              if (arch.bottleneck_noise) C.diagonal().array() += h.v_n;
              cholesky_jitter_into(C, Lc);
            }
            E.resize(N, H);
            rng.fill(E.data(), E.size());
            pre_act.noalias() = chol->triangularView<Eigen::Lower>() * E;
            const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(H));
            Z = pre_act.unaryExpr([&](double x) { return phi(x) * inv_sqrt_h; });
            K.noalias() = h.v_w * (Z * Z.transpose());
            K.array() += h.v_b;
            chol = &Lc;
            ++layer;
            while (layer < arch.layers.size() && !arch.layers[layer].is_bottleneck()) {
              detail::kernel_step_inplace(K, h, phi);
              ++layer;
            }
          }
          if (has_bottleneck) {
            C = K;
            C.diagonal().array() += h.v_n;
            cholesky_jitter_into(C, Lc);
          }
          rng.fill(eps.data(), eps.size());
          out.noalias() = chol->triangularView<Eigen::Lower>() * eps;
          double* dst = batch.values.data() + s * N * L;
          for (int n = 0; n < N; ++n)
            for (int l = 0; l < L; ++l) dst[n * L + l] = out(n, l);
        }
      },
      threads);
  return batch;
}

namespace {

void check_indices(const SampleBatch& b, int i, int j, int a, int c) {
  if (i < 0 || j < 0 || i >= b.n_outputs || j >= b.n_outputs || a < 0 || c < 0 ||
      a >= b.n_inputs || c >= b.n_inputs)
    throw Error(ErrorKind::InvalidInput, "output or input index out of range");
  if (b.n_samples < 2) throw Error(ErrorKind::InvalidInput, "need at least two samples");
}

struct Moments {
  double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
  long n = 0;
};

template <class F>
Moments moments(const SampleBatch& b, std::size_t begin, std::size_t end, F&& pair) {
  // two passes for accuracy
  Moments m;
  m.n = static_cast<long>(end - begin);
  for (std::size_t s = begin; s < end; ++s) {
    const auto [x, y] = pair(s);
    m.mx += x;
    m.my += y;
  }
  m.mx /= m.n;
  m.my /= m.n;
  for (std::size_t s = begin; s < end; ++s) {
    const auto [x, y] = pair(s);
    m.sxx += (x - m.mx) * (x - m.mx);
    m.syy += (y - m.my) * (y - m.my);
    m.sxy += (x - m.mx) * (y - m.my);
  }
  (void)b;
  return m;
}

// Pearson correlation (or covariance) over all samples, with a batch-means
// standard error from 10 contiguous blocks.
template <class F>
CorrEstimate block_statistic(const SampleBatch& b, F&& pair, bool covariance) {
  const auto S = static_cast<std::size_t>(b.n_samples);
  const auto stat = [&](const Moments& m) {
    if (covariance) return m.sxy / static_cast<double>(m.n - 1);
    return m.sxy / std::sqrt(m.sxx * m.syy);
  };
  const Moments all = moments(b, 0, S, pair);
  if (!covariance && (!(all.sxx > 0.0) || !(all.syy > 0.0)))
    throw Error(ErrorKind::UndefinedCorrelation, "zero sample variance");
  CorrEstimate out;
  out.estimate = stat(all);
  const std::size_t blocks = std::min<std::size_t>(10, S / 2);
  if (blocks < 2) {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::vector<double> vals;
  for (std::size_t k = 0; k < blocks; ++k) {
    const Moments m = moments(b, S * k / blocks, S * (k + 1) / blocks, pair);
    if (!covariance && (!(m.sxx > 0.0) || !(m.syy > 0.0))) continue;
    vals.push_back(stat(m));
  }
  if (vals.size() < 2) {
    out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  out.std_error = std::sqrt(ss / (vals.size() - 1) / vals.size());
  return out;
}

}  // namespace

CorrEstimate empirical_quad_corr(const SampleBatch& samples, int out_i, int out_j, int in_a, int in_b) {
  check_indices(samples, out_i, out_j, in_a, in_b);
  const auto pair = [&](std::size_t s) {
    const double x = samples.at(static_cast<int>(s), in_a, out_i);
    const double y = samples.at(static_cast<int>(s), in_b, out_j);
    return std::pair<double, double>{x * x, y * y};
  };
  if (out_i == out_j && in_a == in_b) {
    const Moments m = moments(samples, 0, samples.n_samples, pair);
    if (!(m.sxx > 0.0)) throw Error(ErrorKind::UndefinedCorrelation, "zero sample variance");
    return {1.0, 0.0};
  }
  return block_statistic(samples, pair, false);
}

CorrEstimate empirical_linear_corr(const SampleBatch& samples, int out_i, int out_j, int in_a, int in_b) {
  check_indices(samples, out_i, out_j, in_a, in_b);
  return block_statistic(
      samples,
      [&](std::size_t s) {
        return std::pair<double, double>{samples.at(static_cast<int>(s), in_a, out_i),
                                         samples.at(static_cast<int>(s), in_b, out_j)};
      },
      false);
}

CorrEstimate empirical_cov(const SampleBatch& samples, int out_i, int out_j, int in_a, int in_b) {
  check_indices(samples, out_i, out_j, in_a, in_b);
  return block_statistic(
      samples,
      [&](std::size_t s) {
        return std::pair<double, double>{samples.at(static_cast<int>(s), in_a, out_i),
                                         samples.at(static_cast<int>(s), in_b, out_j)};
      },
      true);
}

double empirical_excess_kurtosis(const SampleBatch& samples, int out_i, int in_a) {
  check_indices(samples, out_i, out_i, in_a, in_a);
  const int S = samples.n_samples;
  double mean = 0.0;
  for (int s = 0; s < S; ++s) mean += samples.at(s, in_a, out_i);
  mean /= S;
  double m2 = 0.0, m4 = 0.0;
  for (int s = 0; s < S; ++s) {
    const double d = samples.at(s, in_a, out_i) - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= S;
  m4 /= S;
  if (!(m2 > 0.0)) throw Error(ErrorKind::UndefinedCorrelation, "zero sample variance");
  return m4 / (m2 * m2) - 3.0;
}

RepeatedEstimate repeated_quad_corr(const Architecture& arch, const Hyperparams& h, const Matrix& X,
                                    int n_samples, int n_runs, RngSeed seed, int out_i, int out_j,
                                    int in_a, int in_b, int threads) {
  if (n_runs < 1) throw Error(ErrorKind::InvalidInput, "n_runs must be >= 1");
  RepeatedEstimate r;
  for (int run = 0; run < n_runs; ++run) {
    const SampleBatch b = sample_bottleneck_prior(arch, h, X, n_samples, seed.child(run), threads);
    r.runs.push_back(empirical_quad_corr(b, out_i, out_j, in_a, in_b).estimate);
  }
  r.mean = std::accumulate(r.runs.begin(), r.runs.end(), 0.0) / n_runs;
  if (n_runs > 1) {
    double ss = 0.0;
    for (double v : r.runs) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / (n_runs - 1));
    r.std_error = r.std / std::sqrt(static_cast<double>(n_runs));
  }
  return r;
}

std::vector<int> equally_spaced_positions(int total_hidden, int n_bottlenecks) {
  if (n_bottlenecks < 0 || n_bottlenecks > total_hidden)
    throw Error(ErrorKind::ArchitectureValidation, "bottleneck count must lie in [0, hidden layers]");
  std::vector<int> pos;
  for (int i = 1; i <= n_bottlenecks; ++i)
    pos.push_back(static_cast<int>(std::lround(static_cast<double>(i) * (total_hidden + 1) /
                                               (n_bottlenecks + 1))));
  return pos;
}

MultiBottleneckRow multi_bottleneck_experiment(int total_hidden, int n_bottlenecks, int width,
                                               const Hyperparams& h, const Matrix& X, int n_samples,
                                               int n_runs, RngSeed seed, int threads) {
  if (X.rows() < 2) throw Error(ErrorKind::InvalidInput, "need at least two inputs");
  if (width < 1) throw Error(ErrorKind::ArchitectureValidation, "bottleneck width must be >= 1");
  Architecture arch = Architecture::wide(static_cast<int>(X.cols()), 2, total_hidden);
  for (int p : equally_spaced_positions(total_hidden, n_bottlenecks))
    arch.layers[static_cast<std::size_t>(p - 1)] = Layer::bottleneck(width);
  arch.bottleneck_noise = true;
  const RepeatedEstimate r = repeated_quad_corr(arch, h, X, n_samples, n_runs, seed, 0, 1, 0, 1, threads);
  return {width, n_bottlenecks, r.mean, r.std};
}

}  // namespace bnngp
