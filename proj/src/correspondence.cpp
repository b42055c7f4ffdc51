#include "bnngp/errors.hpp"
#include "bnngp/kernel.hpp"
#include "bnngp/likelihood.hpp"
#include "bnngp/linalg.hpp"
#include "bnngp/parallel.hpp"
#include "bnngp/sampler.hpp"

#include <cmath>

namespace bnngp {

std::vector<CorrespondenceRow> wide_correspondence_check(int D1, int D2, const std::vector<int>& widths,
                                                         const Hyperparams& h, const Matrix& X,
                                                         const Matrix& Y, int n_mc, RngSeed seed,
                                                         const Nonlinearity& phi, int threads) {
  h.validate();
  if (!(h.v_n > 0.0)) throw Error(ErrorKind::InvalidInput, "the correspondence check needs v_n > 0");
  if (D1 < 0 || D2 < 0) throw Error(ErrorKind::InvalidInput, "depths must be >= 0");
  if (widths.empty()) throw Error(ErrorKind::InvalidInput, "width ladder is empty");
  for (int H : widths) {
    if (H < 1) throw Error(ErrorKind::ArchitectureValidation, "bottleneck width must be >= 1");
    if (H == 1 && phi.is_linear() && D2 == 0)
      throw Error(ErrorKind::ArchitectureValidation,
                  "a width-1 linear bottleneck feeding the output directly is degenerate");
  }

  const double mll_inf = mll_no_bottleneck(X, Y, D1 + D2 + 1, h, phi);
  const KernelMatrix k_pre = nngp_kernel(X, D1, h, phi);
  const Matrix l_pre = cholesky_with_jitter(k_pre).lower;
  const KernelMatrix gram_limit = kernel_step(k_pre, Hyperparams{0.0, 1.0, 0.0}, phi);
  const Eigen::Index N = X.rows();

  std::vector<CorrespondenceRow> rows;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int H = widths[i];
    const RngSeed ladder_seed = seed.child(i);
    const MllEstimate est = mll_single_bottleneck(X, Y, D1, H, D2, h, phi, n_mc, ladder_seed.child(0), threads);

    const RngSeed gram_seed = ladder_seed.child(1);
    std::vector<double> sq(static_cast<std::size_t>(n_mc));
    parallel_for(
        sq.size(),
        [&](std::size_t begin, std::size_t end, int) {
          Matrix E(N, H), act;
          for (std::size_t s = begin; s < end; ++s) {
            NormalStream rng(gram_seed.child(s));
            rng.fill(E.data(), E.size());
            act = (l_pre.triangularView<Eigen::Lower>() * E).unaryExpr([&](double x) { return phi(x); });
            const Matrix z_h = act * act.transpose() / static_cast<double>(H);
            sq[s] = (z_h - gram_limit).squaredNorm();
          }
        },
        threads);
    double mean_sq = 0.0;
    for (double v : sq) mean_sq += v;
    mean_sq /= static_cast<double>(sq.size());

    CorrespondenceRow row;
    row.H = H;
    row.mll_h = est.value;
    row.mll_h_se = est.std_error;
    row.mll_inf = mll_inf;
    row.gap = std::abs(est.value - mll_inf);
    row.zh_error = std::sqrt(mean_sq);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bnngp
