#pragma once

#include "bnngp/types.hpp"

#include <vector>

namespace bnngp {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
  explicit GaussLegendre(int order);
};

/// Gaussian expectations of piecewise-smooth integrands.
///
/// The standard normal is truncated at +-10 (neglected mass < 1e-22) and the
/// line is split at the supplied breakpoints and into sub-intervals no wider
/// than 2.5; each piece gets an `order`-point Gauss-Legendre rule. Splitting
/// at kinks is what lets a ReLU expectation converge spectrally, which a
/// tensor Gauss-Hermite rule does not.
class GaussianQuadrature {
 public:
  explicit GaussianQuadrature(int order = 40);

  /// E[f(u)] for u ~ N(0, 1), with f smooth between `breakpoints` (in u).
  template <class F>
  double expect(F&& f, const std::vector<double>& breakpoints) const {
    const auto edges = segment_edges(breakpoints);
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
      const double half = 0.5 * (edges[s + 1] - edges[s]);
      const double mid = 0.5 * (edges[s + 1] + edges[s]);
      double piece = 0.0;
      for (std::size_t k = 0; k < rule_.nodes.size(); ++k) {
        const double u = mid + half * rule_.nodes[k];
        piece += rule_.weights[k] * std::exp(-0.5 * u * u) * f(u);
      }
      total += half * piece;
    }
    return total * kInvSqrt2Pi;
  }

  /// E[phi(z1) phi(z2)] for (z1, z2) ~ N(0, [[caa, cab], [cab, cbb]]), via a
  /// 2x2 Cholesky and nested one-dimensional rules. Throws degenerate-kernel
  /// when the 2x2 block is not PSD.
  double pair_expectation(const Nonlinearity& phi, double caa, double cab, double cbb) const;

  /// E[phi(z)^2] for z ~ N(0, c).
  double square_expectation(const Nonlinearity& phi, double c) const;

  int order() const { return static_cast<int>(rule_.nodes.size()); }

 private:
  static constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
  std::vector<double> segment_edges(const std::vector<double>& breakpoints) const;

  GaussLegendre rule_;
};

}  // namespace bnngp
