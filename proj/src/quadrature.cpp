#include "bnngp/quadrature.hpp"

#include "bnngp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace bnngp {

namespace {
constexpr double kTruncation = 10.0;
constexpr double kMaxPiece = 2.5;
}  // namespace

GaussLegendre::GaussLegendre(int order) {
  if (order < 1) throw Error(ErrorKind::InvalidInput, "quadrature order must be positive");
  const auto n = static_cast<std::size_t>(order);
  nodes.resize(n);
  weights.resize(n);
  // Newton iteration on P_n from the Chebyshev-like initial guess; nodes are
  // symmetric so only half are computed.
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      const double nn = static_cast<double>(n);
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      // recompute derivative at the converged node
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

GaussianQuadrature::GaussianQuadrature(int order) : rule_(order) {}

std::vector<double> GaussianQuadrature::segment_edges(const std::vector<double>& breakpoints) const {
  std::vector<double> cuts{-kTruncation, kTruncation};
  for (double b : breakpoints)
    if (std::isfinite(b) && b > -kTruncation && b < kTruncation) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> edges{cuts.front()};
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / kMaxPiece)));
    for (int p = 1; p <= pieces; ++p) edges.push_back(cuts[i] + len * p / pieces);
  }
  edges.back() = cuts.back();
  return edges;
}

double GaussianQuadrature::square_expectation(const Nonlinearity& phi, double c) const {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw Error(ErrorKind::DegenerateKernel, "negative or non-finite variance");
  const double s = std::sqrt(c);
  if (s == 0.0) {
    const double v = phi(0.0);
    return v * v;
  }
  std::vector<double> brk;
  for (double t : phi.breakpoints()) brk.push_back(t / s);
  return expect(
      [&](double u) {
        const double v = phi(s * u);
        return v * v;
      },
      brk);
}

double GaussianQuadrature::pair_expectation(const Nonlinearity& phi, double caa, double cab,
                                            double cbb) const {
  if (!std::isfinite(caa) || !std::isfinite(cab) || !std::isfinite(cbb) || caa < 0.0 || cbb < 0.0)
    throw Error(ErrorKind::DegenerateKernel, "2x2 covariance block is not PSD");
  const double sa = std::sqrt(caa);
  const double sb = std::sqrt(cbb);
  if (sa == 0.0 || sb == 0.0) {
    if (cab != 0.0) throw Error(ErrorKind::DegenerateKernel, "2x2 covariance block is not PSD");
    // one coordinate is identically zero
    if (sa == 0.0 && sb == 0.0) return phi(0.0) * phi(0.0);
    const double s = sa == 0.0 ? sb : sa;
    std::vector<double> brk;
    for (double t : phi.breakpoints()) brk.push_back(t / s);
    return phi(0.0) * expect([&](double u) { return phi(s * u); }, brk);
  }
  double rho = cab / (sa * sb);
  if (std::abs(rho) > 1.0 + 1e-8)
    throw Error(ErrorKind::DegenerateKernel, "2x2 covariance block is not PSD");
  rho = std::clamp(rho, -1.0, 1.0);
  const double cond_sd = sb * std::sqrt(std::max(0.0, 1.0 - rho * rho));

  std::vector<double> outer_brk;
  for (double t : phi.breakpoints()) {
    outer_brk.push_back(t / sa);
    if (rho != 0.0) outer_brk.push_back(t / (rho * sb));
  }
  std::vector<double> inner_brk(phi.breakpoints().size());
  return expect(
      [&](double u) {
        const double first = phi(sa * u);
        if (first == 0.0) return 0.0;
        const double mean = rho * sb * u;
        if (cond_sd == 0.0) return first * phi(mean);
        for (std::size_t k = 0; k < inner_brk.size(); ++k)
          inner_brk[k] = (phi.breakpoints()[k] - mean) / cond_sd;
        return first * expect([&](double v) { return phi(mean + cond_sd * v); }, inner_brk);
      },
      outer_brk);
}

}  // namespace bnngp
