#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bnngp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric PSD matrix of prior covariances over a batch of inputs.
using KernelMatrix = Eigen::MatrixXd;

/// Variance triple shared by every layer: bias variance, weight variance
/// (scaled by fan-in when realized as weights) and additive Gaussian noise.
struct Hyperparams {
  double v_b = 0.0;
  double v_w = 1.0;
  double v_n = 0.0;

  /// Throws invalid-input unless v_b >= 0, v_w > 0, v_n >= 0 and all finite.
  void validate() const;
};

class Nonlinearity {
 public:
  enum class Kind { NormalizedReLU, Sinusoidal, Custom };

  /// phi(x) = sqrt(2) max(0, x)
  static Nonlinearity relu();
  /// phi(x) = cos x + sin x
  static Nonlinearity sinusoidal();
  /// A user nonlinearity with declared envelope |phi(x)| < C + M|x|. The
  /// envelope is spot-checked on a grid at construction. `breakpoints` lists
  /// points where phi or its derivative is discontinuous; quadrature splits
  /// its integration intervals there. `derivative` is optional and only used
  /// by the analytic MLL gradient.
  static Nonlinearity custom(std::function<double(double)> fn, double envelope_c, double envelope_m,
                             std::vector<double> breakpoints = {}, std::string name = "custom",
                             std::function<double(double)> derivative = {}, bool linear = false);
  /// phi(x) = x, flagged as linear.
  static Nonlinearity identity();

  double operator()(double x) const;
  double derivative(double x) const;
  bool has_derivative() const;

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  bool is_linear() const noexcept { return linear_; }
  double envelope_c() const noexcept { return envelope_c_; }
  double envelope_m() const noexcept { return envelope_m_; }

 private:
  Nonlinearity() = default;

  Kind kind_ = Kind::NormalizedReLU;
  std::string name_;
  std::function<double(double)> fn_;
  std::function<double(double)> derivative_;
  std::vector<double> breakpoints_;
  double envelope_c_ = 0.0;
  double envelope_m_ = 0.0;
  bool linear_ = false;
};

struct Layer {
  enum class Kind { Wide, Bottleneck };
  Kind kind = Kind::Wide;
  int width = 0;  ///< only meaningful for Bottleneck (finite-width) layers

  static Layer wide() { return {Kind::Wide, 0}; }
  static Layer bottleneck(int width) { return {Kind::Bottleneck, width}; }
  bool is_bottleneck() const { return kind == Kind::Bottleneck; }
};

/// Hidden-layer structure of a (bottleneck) network. A finite-width layer is
/// represented as a Bottleneck layer; a fully finite BNN is one whose layers
/// are all Bottleneck.
struct Architecture {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<Layer> layers;
  Nonlinearity phi = Nonlinearity::relu();
  bool bottleneck_noise = false;

  /// One bottleneck of width H with `pre` wide layers before and `post` wide
  /// layers after it.
  static Architecture single_bottleneck(int input_dim, int output_dim, int pre, int width, int post,
                                        Nonlinearity phi = Nonlinearity::relu());
  /// `depth` wide hidden layers, no bottleneck.
  static Architecture wide(int input_dim, int output_dim, int depth,
                           Nonlinearity phi = Nonlinearity::relu());
  /// Finite BNN with the given hidden widths.
  static Architecture finite(int input_dim, int output_dim, const std::vector<int>& widths,
                             Nonlinearity phi = Nonlinearity::relu());

  int hidden_layers() const { return static_cast<int>(layers.size()); }
  int bottleneck_count() const;
  /// 1-based layer indices of the bottleneck layers.
  std::vector<int> bottleneck_positions() const;
  /// Wide layers before the first bottleneck (all layers when there is none).
  int pre_bottleneck_depth() const;
  /// Weight layers after the last bottleneck: trailing wide layers + 1.
  /// Equals hidden_layers() + 1 when there is no bottleneck.
  int post_bottleneck_depth() const;
  bool all_finite() const;

  /// Throws architecture-validation on non-positive dims or widths.
  void validate() const;
};

}  // namespace bnngp
