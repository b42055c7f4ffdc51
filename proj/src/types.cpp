#include "bnngp/types.hpp"

#include "bnngp/errors.hpp"

#include <cmath>
#include <utility>

namespace bnngp {

void Hyperparams::validate() const {
  if (!std::isfinite(v_b) || !std::isfinite(v_w) || !std::isfinite(v_n))
    throw Error(ErrorKind::InvalidInput, "hyperparameters must be finite");
  if (v_b < 0.0) throw Error(ErrorKind::InvalidInput, "v_b must be >= 0");
  if (v_w <= 0.0) throw Error(ErrorKind::InvalidInput, "v_w must be > 0");
  if (v_n < 0.0) throw Error(ErrorKind::InvalidInput, "v_n must be >= 0");
}

Nonlinearity Nonlinearity::relu() {
  Nonlinearity n;
  n.kind_ = Kind::NormalizedReLU;
  n.name_ = "relu";
  n.breakpoints_ = {0.0};
  n.envelope_c_ = 1.0;
  n.envelope_m_ = std::sqrt(2.0);
  return n;
}

Nonlinearity Nonlinearity::sinusoidal() {
  Nonlinearity n;
  n.kind_ = Kind::Sinusoidal;
  n.name_ = "sinusoidal";
  n.envelope_c_ = 1.5;  // |cos x + sin x| <= sqrt(2)
  n.envelope_m_ = 0.0;
  return n;
}

Nonlinearity Nonlinearity::custom(std::function<double(double)> fn, double envelope_c,
                                  double envelope_m, std::vector<double> breakpoints,
                                  std::string name, std::function<double(double)> derivative,
                                  bool linear) {
  if (!fn) throw Error(ErrorKind::InvalidInput, "custom nonlinearity needs a function");
  if (!(envelope_c > 0.0) || !(envelope_m > 0.0) || !std::isfinite(envelope_c) ||
      !std::isfinite(envelope_m))
    throw Error(ErrorKind::InvalidInput, "linear envelope constants must be positive");
  for (int i = -2000; i <= 2000; ++i) {
    const double x = 0.025 * i;
    const double y = fn(x);
    if (!std::isfinite(y) || std::abs(y) >= envelope_c + envelope_m * std::abs(x))
      throw Error(ErrorKind::InvalidInput,
                  "nonlinearity '" + name + "' violates its declared linear envelope");
  }
  Nonlinearity n;
  n.kind_ = Kind::Custom;
  n.name_ = std::move(name);
  n.fn_ = std::move(fn);
  n.derivative_ = std::move(derivative);
  n.breakpoints_ = std::move(breakpoints);
  n.envelope_c_ = envelope_c;
  n.envelope_m_ = envelope_m;
  n.linear_ = linear;
  return n;
}

Nonlinearity Nonlinearity::identity() {
  return custom([](double x) { return x; }, 1.0, 1.5, {}, "identity", [](double) { return 1.0; },
                true);
}

double Nonlinearity::operator()(double x) const {
  switch (kind_) {
    case Kind::NormalizedReLU: return x > 0.0 ? M_SQRT2 * x : 0.0;
    case Kind::Sinusoidal: return std::cos(x) + std::sin(x);
    case Kind::Custom: return fn_(x);
  }
  return 0.0;
}

double Nonlinearity::derivative(double x) const {
  switch (kind_) {
    case Kind::NormalizedReLU: return x > 0.0 ? M_SQRT2 : 0.0;
    case Kind::Sinusoidal: return std::cos(x) - std::sin(x);
    case Kind::Custom:
      if (!derivative_) throw Error(ErrorKind::InvalidInput, "nonlinearity has no derivative");
      return derivative_(x);
  }
  return 0.0;
}

bool Nonlinearity::has_derivative() const {
  return kind_ != Kind::Custom || static_cast<bool>(derivative_);
}

Architecture Architecture::single_bottleneck(int input_dim, int output_dim, int pre, int width,
                                             int post, Nonlinearity phi) {
  Architecture a;
  a.input_dim = input_dim;
  a.output_dim = output_dim;
  a.phi = std::move(phi);
  a.layers.assign(static_cast<std::size_t>(std::max(pre, 0)), Layer::wide());
  a.layers.push_back(Layer::bottleneck(width));
  a.layers.insert(a.layers.end(), static_cast<std::size_t>(std::max(post, 0)), Layer::wide());
  return a;
}

Architecture Architecture::wide(int input_dim, int output_dim, int depth, Nonlinearity phi) {
  Architecture a;
  a.input_dim = input_dim;
  a.output_dim = output_dim;
  a.phi = std::move(phi);
  a.layers.assign(static_cast<std::size_t>(std::max(depth, 0)), Layer::wide());
  return a;
}

Architecture Architecture::finite(int input_dim, int output_dim, const std::vector<int>& widths,
                                  Nonlinearity phi) {
  Architecture a;
  a.input_dim = input_dim;
  a.output_dim = output_dim;
  a.phi = std::move(phi);
  for (int w : widths) a.layers.push_back(Layer::bottleneck(w));
  return a;
}

int Architecture::bottleneck_count() const {
  int n = 0;
  for (const auto& l : layers) n += l.is_bottleneck() ? 1 : 0;
  return n;
}

std::vector<int> Architecture::bottleneck_positions() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].is_bottleneck()) out.push_back(static_cast<int>(i) + 1);
  return out;
}

int Architecture::pre_bottleneck_depth() const {
  int n = 0;
  for (const auto& l : layers) {
    if (l.is_bottleneck()) break;
    ++n;
  }
  return n;
}

int Architecture::post_bottleneck_depth() const {
  int trailing = 0;
  for (auto it = layers.rbegin(); it != layers.rend() && !it->is_bottleneck(); ++it) ++trailing;
  return trailing + 1;
}

bool Architecture::all_finite() const {
  for (const auto& l : layers)
    if (!l.is_bottleneck()) return false;
  return true;
}

void Architecture::validate() const {
  if (input_dim < 1) throw Error(ErrorKind::ArchitectureValidation, "input_dim must be >= 1");
  if (output_dim < 1) throw Error(ErrorKind::ArchitectureValidation, "output_dim must be >= 1");
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (layers[i].is_bottleneck() && layers[i].width < 1)
      throw Error(ErrorKind::ArchitectureValidation,
                  "layer " + std::to_string(i + 1) + " has width < 1");
}

}  // namespace bnngp
