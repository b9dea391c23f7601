#pragma once

// Dense-network numerics: layers with hand-written forward/backward passes,
// losses, SGD with momentum and finite-difference gradient verification.
// Everything is templated on the scalar type; the rest of the library
// instantiates it with double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chargepred/errors.hpp"

namespace chargepred {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Row-major so that serialized weight arrays are a straight copy of storage.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

enum class Activation { identity, relu, sigmoid, softmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  throw SchemaError("unknown activation '" + std::string(s) + "'");
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

// Max-subtracted softmax.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  const S shift = z.maxCoeff();
  Vector<S> e = (z.array() - shift).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <typename Derived>
Vector<typename Derived::Scalar> activate(Activation act, const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  switch (act) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(S(0));
    case Activation::sigmoid: return z.unaryExpr([](S v) { return sigmoid(v); });
    case Activation::softmax: return softmax(z);
  }
  return z;
}

// Gradient w.r.t. the pre-activation given the upstream gradient on the
// activation output. ReLU has derivative 0 at the kink.
template <typename Scalar>
Vector<Scalar> activation_backward(Activation act, const Vector<Scalar>& pre, const Vector<Scalar>& out,
                                   const Vector<Scalar>& upstream) {
  switch (act) {
    case Activation::identity: return upstream;
    case Activation::relu:
      return (pre.array() > Scalar(0)).select(upstream, Vector<Scalar>::Zero(upstream.size()));
    case Activation::sigmoid: return (upstream.array() * out.array() * (Scalar(1) - out.array())).matrix();
    case Activation::softmax: return (out.array() * (upstream.array() - out.dot(upstream))).matrix();
  }
  return upstream;
}

// ---------------------------------------------------------------------------
// Layers

template <typename Scalar = double>
struct DenseLayer {
  Matrix<Scalar> weights;  // out_dim x in_dim
  Vector<Scalar> bias;     // out_dim
  Activation activation = Activation::identity;

  DenseLayer() = default;
  DenseLayer(Index in_dim, Index out_dim, Activation act)
      : weights(Matrix<Scalar>::Zero(out_dim, in_dim)), bias(Vector<Scalar>::Zero(out_dim)), activation(act) {}

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }

  void validate() const {
    if (bias.size() != weights.rows())
      throw DimensionError("dense layer: bias has " + std::to_string(bias.size()) + " entries for " +
                           std::to_string(weights.rows()) + " outputs");
  }

  // uniform(-a, a) with a = sqrt(6 / (in + out)); bias zeroed.
  template <typename Gen>
  void init_uniform(Gen& gen) {
    const Scalar limit = std::sqrt(Scalar(6) / Scalar(in_dim() + out_dim()));
    std::uniform_real_distribution<Scalar> dist(-limit, limit);
    for (Index i = 0; i < weights.size(); ++i) weights.data()[i] = dist(gen);
    bias.setZero();
  }
};

template <typename Scalar, typename Derived>
Vector<Scalar> dense_preactivation(const DenseLayer<Scalar>& layer, const Eigen::MatrixBase<Derived>& x) {
  layer.validate();
  if (x.size() != layer.in_dim())
    throw DimensionError("dense layer expects input of size " + std::to_string(layer.in_dim()) + ", got " +
                         std::to_string(x.size()));
  return layer.weights * x + layer.bias;
}

template <typename Scalar, typename Derived>
Vector<Scalar> dense_forward(const DenseLayer<Scalar>& layer, const Eigen::MatrixBase<Derived>& x) {
  Vector<Scalar> out = activate(layer.activation, dense_preactivation(layer, x));
  if (!all_finite(out)) throw NumericError("dense layer produced a non-finite output");
  return out;
}

// First NLN layer: identity weights (never stored, never trained) plus a
// trainable bias, followed by ReLU. Output j is positive iff x_j + b_j > 0.
template <typename Scalar = double>
struct MaskedDiagonalLayer {
  Vector<Scalar> bias;

  MaskedDiagonalLayer() = default;
  explicit MaskedDiagonalLayer(Index dim, Scalar init_bias = Scalar(-0.5))
      : bias(Vector<Scalar>::Constant(dim, init_bias)) {}

  Index dim() const { return bias.size(); }

  Matrix<Scalar> effective_weights() const { return Matrix<Scalar>::Identity(dim(), dim()); }
};

template <typename Scalar, typename Derived>
Vector<Scalar> masked_forward(const MaskedDiagonalLayer<Scalar>& layer, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != layer.dim())
    throw DimensionError("masked layer expects input of size " + std::to_string(layer.dim()) + ", got " +
                         std::to_string(x.size()));
  for (Index j = 0; j < x.size(); ++j) {
    const Scalar v = x(j);
    if (!(v >= Scalar(0) && v <= Scalar(1)))
      throw PreconditionError("masked layer input " + std::to_string(j) + " = " + std::to_string(v) +
                              " is not a probability");
  }
  return (x + layer.bias).cwiseMax(Scalar(0));
}

// ---------------------------------------------------------------------------
// Fixed-topology layer stack: optional masked gate followed by dense layers.

template <typename Scalar = double>
struct LayerStack {
  std::optional<MaskedDiagonalLayer<Scalar>> gate;
  std::vector<DenseLayer<Scalar>> layers;

  Index in_dim() const {
    if (gate) return gate->dim();
    return layers.empty() ? 0 : layers.front().in_dim();
  }
  Index out_dim() const {
    if (!layers.empty()) return layers.back().out_dim();
    return gate ? gate->dim() : 0;
  }

  void validate() const {
    Index width = gate ? gate->dim() : (layers.empty() ? 0 : layers.front().in_dim());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].validate();
      if (layers[i].in_dim() != width)
        throw DimensionError("layer " + std::to_string(i) + " expects " + std::to_string(layers[i].in_dim()) +
                             " inputs but previous stage emits " + std::to_string(width));
      width = layers[i].out_dim();
    }
  }

  Index num_parameters() const {
    Index n = gate ? gate->dim() : 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
};

template <typename Scalar>
struct StackTrace {
  Vector<Scalar> input;
  Vector<Scalar> gate_out;            // empty when the stack has no gate
  std::vector<Vector<Scalar>> pre;    // pre-activation of each dense layer
  std::vector<Vector<Scalar>> post;   // activation output of each dense layer

  const Vector<Scalar>& output() const { return post.empty() ? (gate_out.size() ? gate_out : input) : post.back(); }
  const Vector<Scalar>& layer_input(std::size_t i) const {
    if (i > 0) return post[i - 1];
    return gate_out.size() ? gate_out : input;
  }
};

template <typename Scalar, typename Derived>
StackTrace<Scalar> forward_trace(const LayerStack<Scalar>& stack, const Eigen::MatrixBase<Derived>& x) {
  StackTrace<Scalar> t;
  t.input = x;
  if (stack.gate) t.gate_out = masked_forward(*stack.gate, x);
  t.pre.reserve(stack.layers.size());
  t.post.reserve(stack.layers.size());
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const auto& layer = stack.layers[i];
    t.pre.push_back(dense_preactivation(layer, t.layer_input(i)));
    t.post.push_back(activate(layer.activation, t.pre.back()));
    if (!all_finite(t.post.back())) throw NumericError("layer " + std::to_string(i) + " produced a non-finite output");
  }
  return t;
}

template <typename Scalar, typename Derived>
Vector<Scalar> stack_forward(const LayerStack<Scalar>& stack, const Eigen::MatrixBase<Derived>& x) {
  return forward_trace(stack, x).output();
}

// Same shape as the trainable part of a LayerStack. The masked gate only
// contributes a bias gradient; its fixed identity weights have no entry.
template <typename Scalar = double>
struct StackGradients {
  Vector<Scalar> gate_bias;
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;
  Scalar loss = 0;

  static StackGradients zeros_like(const LayerStack<Scalar>& stack) {
    StackGradients g;
    if (stack.gate) g.gate_bias = Vector<Scalar>::Zero(stack.gate->dim());
    for (const auto& l : stack.layers) {
      g.weights.push_back(Matrix<Scalar>::Zero(l.out_dim(), l.in_dim()));
      g.biases.push_back(Vector<Scalar>::Zero(l.out_dim()));
    }
    return g;
  }

  void scale(Scalar s) {
    gate_bias *= s;
    for (auto& w : weights) w *= s;
    for (auto& b : biases) b *= s;
    loss *= s;
  }
};

// Backpropagates a gradient on the last layer's pre-activation through the
// stack, accumulating (+=) into `grads`. Returns the gradient on the input.
template <typename Scalar>
Vector<Scalar> backward_from_logits(const LayerStack<Scalar>& stack, const StackTrace<Scalar>& trace,
                                    const Vector<Scalar>& dlogits, StackGradients<Scalar>& grads) {
  Vector<Scalar> dpre = dlogits;
  Vector<Scalar> dinput;
  for (std::size_t k = stack.layers.size(); k-- > 0;) {
    const auto& layer = stack.layers[k];
    const Vector<Scalar>& in = trace.layer_input(k);
    grads.weights[k].noalias() += dpre * in.transpose();
    grads.biases[k] += dpre;
    dinput = layer.weights.transpose() * dpre;
    if (k > 0) {
      const auto& below = stack.layers[k - 1];
      dpre = activation_backward(below.activation, trace.pre[k - 1], trace.post[k - 1], dinput);
    }
  }
  if (stack.layers.empty()) dinput = dlogits;
  if (stack.gate) {
    const Vector<Scalar> pass =
        (trace.input + stack.gate->bias).unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
    const Vector<Scalar> dgate = dinput.cwiseProduct(pass);
    grads.gate_bias += dgate;
    dinput = dgate;
  }
  return dinput;
}

enum class Loss { cross_entropy, binary_cross_entropy };

inline constexpr double kProbClip = 1e-12;

// Categorical cross-entropy, -sum y log p.
template <typename Scalar>
Scalar cross_entropy(const Vector<Scalar>& probs, const Vector<Scalar>& target) {
  Scalar s = 0;
  for (Index i = 0; i < probs.size(); ++i)
    if (target(i) != Scalar(0)) s -= target(i) * std::log(std::max(probs(i), Scalar(kProbClip)));
  return s;
}

// Binary cross-entropy averaged over components, probabilities clipped to
// [1e-12, 1 - 1e-12].
template <typename Scalar>
Scalar binary_cross_entropy(const Vector<Scalar>& probs, const Vector<Scalar>& target) {
  Scalar s = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    const Scalar p = std::clamp(probs(i), Scalar(kProbClip), Scalar(1) - Scalar(kProbClip));
    s -= target(i) * std::log(p) + (Scalar(1) - target(i)) * std::log(Scalar(1) - p);
  }
  return probs.size() ? s / Scalar(probs.size()) : Scalar(0);
}

template <typename Scalar>
Scalar loss_value(Loss loss, const Vector<Scalar>& probs, const Vector<Scalar>& target) {
  return loss == Loss::cross_entropy ? cross_entropy(probs, target) : binary_cross_entropy(probs, target);
}

// d loss / d logits for the matching output activation (softmax for CE,
// sigmoid for BCE).
template <typename Scalar>
Vector<Scalar> loss_logit_gradient(Loss loss, const Vector<Scalar>& probs, const Vector<Scalar>& target) {
  if (loss == Loss::cross_entropy) return probs * target.sum() - target;
  return (probs - target) / Scalar(probs.size());
}

template <typename Scalar, typename Derived>
StackGradients<Scalar> backward(const LayerStack<Scalar>& stack, const Eigen::MatrixBase<Derived>& x,
                                const Vector<Scalar>& target, Loss loss) {
  if (stack.layers.empty()) throw PreconditionError("backward needs at least one dense layer");
  const Activation head = stack.layers.back().activation;
  if (loss == Loss::cross_entropy && head != Activation::softmax)
    throw PreconditionError("cross-entropy requires a softmax output layer");
  if (loss == Loss::binary_cross_entropy && head != Activation::sigmoid)
    throw PreconditionError("binary cross-entropy requires a sigmoid output layer");
  if (target.size() != stack.out_dim())
    throw DimensionError("target has " + std::to_string(target.size()) + " entries for " +
                         std::to_string(stack.out_dim()) + " outputs");
  const StackTrace<Scalar> trace = forward_trace(stack, x);
  auto grads = StackGradients<Scalar>::zeros_like(stack);
  grads.loss = loss_value(loss, trace.output(), target);
  backward_from_logits(stack, trace, loss_logit_gradient(loss, trace.output(), target), grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Flat parameter views for the optimizer and the gradient checker.

template <typename Scalar>
struct ParamBlock {
  std::string name;
  std::span<Scalar> values;
};

template <typename Scalar, int Rows, int Cols, int Options>
std::span<Scalar> as_span(Eigen::Matrix<Scalar, Rows, Cols, Options>& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

template <typename Scalar>
std::vector<ParamBlock<Scalar>> parameter_blocks(LayerStack<Scalar>& stack, const std::string& prefix = "") {
  std::vector<ParamBlock<Scalar>> out;
  if (stack.gate) out.push_back({prefix + "gate.bias", as_span(stack.gate->bias)});
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    const std::string base = prefix + "layer" + std::to_string(i);
    out.push_back({base + ".weights", as_span(stack.layers[i].weights)});
    out.push_back({base + ".bias", as_span(stack.layers[i].bias)});
  }
  return out;
}

template <typename Scalar>
std::vector<ParamBlock<Scalar>> gradient_blocks(StackGradients<Scalar>& g, const std::string& prefix = "") {
  std::vector<ParamBlock<Scalar>> out;
  if (g.gate_bias.size()) out.push_back({prefix + "gate.bias", as_span(g.gate_bias)});
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    const std::string base = prefix + "layer" + std::to_string(i);
    out.push_back({base + ".weights", as_span(g.weights[i])});
    out.push_back({base + ".bias", as_span(g.biases[i])});
  }
  return out;
}

// Classical momentum SGD: v <- momentum * v + g; p <- p - lr * v, i.e.
// p <- p - lr * (g + momentum * v_prev).
template <typename Scalar = double>
class Sgd {
 public:
  Sgd(Scalar lr, Scalar momentum) : lr_(lr), momentum_(momentum) {
    if (!(lr >= Scalar(0)) || !std::isfinite(lr)) throw PreconditionError("learning rate must be >= 0");
    if (!(momentum >= Scalar(0) && momentum < Scalar(1))) throw PreconditionError("momentum must lie in [0, 1)");
  }

  Scalar learning_rate() const { return lr_; }
  Scalar momentum() const { return momentum_; }

  // Throws NumericError and leaves every parameter untouched when any
  // gradient entry is non-finite.
  void step(const std::vector<ParamBlock<Scalar>>& params, const std::vector<ParamBlock<Scalar>>& grads) {
    if (params.size() != grads.size())
      throw DimensionError("optimizer got " + std::to_string(grads.size()) + " gradient blocks for " +
                           std::to_string(params.size()) + " parameter blocks");
    for (std::size_t b = 0; b < params.size(); ++b) {
      if (params[b].values.size() != grads[b].values.size())
        throw DimensionError("gradient block '" + grads[b].name + "' does not match parameter '" + params[b].name + "'");
      for (Scalar g : grads[b].values)
        if (!std::isfinite(g)) throw NumericError("non-finite gradient in '" + grads[b].name + "'");
    }
    if (velocity_.empty()) {
      for (const auto& p : params) velocity_.emplace_back(p.values.size(), Scalar(0));
    } else if (velocity_.size() != params.size()) {
      throw DimensionError("optimizer state was created for a different parameter set");
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto& v = velocity_[b];
      auto p = params[b].values;
      auto g = grads[b].values;
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = momentum_ * v[i] + g[i];
        p[i] -= lr_ * v[i];
      }
    }
  }

  const std::vector<std::vector<Scalar>>& velocity() const { return velocity_; }

 private:
  Scalar lr_;
  Scalar momentum_;
  std::vector<std::vector<Scalar>> velocity_;
};

// ---------------------------------------------------------------------------
// Finite-difference verification.

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::string, double>> per_param_errors;

  bool passed(double tolerance = 1e-4) const { return max_rel_error < tolerance; }
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
}

// Central differences with step h over every scalar of every block.
// `loss` must recompute the objective from the current parameter values.
template <typename Scalar, typename LossFn>
GradCheckReport grad_check(const std::vector<ParamBlock<Scalar>>& params,
                           const std::vector<ParamBlock<Scalar>>& analytic, LossFn&& loss, Scalar h = Scalar(1e-5)) {
  if (params.size() != analytic.size()) throw DimensionError("grad_check: block count mismatch");
  GradCheckReport report;
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b].values;
    const auto g = analytic[b].values;
    if (p.size() != g.size()) throw DimensionError("grad_check: size mismatch in '" + params[b].name + "'");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Scalar saved = p[i];
      p[i] = saved + h;
      const Scalar up = loss();
      p[i] = saved - h;
      const Scalar down = loss();
      p[i] = saved;
      const double numeric = static_cast<double>((up - down) / (Scalar(2) * h));
      const double err = relative_error(static_cast<double>(g[i]), numeric);
      report.per_param_errors.emplace_back(params[b].name + "[" + std::to_string(i) + "]", err);
      report.max_rel_error = std::max(report.max_rel_error, err);
    }
  }
  return report;
}

// Gradient check of a layer stack on one (x, target) pair.
template <typename Scalar>
GradCheckReport grad_check(LayerStack<Scalar>& stack, const Vector<Scalar>& x, const Vector<Scalar>& target,
                           Loss loss, Scalar h = Scalar(1e-5)) {
  auto grads = backward(stack, x, target, loss);
  return grad_check(parameter_blocks(stack), gradient_blocks(grads),
                    [&] { return loss_value(loss, stack_forward(stack, x), target); }, h);
}

}  // namespace chargepred
