#include "ddosnet/nn.hpp"

#include <algorithm>
#include <cmath>

#include "ddosnet/errors.hpp"

namespace ddosnet::nn {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::ReLU:
      return "relu";
    case Activation::Tanh:
      return "tanh";
    case Activation::Identity:
      return "identity";
  }
  return "relu";
}

double activate(Activation act, double x) {
  switch (act) {
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::Tanh:
      return std::tanh(x);
    case Activation::Identity:
      return x;
  }
  return x;
}

double activate_grad(Activation act, double a, double z) {
  switch (act) {
    case Activation::ReLU:
      return a > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh:
      return 1.0 - z * z;
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

Vector relu(std::span<const double> x) {
  Vector out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
  return out;
}

Vector relu_grad(std::span<const double> x) {
  Vector out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](double v) { return v > 0.0 ? 1.0 : 0.0; });
  return out;
}

Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  if (logits.empty()) return out;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double categorical_crossentropy(std::span<const double> probs, std::span<const double> onehot) {
  if (probs.size() != onehot.size()) {
    throw DataError("categorical_crossentropy: dimension mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (onehot[i] != 0.0) loss -= onehot[i] * std::log(std::max(probs[i], kProbabilityFloor));
  }
  return loss;
}

double mse(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size()) throw DataError("mse: dimension mismatch");
  if (x.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_hat[i];
    total += d * d;
  }
  return total / static_cast<double>(x.size());
}

AdamStatus adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                     double learning_rate) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DataError("adam_step: shape mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) return AdamStatus::SkippedNonFinite;
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    const double delta = learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    if (delta != 0.0) params[i] -= delta;
  }
  return AdamStatus::Applied;
}

Vector finite_diff_grad(const ScalarFn& f, std::span<const double> params, double eps) {
  Vector point(params.begin(), params.end());
  Vector grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double up = f(point);
    point[i] = saved - eps;
    const double down = f(point);
    point[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

Matrix init_weights(std::size_t rows, std::size_t cols, Rng& rng, InitScheme scheme) {
  Matrix out(rows, cols);
  if (scheme == InitScheme::Zeros) return out;
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& w : out.values()) w = rng.uniform(-bound, bound);
  return out;
}

}  // namespace ddosnet::nn
