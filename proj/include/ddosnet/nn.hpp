#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "ddosnet/matrix.hpp"
#include "ddosnet/rng.hpp"

namespace ddosnet::nn {

enum class Activation { ReLU, Tanh, Identity };

Activation parse_activation(std::string_view name);
std::string activation_name(Activation act);

double activate(Activation act, double x);
/// Derivative expressed through the pre-activation `a` and output `z`.
/// ReLU's derivative at exactly 0 is 0.
double activate_grad(Activation act, double a, double z);

Vector relu(std::span<const double> x);
Vector relu_grad(std::span<const double> x);

/// Max-subtracted softmax.
Vector softmax(std::span<const double> logits);

inline constexpr double kProbabilityFloor = 1e-12;

/// -sum(onehot * log(max(probs, 1e-12))).
double categorical_crossentropy(std::span<const double> probs, std::span<const double> onehot);

double mse(std::span<const double> x, std::span<const double> x_hat);

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n = 0) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

enum class AdamStatus { Applied, SkippedNonFinite };

/// One bias-corrected Adam update in place. A non-finite gradient leaves both
/// the parameters and the state untouched.
AdamStatus adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                     double learning_rate);

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences, one coordinate at a time.
Vector finite_diff_grad(const ScalarFn& f, std::span<const double> params, double eps);

enum class InitScheme { GlorotUniform, Zeros };

/// Glorot bound uses fan_in + fan_out = rows + cols.
Matrix init_weights(std::size_t rows, std::size_t cols, Rng& rng,
                    InitScheme scheme = InitScheme::GlorotUniform);

}  // namespace ddosnet::nn
