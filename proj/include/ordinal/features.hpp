#pragma once

// Single-hidden-layer regression network. It is trained by gradient descent
// on squared error against the continuous target; its hidden activations
// serve as the ordinal learner's input representation.

#include <cstdint>
#include <string>

#include "ordinal/core.hpp"

namespace ordinal {

enum class Activation { tanh, relu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Parameters are stored row-major: hidden_weights[h * inputs + j].
/// Targets are standardized internally; predictions come back in the
/// original units.
struct MLPRegressor {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  Activation activation = Activation::tanh;
  Vector hidden_weights;  // H x inputs
  Vector hidden_bias;     // H
  Vector output_weights;  // H
  double output_bias = 0.0;
  double target_mean = 0.0;
  double target_scale = 1.0;

  MLPRegressor() = default;
  MLPRegressor(std::size_t inputs, std::size_t hidden, Activation activation);

  std::size_t parameter_count() const { return hidden * inputs + 2 * hidden + 1; }
};

/// Seeded uniform initialization in +-1/sqrt(fan_in) for both layers.
void mlp_initialize(MLPRegressor& model, std::uint64_t seed);

/// Prediction in standardized target units.
double mlp_forward(const MLPRegressor& model, std::span<const double> x);
/// Prediction in original target units.
double mlp_predict(const MLPRegressor& model, std::span<const double> x);
/// Hidden activations, length H.
Vector mlp_embed(const MLPRegressor& model, std::span<const double> x);

/// Flat parameter order: hidden weights, hidden bias, output weights,
/// output bias.
Vector mlp_parameters(const MLPRegressor& model);
void mlp_set_parameters(MLPRegressor& model, std::span<const double> params);

struct LossGradient {
  double loss = 0.0;
  Vector gradient;  // same order as mlp_parameters
};

/// L = 1/(2n) sum (f(x_i) - t_i)^2 with t in standardized units.
LossGradient mlp_loss_gradient(const MLPRegressor& model, const std::vector<Vector>& rows,
                               std::span<const double> standardized_targets);

struct MLPOptions {
  std::size_t hidden = 100;
  double learning_rate = 0.001;
  /// Epochs without validation-MAE improvement before stopping.
  std::size_t patience = 100;
  std::size_t max_epochs = 5000;
  Activation activation = Activation::tanh;
  std::uint64_t seed = 0;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  /// Train only the output layer; the hidden layer keeps its initial values.
  bool readout_only = false;
};

struct MLPTrainResult {
  MLPRegressor model;       // best-validation snapshot
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_validation_mae = 0.0;
  Vector train_loss;        // per epoch, before that epoch's update
  Vector validation_mae;    // per epoch, index 0 = initial parameters
};

/// Full-batch (or mini-batch) gradient descent with early stopping on the
/// validation MAE. A non-finite loss throws, naming the epoch.
MLPTrainResult mlp_train(const std::vector<Vector>& train_rows, std::span<const double> train_targets,
                         const std::vector<Vector>& validation_rows,
                         std::span<const double> validation_targets, const MLPOptions& options);

}  // namespace ordinal
