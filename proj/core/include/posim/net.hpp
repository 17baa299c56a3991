#pragma once

#include "posim/prob.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace posim {

enum class Activation { kTanh, kRelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// A fully connected softmax classifier/regressor. weights[l] has shape
// layer_dims[l+1] x layer_dims[l]; the output layer always feeds a softmax,
// so every forward pass emits a probability vector.
struct NetworkParams {
  std::vector<int> layer_dims;
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  Activation hidden_activation = Activation::kTanh;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t parameter_count() const;
};

struct TrainConfig {
  double learning_rate = 0.05;
  int batch_size = 128;
  int max_epochs = 50;
  int early_stop_patience = 5;  // epochs without val improvement before stopping
  std::uint64_t rng_seed = 0;
  double l2_penalty = 0.0;      // applied to weights only
};

void validate_network(const NetworkParams& net);
void validate_train_config(const TrainConfig& cfg);

// Seeded Xavier (tanh) / He (relu) initialization, zero biases.
NetworkParams init_network(std::vector<int> layer_dims, Activation activation,
                           std::uint64_t seed);

// Affine -> activation per hidden layer, affine -> softmax at the output.
// Outputs are floored probability vectors (see floor_normalize).
Vec forward(const NetworkParams& net, const Eigen::Ref<const Vec>& input);
Mat forward_batch(const NetworkParams& net, const Mat& inputs);

// Mean over rows of KL(target || net(input)); the objective train() descends.
double data_loss(const NetworkParams& net, const Mat& inputs, const Mat& targets);

struct Gradients {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};

// Analytic gradient of data_loss via backpropagation.
Gradients network_gradients(const NetworkParams& net, const Mat& inputs,
                            const Mat& targets);

// Central finite differences of data_loss, step h. Independent of the
// backprop path; intended for small networks.
Gradients numeric_gradients(const NetworkParams& net, const Mat& inputs,
                            const Mat& targets, double step = 1e-5);

// max over parameters of |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
double gradient_deviation(const Gradients& analytic, const Gradients& numeric);

// Convenience: analytic vs finite differences on one batch.
double gradient_check(const NetworkParams& net, const Mat& inputs, const Mat& targets);

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool improved = false;
};

struct TrainResult {
  NetworkParams net;  // parameters from the best validation epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Mini-batch SGD on mean KL(target || prediction). Deterministic given
// identical inputs and cfg.rng_seed: one shuffle stream drives batch order,
// batches and accumulation run in a fixed order.
TrainResult train(NetworkParams net, const Mat& inputs, const Mat& targets,
                  const Mat& val_inputs, const Mat& val_targets,
                  const TrainConfig& cfg);

}  // namespace posim
