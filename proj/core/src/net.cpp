#include "posim/net.hpp"

#include "posim/errors.hpp"
#include "posim/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace posim {

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::invalid_argument("unknown activation: " + s);
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

void validate_network(const NetworkParams& net) {
  if (net.layer_dims.size() < 2)
    throw std::invalid_argument("network needs at least input and output layers");
  for (int d : net.layer_dims)
    if (d < 1) throw std::invalid_argument("non-positive layer dimension");
  const std::size_t layers = net.layer_dims.size() - 1;
  if (net.weights.size() != layers || net.biases.size() != layers)
    throw std::invalid_argument("weight/bias count does not match layer_dims");
  for (std::size_t l = 0; l < layers; ++l) {
    if (net.weights[l].rows() != net.layer_dims[l + 1] ||
        net.weights[l].cols() != net.layer_dims[l])
      throw std::invalid_argument("weight matrix shape disagrees with layer_dims");
    if (net.biases[l].size() != net.layer_dims[l + 1])
      throw std::invalid_argument("bias vector length disagrees with layer_dims");
  }
}

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0))
    throw std::invalid_argument("learning_rate must be non-negative");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (cfg.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (cfg.early_stop_patience < 0)
    throw std::invalid_argument("early_stop_patience must be >= 0");
  if (cfg.l2_penalty < 0.0) throw std::invalid_argument("l2_penalty must be >= 0");
}

NetworkParams init_network(std::vector<int> layer_dims, Activation activation,
                           std::uint64_t seed) {
  NetworkParams net;
  net.layer_dims = std::move(layer_dims);
  net.hidden_activation = activation;
  Rng rng = Rng::for_purpose(seed, "net.init");
  const std::size_t layers = net.layer_dims.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = net.layer_dims[l];
    const int fan_out = net.layer_dims[l + 1];
    const double scale = activation == Activation::kRelu
                             ? std::sqrt(2.0 / fan_in)
                             : std::sqrt(1.0 / fan_in);
    Mat w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vec::Zero(fan_out));
  }
  validate_network(net);
  return net;
}

namespace {

Mat apply_activation(Mat z, Activation a) {
  if (a == Activation::kTanh) return z.array().tanh().matrix();
  return z.array().max(0.0).matrix();
}

// Derivative of the activation expressed through the activation value.
Mat activation_grad_from_output(const Mat& activated, Activation a) {
  if (a == Activation::kTanh) return (1.0 - activated.array().square()).matrix();
  return (activated.array() > 0.0).cast<double>().matrix();
}

Mat softmax_rows(Mat z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - m).exp();
    z.row(r) /= z.row(r).sum();
  }
  return z;
}

// Per-layer activations, inputs first, softmax output last.
std::vector<Mat> forward_pass(const NetworkParams& net, const Mat& inputs) {
  std::vector<Mat> acts;
  acts.reserve(net.weights.size() + 1);
  acts.push_back(inputs);
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Mat z = acts.back() * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    acts.push_back(l + 1 == layers ? softmax_rows(std::move(z))
                                   : apply_activation(std::move(z),
                                                      net.hidden_activation));
  }
  return acts;
}

// KL(t || floor_normalize(p)) summed over one row pair; zero targets skip.
double row_kl_floored(const Eigen::Ref<const Eigen::RowVectorXd>& t,
                      const Eigen::Ref<const Eigen::RowVectorXd>& p) {
  Vec q = floor_normalize(p.transpose());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (t[i] > 0.0) acc += t[i] * (std::log(t[i]) - std::log(q[i]));
  return acc < 0.0 ? 0.0 : acc;
}

double mean_kl_rows(const Mat& targets, const Mat& predicted) {
  double acc = 0.0;
  for (Eigen::Index r = 0; r < targets.rows(); ++r)
    acc += row_kl_floored(targets.row(r), predicted.row(r));
  return acc / static_cast<double>(targets.rows());
}

void check_training_shapes(const NetworkParams& net, const Mat& inputs,
                           const Mat& targets, const char* where) {
  if (inputs.rows() == 0) throw std::invalid_argument(std::string(where) + ": empty data");
  if (inputs.rows() != targets.rows())
    throw std::invalid_argument(std::string(where) + ": input/target row mismatch");
  if (inputs.cols() != net.input_dim() || targets.cols() != net.output_dim())
    throw std::invalid_argument(std::string(where) + ": dimension mismatch with network");
}

}  // namespace

Vec forward(const NetworkParams& net, const Eigen::Ref<const Vec>& input) {
  validate_network(net);
  if (input.size() != net.input_dim())
    throw std::invalid_argument("forward: input length != layer_dims[0]");
  Mat row = input.transpose();
  return floor_normalize(forward_pass(net, row).back().row(0).transpose());
}

Mat forward_batch(const NetworkParams& net, const Mat& inputs) {
  validate_network(net);
  if (inputs.cols() != net.input_dim())
    throw std::invalid_argument("forward_batch: input width != layer_dims[0]");
  Mat out = forward_pass(net, inputs).back();
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    out.row(r) = floor_normalize(out.row(r).transpose()).transpose();
  return out;
}

double data_loss(const NetworkParams& net, const Mat& inputs, const Mat& targets) {
  check_training_shapes(net, inputs, targets, "data_loss");
  return mean_kl_rows(targets, forward_pass(net, inputs).back());
}

Gradients network_gradients(const NetworkParams& net, const Mat& inputs,
                            const Mat& targets) {
  validate_network(net);
  Gradients g;
  const std::size_t layers = net.weights.size();
  g.weights.reserve(layers);
  g.biases.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    g.weights.emplace_back(Mat::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.biases.emplace_back(Vec::Zero(net.biases[l].size()));
  }
  if (inputs.rows() == 0) return g;  // empty batch: zero gradient
  if (inputs.rows() != targets.rows() || inputs.cols() != net.input_dim() ||
      targets.cols() != net.output_dim())
    throw std::invalid_argument("network_gradients: shape mismatch");

  const auto acts = forward_pass(net, inputs);
  const double inv_b = 1.0 / static_cast<double>(inputs.rows());

  // Output delta for mean KL(t || softmax(z)) is (p - t) / B.
  Mat delta = (acts.back() - targets) * inv_b;
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta.transpose() * acts[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * net.weights[l]).cwiseProduct(
          activation_grad_from_output(acts[l], net.hidden_activation));
    }
  }
  return g;
}

Gradients numeric_gradients(const NetworkParams& net, const Mat& inputs,
                            const Mat& targets, double step) {
  validate_network(net);
  NetworkParams probe = net;
  Gradients g;
  const std::size_t layers = net.weights.size();
  auto loss_at = [&]() {
    return inputs.rows() == 0 ? 0.0
                              : mean_kl_rows(targets, forward_pass(probe, inputs).back());
  };
  for (std::size_t l = 0; l < layers; ++l) {
    Mat gw(net.weights[l].rows(), net.weights[l].cols());
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      for (Eigen::Index c = 0; c < gw.cols(); ++c) {
        const double saved = probe.weights[l](r, c);
        probe.weights[l](r, c) = saved + step;
        const double up = loss_at();
        probe.weights[l](r, c) = saved - step;
        const double down = loss_at();
        probe.weights[l](r, c) = saved;
        gw(r, c) = (up - down) / (2.0 * step);
      }
    }
    g.weights.push_back(std::move(gw));
    Vec gb(net.biases[l].size());
    for (Eigen::Index i = 0; i < gb.size(); ++i) {
      const double saved = probe.biases[l][i];
      probe.biases[l][i] = saved + step;
      const double up = loss_at();
      probe.biases[l][i] = saved - step;
      const double down = loss_at();
      probe.biases[l][i] = saved;
      gb[i] = (up - down) / (2.0 * step);
    }
    g.biases.push_back(std::move(gb));
  }
  return g;
}

double gradient_deviation(const Gradients& analytic, const Gradients& numeric) {
  double worst = 0.0;
  auto update = [&worst](double a, double n) {
    const double d = std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
    if (d > worst) worst = d;
  };
  for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
    for (Eigen::Index r = 0; r < analytic.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < analytic.weights[l].cols(); ++c)
        update(analytic.weights[l](r, c), numeric.weights[l](r, c));
    for (Eigen::Index i = 0; i < analytic.biases[l].size(); ++i)
      update(analytic.biases[l][i], numeric.biases[l][i]);
  }
  return worst;
}

double gradient_check(const NetworkParams& net, const Mat& inputs, const Mat& targets) {
  return gradient_deviation(network_gradients(net, inputs, targets),
                            numeric_gradients(net, inputs, targets));
}

TrainResult train(NetworkParams net, const Mat& inputs, const Mat& targets,
                  const Mat& val_inputs, const Mat& val_targets,
                  const TrainConfig& cfg) {
  validate_network(net);
  validate_train_config(cfg);
  check_training_shapes(net, inputs, targets, "train");
  check_training_shapes(net, val_inputs, val_targets, "train(val)");

  const Eigen::Index n = inputs.rows();
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  Rng shuffle_rng = Rng::for_purpose(cfg.rng_seed, "train.shuffle");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  TrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  NetworkParams best = net;
  int epochs_since_best = 0;

  Mat bx(batch, inputs.cols());
  Mat bt(batch, targets.cols());

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index bsz = std::min(batch, n - start);
      for (Eigen::Index i = 0; i < bsz; ++i) {
        bx.row(i) = inputs.row(order[static_cast<std::size_t>(start + i)]);
        bt.row(i) = targets.row(order[static_cast<std::size_t>(start + i)]);
      }
      const auto acts = forward_pass(net, bx.topRows(bsz));
      loss_sum += mean_kl_rows(bt.topRows(bsz), acts.back()) * static_cast<double>(bsz);

      // Backward pass against the activations already computed.
      const std::size_t layers = net.weights.size();
      Mat delta = (acts.back() - bt.topRows(bsz)) / static_cast<double>(bsz);
      for (std::size_t l = layers; l-- > 0;) {
        Mat gw = delta.transpose() * acts[l];
        Vec gb = delta.colwise().sum().transpose();
        if (l > 0)
          delta = (delta * net.weights[l]).cwiseProduct(
              activation_grad_from_output(acts[l], net.hidden_activation));
        if (cfg.l2_penalty > 0.0) gw += cfg.l2_penalty * net.weights[l];
        net.weights[l] -= cfg.learning_rate * gw;
        net.biases[l] -= cfg.learning_rate * gb;
      }
    }
    const double train_loss = loss_sum / static_cast<double>(n);
    const double val_loss = data_loss(net, val_inputs, val_targets);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));

    EpochStats stats{epoch, train_loss, val_loss, false};
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best = net;
      epochs_since_best = 0;
      stats.improved = true;
    } else {
      ++epochs_since_best;
    }
    result.history.push_back(stats);
    if (epochs_since_best > cfg.early_stop_patience) break;
  }

  result.net = std::move(best);
  return result;
}

}  // namespace posim
