#pragma once

// Small fully connected ReLU networks trained with Adam.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gazemap/error.hpp"

namespace gazemap {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// ReLU on every hidden layer, identity on the output layer.
struct MlpModel {
  std::vector<DenseLayer> layers;

  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Columns of `inputs` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const {
    require(inputs.rows() == input_dim(), ErrorKind::argument,
            "mlp input has dimension " + std::to_string(inputs.rows()) + ", expected " +
                std::to_string(input_dim()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      Eigen::MatrixXd z = (layers[k].weights * a).colwise() + layers[k].bias;
      a = k + 1 < layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return a;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const { return forward_batch(input); }

  Eigen::VectorXd parameters() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index at = 0;
    for (const auto& l : layers) {
      flat.segment(at, l.weights.size()) = l.weights.reshaped();
      at += l.weights.size();
      flat.segment(at, l.bias.size()) = l.bias;
      at += l.bias.size();
    }
    return flat;
  }

  void set_parameters(const Eigen::VectorXd& flat) {
    require(flat.size() == parameter_count(), ErrorKind::argument, "parameter vector size mismatch");
    Eigen::Index at = 0;
    for (auto& l : layers) {
      l.weights.reshaped() = flat.segment(at, l.weights.size());
      at += l.weights.size();
      l.bias = flat.segment(at, l.bias.size());
      at += l.bias.size();
    }
  }
};

/// Layer sizes [input, hidden..., output] with He-uniform weights
/// U(-sqrt(6/fan_in), sqrt(6/fan_in)) and zero biases.
inline MlpModel make_mlp(int input_dim, int output_dim, std::uint64_t seed,
                         const std::vector<int>& hidden = {12, 12}) {
  require(input_dim > 0 && output_dim > 0, ErrorKind::argument, "mlp dimensions must be positive");
  std::vector<int> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output_dim);
  std::mt19937_64 rng(seed);
  MlpModel model;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const double limit = std::sqrt(6.0 / sizes[k]);
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{Eigen::MatrixXd(sizes[k + 1], sizes[k]), Eigen::VectorXd::Zero(sizes[k + 1])};
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = dist(rng);
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

enum class Loss { mse, gaussian_nll };

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

/// Mean loss over the batch and its gradient w.r.t. the network outputs.
/// mse: mean of squared errors over samples and outputs.
/// gaussian_nll: outputs are (mu, log sigma) per sample, targets are scalar;
/// per-sample loss = 0.5 log 2pi + log sigma + (y - mu)^2 / (2 sigma^2).
inline double output_loss(const Eigen::MatrixXd& outputs, const Eigen::MatrixXd& targets, Loss loss,
                          Eigen::MatrixXd* grad = nullptr) {
  const double n = static_cast<double>(outputs.cols());
  if (loss == Loss::mse) {
    require(outputs.rows() == targets.rows() && outputs.cols() == targets.cols(), ErrorKind::argument,
            "mse: output/target shape mismatch");
    const Eigen::MatrixXd diff = outputs - targets;
    const double count = n * static_cast<double>(outputs.rows());
    if (grad) *grad = (2.0 / count) * diff;
    return diff.squaredNorm() / count;
  }
  require(outputs.rows() == 2 && targets.rows() == 1 && outputs.cols() == targets.cols(),
          ErrorKind::argument, "gaussian_nll expects (mu, log sigma) outputs and scalar targets");
  const Eigen::ArrayXd mu = outputs.row(0).transpose().array();
  const Eigen::ArrayXd log_sigma = outputs.row(1).transpose().array();
  const Eigen::ArrayXd inv_var = (-2.0 * log_sigma).exp();
  const Eigen::ArrayXd r = targets.row(0).transpose().array() - mu;
  if (grad) {
    grad->resize(2, outputs.cols());
    grad->row(0) = (-(r * inv_var) / n).matrix().transpose();
    grad->row(1) = ((1.0 - r.square() * inv_var) / n).matrix().transpose();
  }
  return (kHalfLog2Pi + log_sigma + 0.5 * r.square() * inv_var).mean();
}

/// Mean loss and flattened parameter gradient (same layout as parameters()).
/// Columns of inputs/targets are samples.
inline double loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs,
                                const Eigen::MatrixXd& targets, Loss loss, Eigen::VectorXd* gradient) {
  const std::size_t depth = model.layers.size();
  std::vector<Eigen::MatrixXd> activations{inputs};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t k = 0; k < depth; ++k) {
    pre.push_back((model.layers[k].weights * activations.back()).colwise() + model.layers[k].bias);
    activations.push_back(k + 1 < depth ? Eigen::MatrixXd(pre.back().cwiseMax(0.0)) : pre.back());
  }
  Eigen::MatrixXd delta;
  const double value = output_loss(activations.back(), targets, loss, gradient ? &delta : nullptr);
  if (!gradient) return value;

  gradient->resize(model.parameter_count());
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const auto& l : model.layers) {
    offsets.push_back(at);
    at += l.weights.size() + l.bias.size();
  }
  for (std::size_t k = depth; k-- > 0;) {
    const auto& layer = model.layers[k];
    const Eigen::MatrixXd dw = delta * activations[k].transpose();
    gradient->segment(offsets[k], dw.size()) = dw.reshaped();
    gradient->segment(offsets[k] + dw.size(), layer.bias.size()) = delta.rowwise().sum();
    if (k > 0) {
      delta = (layer.weights.transpose() * delta).cwiseProduct(
          (pre[k - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return value;
}

/// Max relative error between backprop and central differences (step 1e-5)
/// over every parameter. Where both gradients are below 1e-8 the absolute
/// difference is used instead.
inline double gradient_check(const MlpModel& model, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& targets, Loss loss, double step = 1e-5) {
  Eigen::VectorXd analytic;
  loss_and_gradient(model, inputs, targets, loss, &analytic);
  MlpModel probe = model;
  const Eigen::VectorXd base = model.parameters();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Eigen::VectorXd p = base;
    p(i) = base(i) + step;
    probe.set_parameters(p);
    const double up = loss_and_gradient(probe, inputs, targets, loss, nullptr);
    p(i) = base(i) - step;
    probe.set_parameters(p);
    const double down = loss_and_gradient(probe, inputs, targets, loss, nullptr);
    const double numeric = (up - down) / (2.0 * step);
    const double scale = std::max(std::abs(numeric), std::abs(analytic(i)));
    const double diff = std::abs(numeric - analytic(i));
    worst = std::max(worst, scale < 1e-8 ? diff : diff / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  void apply(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (m.size() != params.size()) {
      m = Eigen::VectorXd::Zero(params.size());
      v = Eigen::VectorXd::Zero(params.size());
    }
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    params.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon);
  }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& c) {
  require(c.learning_rate > 0.0 && c.batch_size > 0 && c.max_epochs >= 0, ErrorKind::argument,
          "train config: learning rate and batch size must be positive, epochs non-negative");
}

/// Rows of `inputs`/`targets` are samples.
struct TrainData {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

struct EpochLoss {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainResult {
  MlpModel model;           // snapshot with the minimum validation loss
  int best_epoch = 0;       // 0 = the initial model
  std::vector<EpochLoss> trace;
};

/// Mini-batch Adam. Epoch 0 in the trace is the initial model; the batch
/// order is reshuffled every epoch from an engine seeded by (seed, epoch).
inline TrainResult train(const MlpModel& initial, const TrainData& train_set, const TrainData& val_set,
                         const TrainConfig& config, Loss loss) {
  validate(config);
  require(train_set.inputs.rows() > 0 && val_set.inputs.rows() > 0, ErrorKind::argument,
          "train: empty train or validation set");
  const Eigen::MatrixXd x_train = train_set.inputs.transpose();
  const Eigen::MatrixXd y_train = train_set.targets.transpose();
  const Eigen::MatrixXd x_val = val_set.inputs.transpose();
  const Eigen::MatrixXd y_val = val_set.targets.transpose();

  MlpModel model = initial;
  auto evaluate = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return output_loss(model.forward_batch(x), y, loss);
  };

  TrainResult result{model, 0, {}};
  double best = evaluate(x_val, y_val);
  result.trace.push_back({0, evaluate(x_train, y_train), best});
  require(std::isfinite(best), ErrorKind::training_diverged, "training diverged at epoch 0");

  AdamState adam;
  adam.learning_rate = config.learning_rate;
  Eigen::VectorXd params = model.parameters();
  Eigen::VectorXd grad;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.cols()));
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  Eigen::MatrixXd xb, yb;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    double train_sum = 0.0;
    for (Eigen::Index start = 0; start < x_train.cols(); start += batch) {
      const Eigen::Index size = std::min(batch, x_train.cols() - start);
      xb.resize(x_train.rows(), size);
      yb.resize(y_train.rows(), size);
      for (Eigen::Index j = 0; j < size; ++j) {
        xb.col(j) = x_train.col(order[static_cast<std::size_t>(start + j)]);
        yb.col(j) = y_train.col(order[static_cast<std::size_t>(start + j)]);
      }
      train_sum += loss_and_gradient(model, xb, yb, loss, &grad) * static_cast<double>(size);
      adam.apply(params, grad);
      model.set_parameters(params);
    }
    const double val_loss = evaluate(x_val, y_val);
    const double train_loss = train_sum / static_cast<double>(x_train.cols());
    if (!std::isfinite(val_loss) || !std::isfinite(train_loss)) {
      throw Error(ErrorKind::training_diverged, "training diverged at epoch " + std::to_string(epoch));
    }
    result.trace.push_back({epoch, train_loss, val_loss});
    if (val_loss < best) {
      best = val_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

/// Fresh d -> 12 -> 12 -> output_dim network seeded from config.seed, trained.
inline TrainResult train_network(const TrainData& train_set, const TrainData& val_set, const TrainConfig& config,
                                 Loss loss, int output_dim) {
  return train(make_mlp(static_cast<int>(train_set.inputs.cols()), output_dim, config.seed), train_set, val_set,
               config, loss);
}

// ---------------------------------------------------------------------------
// Input standardization (rows are samples)

struct InputScaler {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  static InputScaler fit(const Eigen::MatrixXd& rows) {
    require(rows.rows() > 0, ErrorKind::argument, "cannot fit a scaler on no rows");
    InputScaler s;
    s.offset = rows.colwise().mean().transpose();
    s.scale = ((rows.rowwise() - s.offset.transpose()).array().square().colwise().mean().sqrt()).transpose();
    for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
      if (!(s.scale(i) > 1e-12)) s.scale(i) = 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const {
    return (rows.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array();
  }
};

inline void to_json(nlohmann::json& j, const InputScaler& s) {
  j = {{"offset", std::vector<double>(s.offset.begin(), s.offset.end())},
       {"scale", std::vector<double>(s.scale.begin(), s.scale.end())}};
}

inline void from_json(const nlohmann::json& j, InputScaler& s) {
  const auto o = j.at("offset").get<std::vector<double>>();
  const auto c = j.at("scale").get<std::vector<double>>();
  require(o.size() == c.size(), ErrorKind::schema, "scaler offset/scale size mismatch");
  s.offset = Eigen::Map<const Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size()));
  s.scale = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

// ---------------------------------------------------------------------------
// Serialization

inline void to_json(nlohmann::json& j, const MlpModel& m) {
  j = nlohmann::json::array();
  for (const auto& l : m.layers) {
    j.push_back({{"rows", l.weights.rows()},
                 {"cols", l.weights.cols()},
                 {"weights", std::vector<double>(l.weights.data(), l.weights.data() + l.weights.size())},
                 {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
}

inline void from_json(const nlohmann::json& j, MlpModel& m) {
  m.layers.clear();
  for (const auto& jl : j) {
    const auto rows = jl.at("rows").get<Eigen::Index>();
    const auto cols = jl.at("cols").get<Eigen::Index>();
    const auto w = jl.at("weights").get<std::vector<double>>();
    const auto b = jl.at("bias").get<std::vector<double>>();
    require(static_cast<Eigen::Index>(w.size()) == rows * cols && static_cast<Eigen::Index>(b.size()) == rows,
            ErrorKind::schema, "mlp layer shape mismatch");
    if (!m.layers.empty()) {
      require(m.layers.back().weights.rows() == cols, ErrorKind::schema, "mlp layers do not chain");
    }
    DenseLayer layer{Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, cols),
                     Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
    m.layers.push_back(std::move(layer));
  }
}

}  // namespace gazemap
