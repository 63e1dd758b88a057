#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gresit/common.hpp"

namespace gresit {

/// Training hyperparameters for the multi-output MLP regressor. Defaults for
/// epochs, learning rate and batch size follow the GroupRESIT table.
struct RegressorConfig {
  std::vector<Index> hidden_layers{32, 32};
  int epochs = 500;
  double learning_rate = 0.01;
  Index batch_size = 500;
  double validation_fraction = 0.1;
  int patience = 20;
  std::uint64_t seed = 0;

  // Adam moments.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Fully connected network: tanh hidden layers, linear output layer, MSE loss.
class Mlp {
 public:
  struct Layer {
    Matrix weight;  // fan_in x fan_out
    Vector bias;    // fan_out
  };

  Mlp() = default;

  /// Zero-initialized network with the given layer widths (input, hidden..., output).
  explicit Mlp(const std::vector<Index>& widths) {
    if (widths.size() < 2) throw ArgumentError("network needs an input and an output width");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      if (widths[l] < 1 || widths[l + 1] < 1) throw ArgumentError("layer widths must be positive");
      layers_.push_back({Matrix::Zero(widths[l], widths[l + 1]), Vector::Zero(widths[l + 1])});
    }
  }

  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp glorot(const std::vector<Index>& widths, Rng& rng) {
    Mlp net(widths);
    for (auto& layer : net.layers_) {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Index j = 0; j < layer.weight.cols(); ++j)
        for (Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = u(rng);
    }
    return net;
  }

  Index input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.rows(); }
  Index output_dim() const { return layers_.empty() ? 0 : layers_.back().weight.cols(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  Matrix predict(const Eigen::Ref<const Matrix>& x) const {
    check_input(x);
    Matrix a = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = a * layers_[l].weight;
      z.rowwise() += layers_[l].bias.transpose();
      a = (l + 1 < layers_.size()) ? Matrix(z.array().tanh()) : std::move(z);
    }
    return a;
  }

  /// Mean squared error over all n * d_out entries.
  double loss(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y) const {
    const Matrix diff = predict(x) - y;
    return diff.squaredNorm() / static_cast<double>(diff.size());
  }

  /// Loss and per-layer gradients by backpropagation. `grads` is resized to match.
  double loss_and_gradient(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                           std::vector<Layer>& grads) const {
    check_input(x);
    if (y.rows() != x.rows() || y.cols() != output_dim()) throw DimensionError("target shape mismatch");
    const std::size_t depth = layers_.size();
    std::vector<Matrix> acts(depth + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < depth; ++l) {
      Matrix z = acts[l] * layers_[l].weight;
      z.rowwise() += layers_[l].bias.transpose();
      acts[l + 1] = (l + 1 < depth) ? Matrix(z.array().tanh()) : std::move(z);
    }
    Matrix delta = acts[depth] - y;
    const double loss = delta.squaredNorm() / static_cast<double>(delta.size());
    delta *= 2.0 / static_cast<double>(delta.size());

    grads.resize(depth);
    for (std::size_t l = depth; l-- > 0;) {
      grads[l].weight.noalias() = acts[l].transpose() * delta;
      grads[l].bias = delta.colwise().sum().transpose();
      if (l > 0) {
        Matrix back = delta * layers_[l].weight.transpose();
        delta = back.array() * (1.0 - acts[l].array().square());
      }
    }
    return loss;
  }

  std::size_t parameter_count() const {
    std::size_t c = 0;
    for (const auto& layer : layers_) c += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    return c;
  }

  /// Flattened parameters, layer by layer: weights (column-major) then bias.
  Vector parameters() const { return flatten(layers_); }

  void set_parameters(const Eigen::Ref<const Vector>& flat) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count()) throw DimensionError("parameter count mismatch");
    Index pos = 0;
    for (auto& layer : layers_) {
      layer.weight = Eigen::Map<const Matrix>(flat.data() + pos, layer.weight.rows(), layer.weight.cols());
      pos += layer.weight.size();
      layer.bias = flat.segment(pos, layer.bias.size());
      pos += layer.bias.size();
    }
  }

  static Vector flatten(const std::vector<Layer>& layers) {
    std::size_t count = 0;
    for (const auto& layer : layers) count += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    Vector flat(static_cast<Index>(count));
    Index pos = 0;
    for (const auto& layer : layers) {
      flat.segment(pos, layer.weight.size()) = Eigen::Map<const Vector>(layer.weight.data(), layer.weight.size());
      pos += layer.weight.size();
      flat.segment(pos, layer.bias.size()) = layer.bias;
      pos += layer.bias.size();
    }
    return flat;
  }

 private:
  void check_input(const Eigen::Ref<const Matrix>& x) const {
    if (layers_.empty()) throw ArgumentError("network has no layers");
    if (x.cols() != input_dim()) {
      throw DimensionError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                           std::to_string(input_dim()));
    }
  }

  std::vector<Layer> layers_;
};

struct FittedRegressor {
  Mlp model;
  std::vector<double> training_loss;    // mean batch loss per epoch
  std::vector<double> validation_loss;  // held-out loss per epoch
  int best_epoch = -1;
  double best_validation_loss = 0.0;

  Index input_dim() const { return model.input_dim(); }
  Index output_dim() const { return model.output_dim(); }
};

/// Mini-batch Adam on MSE with early stopping on a seeded validation split.
/// The returned weights are those of the epoch with the lowest validation loss.
inline FittedRegressor fit_regressor(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                                     const RegressorConfig& cfg) {
  const Index n = x.rows();
  if (y.rows() != n) throw DimensionError("predictor and response row counts differ");
  if (n < 10) throw ArgumentError("regressor needs at least 10 samples, got " + std::to_string(n));
  if (x.cols() < 1 || y.cols() < 1) throw DimensionError("regressor needs at least one input and one output column");
  if (!x.allFinite() || !y.allFinite()) throw ArgumentError("regressor inputs must be finite");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.patience < 1 || !(cfg.learning_rate > 0.0)) {
    throw ArgumentError("invalid regressor configuration");
  }
  if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
    throw ArgumentError("validation fraction must lie in (0, 1)");
  }

  Rng rng(cfg.seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_val = static_cast<Index>(std::floor(cfg.validation_fraction * static_cast<double>(n)));
  const Index n_train = n - n_val;
  if (n_val < 1 || n_train < 2) {
    throw ArgumentError("sample size " + std::to_string(n) + " is too small for the validation split");
  }
  std::vector<Index> train_idx(perm.begin(), perm.begin() + n_train);
  const std::vector<Index> val_idx(perm.begin() + n_train, perm.end());
  const Matrix x_val = x(val_idx, Eigen::all);
  const Matrix y_val = y(val_idx, Eigen::all);

  std::vector<Index> widths{x.cols()};
  widths.insert(widths.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  widths.push_back(y.cols());

  FittedRegressor out;
  out.model = Mlp::glorot(widths, rng);
  Mlp& net = out.model;

  std::vector<Mlp::Layer> grads, m1, m2;
  for (const auto& layer : net.layers()) {
    m1.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()), Vector::Zero(layer.bias.size())});
  }
  m2 = m1;

  std::vector<Mlp::Layer> best = net.layers();
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;
  const Index batch = std::min(cfg.batch_size, n_train);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    for (Index start = 0; start < n_train; start += batch) {
      const Index len = std::min(batch, n_train - start);
      const std::vector<Index> idx(train_idx.begin() + start, train_idx.begin() + start + len);
      const Matrix xb = x(idx, Eigen::all);
      const Matrix yb = y(idx, Eigen::all);
      const double batch_loss = net.loss_and_gradient(xb, yb, grads);
      if (!std::isfinite(batch_loss)) throw TrainingError("training loss became non-finite", epoch);
      epoch_loss += batch_loss * static_cast<double>(len);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto adam = [&](auto& param, const auto& g, auto& m, auto& v) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
        param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
      };
      for (std::size_t l = 0; l < grads.size(); ++l) {
        adam(net.layers()[l].weight, grads[l].weight, m1[l].weight, m2[l].weight);
        adam(net.layers()[l].bias, grads[l].bias, m1[l].bias, m2[l].bias);
      }
    }
    epoch_loss /= static_cast<double>(n_train);
    const double val = net.loss(x_val, y_val);
    if (!std::isfinite(epoch_loss) || !std::isfinite(val)) {
      throw TrainingError("training loss became non-finite", epoch);
    }
    out.training_loss.push_back(epoch_loss);
    out.validation_loss.push_back(val);

    if (val < best_val) {
      best_val = val;
      best = net.layers();
      out.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  net.layers() = std::move(best);
  out.best_validation_loss = best_val;
  return out;
}

inline Matrix predict(const FittedRegressor& fit, const Eigen::Ref<const Matrix>& x) { return fit.model.predict(x); }

/// Response minus prediction.
inline Matrix residuals(const FittedRegressor& fit, const Eigen::Ref<const Matrix>& x,
                        const Eigen::Ref<const Matrix>& y) {
  if (y.cols() != fit.output_dim() || y.rows() != x.rows()) throw DimensionError("response shape mismatch");
  return y - fit.model.predict(x);
}

}  // namespace gresit
