#include "rti/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rti/error.hpp"

namespace rti::nn {

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

Eigen::Index Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().input_dim(); }

Eigen::Index Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().output_dim(); }

std::vector<int> Network::layer_sizes() const {
  std::vector<int> sizes;
  if (layers_.empty()) return sizes;
  sizes.push_back(static_cast<int>(input_dim()));
  for (const DenseLayer& l : layers_) sizes.push_back(static_cast<int>(l.output_dim()));
  return sizes;
}

std::size_t Network::weight_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weights.size());
  return n;
}

std::size_t Network::bias_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.biases.size());
  return n;
}

void Network::validate() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    if (l.biases.size() != l.output_dim()) {
      throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(i) + " bias count differs from width");
    }
    if (i + 1 < layers_.size() && layers_[i + 1].input_dim() != l.output_dim()) {
      throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(i) + " output feeds a layer of input " +
                                                    std::to_string(layers_[i + 1].input_dim()));
    }
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
}

Network make_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw Error(ErrorCode::InvalidArgument, "an MLP needs at least two sizes");
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int in = layer_sizes[i];
    const int out = layer_sizes[i + 1];
    if (in < 1 || out < 1) throw Error(ErrorCode::InvalidArgument, "layer sizes must be positive");
    const bool is_output = i + 2 == layer_sizes.size();
    const double limit = is_output ? std::sqrt(6.0 / (in + out)) : std::sqrt(6.0 / in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index c = 0; c < in; ++c) {
      for (Eigen::Index r = 0; r < out; ++r) layer.weights(r, c) = dist(rng);
    }
    layer.biases = Eigen::VectorXd::Zero(out);
    layer.activation = is_output ? Activation::Identity : Activation::Elu;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

namespace {

void apply_activation(Activation act, const Eigen::MatrixXd& pre, Eigen::MatrixXd& post) {
  if (act == Activation::Identity) {
    post = pre;
    return;
  }
  // A select would evaluate the scalar expm1 on every entry; calling it only
  // for negative inputs halves the cost and keeps the result bit-identical.
  post.resize(pre.rows(), pre.cols());
  const double* x = pre.data();
  double* y = post.data();
  for (Eigen::Index i = 0; i < pre.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
}

}  // namespace

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input, ForwardCache* cache) {
  if (net.empty()) throw Error(ErrorCode::DimensionMismatch, "empty network");
  if (input.rows() != net.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "input dim " + std::to_string(input.rows()) + " vs network input " +
                                                  std::to_string(net.input_dim()));
  }
  const auto& layers = net.layers();
  if (cache) {
    cache->inputs.resize(layers.size());
    cache->pre_activations.resize(layers.size());
  }
  Eigen::MatrixXd current = input;
  Eigen::MatrixXd pre;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    pre.noalias() = l.weights * current;
    pre.colwise() += l.biases;
    Eigen::MatrixXd post;
    apply_activation(l.activation, pre, post);
    if (cache) {
      cache->inputs[i] = std::move(current);
      cache->pre_activations[i] = pre;
    }
    current = std::move(post);
  }
  return current;
}

Eigen::VectorXd forward_one(const Network& net, const Eigen::VectorXd& input) {
  return forward(net, Eigen::MatrixXd(input), nullptr).col(0);
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const DenseLayer& l : net.layers()) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(l.biases.size()));
  }
  return g;
}

void Gradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  return *this;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) m = std::max(m, w.size() ? w.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& b : biases) m = std::max(m, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
  return m;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                   Eigen::MatrixXd* input_grad) {
  const auto& layers = net.layers();
  if (cache.inputs.size() != layers.size() || cache.pre_activations.size() != layers.size()) {
    throw Error(ErrorCode::DimensionMismatch, "cache does not belong to this network");
  }
  if (output_grad.rows() != net.output_dim() || output_grad.cols() != cache.inputs.front().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "output gradient shape differs from cached batch");
  }
  Gradients g;
  g.weights.resize(layers.size());
  g.biases.resize(layers.size());

  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const DenseLayer& l = layers[k];
    if (l.activation == Activation::Elu) {
      const auto& pre = cache.pre_activations[k].array();
      delta.array() *= pre.min(0.0).exp();
    }
    g.weights[k].noalias() = delta * cache.inputs[k].transpose();
    g.biases[k] = delta.rowwise().sum();
    if (k > 0 || input_grad) {
      Eigen::MatrixXd next;
      next.noalias() = l.weights.transpose() * delta;
      delta = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(delta);
  return g;
}

AdamState make_adam(const Network& net, double lr, double beta1, double beta2, double eps) {
  AdamState s;
  s.m = Gradients::zeros_like(net);
  s.v = Gradients::zeros_like(net);
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  auto& layers = net.layers();
  if (grads.weights.size() != layers.size() || state.m.weights.size() != layers.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient/state shape differs from network");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const double b1 = state.beta1, b2 = state.beta2;
  // Adam in the "eps-hat" form: step = lr * mhat / (sqrt(vhat) + eps).
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
    param.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weights, grads.weights[i], state.m.weights[i], state.v.weights[i]);
    update(layers[i].biases, grads.biases[i], state.m.biases[i], state.v.biases[i]);
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "val_fraction must lie in (0, 1)");
  }
  if (max_epochs < 1) throw Error(ErrorCode::InvalidArgument, "max_epochs must be >= 1");
  if (patience < 0) throw Error(ErrorCode::InvalidArgument, "patience must be >= 0");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lr_decay must lie in (0, 1]");
  if (decay_patience < 1) throw Error(ErrorCode::InvalidArgument, "decay_patience must be >= 1");
}

namespace {

constexpr Eigen::Index kEvalChunk = 256;

double mean_loss(Objective& objective, std::span<const Eigen::Index> rows) {
  double total = 0.0;
  for (std::size_t start = 0; start < rows.size(); start += kEvalChunk) {
    const std::size_t count = std::min<std::size_t>(kEvalChunk, rows.size() - start);
    total += objective.evaluate(rows.subspan(start, count), nullptr) * static_cast<double>(count);
  }
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

}  // namespace

TrainHistory optimize(Objective& objective, const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = objective.row_count();
  if (n <= 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");

  const auto start_time = std::chrono::steady_clock::now();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n)));
  n_val = std::min<std::size_t>(n_val, static_cast<std::size_t>(n) - 1);
  std::vector<Eigen::Index> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Eigen::Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  // Sorted for memory locality; the selection itself is already random.
  std::sort(val_rows.begin(), val_rows.end());
  const std::vector<Eigen::Index>& monitor = val_rows.empty() ? train_rows : val_rows;

  std::vector<Network*> nets = objective.networks();
  std::vector<AdamState> adam;
  std::vector<Gradients> grads;
  for (Network* net : nets) {
    adam.push_back(make_adam(*net, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps));
    grads.push_back(Gradients::zeros_like(*net));
  }
  auto snapshot = [&] {
    std::vector<Network> copy;
    for (Network* net : nets) copy.push_back(*net);
    return copy;
  };

  TrainHistory history;
  history.initial_val_loss = mean_loss(objective, monitor);
  history.best_val_loss = history.initial_val_loss;
  std::vector<Network> best = snapshot();
  int stale = 0;
  int since_decay = 0;
  double lr = cfg.lr;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < train_rows.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, train_rows.size() - b);
      const std::span<const Eigen::Index> batch(train_rows.data() + b, count);
      epoch_loss += objective.evaluate(batch, &grads) * static_cast<double>(count);
      for (std::size_t k = 0; k < nets.size(); ++k) adam_step(*nets[k], grads[k], adam[k]);
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(train_rows.size()));
    const double val = mean_loss(objective, monitor);
    history.val_loss.push_back(val);
    history.epochs_run = epoch + 1;

    if (val < history.best_val_loss) {
      history.best_val_loss = val;
      history.best_epoch = epoch;
      best = snapshot();
      stale = 0;
      since_decay = 0;
    } else if (++stale > cfg.patience) {
      history.early_stopped = true;
      break;
    } else if (cfg.lr_decay < 1.0 && ++since_decay >= cfg.decay_patience) {
      lr *= cfg.lr_decay;
      for (std::size_t k = 0; k < nets.size(); ++k) {
        *nets[k] = best[k];
        adam[k] = make_adam(*nets[k], lr, cfg.beta1, cfg.beta2, cfg.eps);
      }
      since_decay = 0;
      ++history.lr_decays;
    }
  }
  history.final_lr = lr;
  for (std::size_t k = 0; k < nets.size(); ++k) *nets[k] = std::move(best[k]);
  history.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return history;
}

double MseLoss::value(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target,
                      Eigen::MatrixXd* grad) const {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "prediction/target shapes differ");
  }
  const double n = static_cast<double>(prediction.cols());
  if (n == 0) return 0.0;
  const Eigen::MatrixXd diff = prediction - target;
  if (grad) *grad = (2.0 / n) * diff;
  return diff.squaredNorm() / n;
}

namespace {

class SupervisedObjective final : public Objective {
 public:
  SupervisedObjective(Network& net, const Dataset& data, const Loss& loss)
      : net_(net), data_(data), loss_(loss) {}

  std::vector<Network*> networks() override { return {&net_}; }
  Eigen::Index row_count() const override { return data_.inputs.cols(); }

  double evaluate(std::span<const Eigen::Index> rows, std::vector<Gradients>* grads) override {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x(data_.inputs.rows(), n), y(data_.targets.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x.col(i) = data_.inputs.col(rows[i]);
      y.col(i) = data_.targets.col(rows[i]);
    }
    ForwardCache cache;
    const Eigen::MatrixXd pred = forward(net_, x, grads ? &cache : nullptr);
    Eigen::MatrixXd dpred;
    const double value = loss_.value(pred, y, grads ? &dpred : nullptr);
    if (grads) (*grads)[0] = backward(net_, cache, dpred);
    return value;
  }

 private:
  Network& net_;
  const Dataset& data_;
  const Loss& loss_;
};

}  // namespace

TrainHistory train(Network& net, const Dataset& rows, const Loss& loss, const TrainConfig& cfg) {
  if (rows.inputs.cols() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  if (rows.inputs.rows() != net.input_dim() || rows.targets.rows() != net.output_dim() ||
      rows.targets.cols() != rows.inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset shape does not match network");
  }
  SupervisedObjective objective(net, rows, loss);
  return optimize(objective, cfg);
}

Eigen::VectorXd forward_counted(const Network& net, const Eigen::VectorXd& input, OpCounts& counts) {
  if (input.size() != net.input_dim()) throw Error(ErrorCode::DimensionMismatch, "input dim mismatch");
  std::vector<double> current(input.data(), input.data() + input.size());
  for (const DenseLayer& l : net.layers()) {
    std::vector<double> next(static_cast<std::size_t>(l.output_dim()));
    for (Eigen::Index r = 0; r < l.output_dim(); ++r) {
      double acc = 0.0;
      for (Eigen::Index c = 0; c < l.input_dim(); ++c) {
        acc += l.weights(r, c) * current[static_cast<std::size_t>(c)];
        ++counts.multiplications;
        if (c > 0) ++counts.accumulations;
      }
      acc += l.biases(r);
      ++counts.bias_additions;
      if (l.activation == Activation::Elu) {
        acc = elu(acc);
        ++counts.activations;
      }
      next[static_cast<std::size_t>(r)] = acc;
    }
    current = std::move(next);
  }
  return Eigen::Map<Eigen::VectorXd>(current.data(), static_cast<Eigen::Index>(current.size()));
}

}  // namespace rti::nn
