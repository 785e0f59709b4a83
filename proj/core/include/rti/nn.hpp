#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace rti::nn {

enum class Activation { Elu, Identity };

// ELU with alpha = 1.
double elu(double x);
// Derivative of ELU: 1 for x > 0, elu(x) + 1 otherwise.
double elu_derivative(double x);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
  Activation activation = Activation::Elu;

  Eigen::Index input_dim() const { return weights.cols(); }
  Eigen::Index output_dim() const { return weights.rows(); }
};

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  bool empty() const noexcept { return layers_.empty(); }

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  // Layer widths from input to output, e.g. {11, 20, 20, 3}.
  std::vector<int> layer_sizes() const;
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  std::size_t parameter_count() const { return weight_count() + bias_count(); }

  // Throws DimensionMismatch for inconsistent neighbours, InvalidArgument for non-finite entries.
  void validate() const;

 private:
  std::vector<DenseLayer> layers_;
};

// Hidden layers use ELU with He-uniform init; the output layer is identity
// with Glorot-uniform init. Biases start at zero.
Network make_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Per-layer inputs and pre-activations, enough to run backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
};

// Batched forward pass; each column of `input` is one sample.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);
// Single-sample convenience wrapper.
Eigen::VectorXd forward_one(const Network& net, const Eigen::VectorXd& input);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients zeros_like(const Network& net);
  void set_zero();
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  double max_abs() const;
};

// Gradients of a scalar loss given dLoss/dOutput for every cached sample.
// When `input_grad` is non-null it receives dLoss/dInput.
Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                   Eigen::MatrixXd* input_grad = nullptr);

struct AdamState {
  Gradients m;
  Gradients v;
  long t = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

AdamState make_adam(const Network& net, double lr = 0.01, double beta1 = 0.9, double beta2 = 0.99,
                    double eps = 1e-8);
// Bias-corrected Adam update; increments state.t.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

struct TrainConfig {
  int batch_size = 64;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  int max_epochs = 150;
  double val_fraction = 0.1;
  int patience = 15;
  // Plateau schedule: after `decay_patience` epochs without a new best, the
  // best weights are restored, Adam restarts and lr is multiplied by
  // `lr_decay`. A factor of 1 keeps the rate fixed and disables restarts.
  double lr_decay = 0.5;
  int decay_patience = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch, mean over training rows
  std::vector<double> val_loss;    // per epoch
  double initial_val_loss = 0.0;
  double best_val_loss = 0.0;
  int best_epoch = -1;  // 0-based; -1 when no epoch beat the initial weights
  int epochs_run = 0;
  bool early_stopped = false;
  int lr_decays = 0;
  double final_lr = 0.0;
  double seconds = 0.0;
};

// A differentiable loss over indexed training rows, driving one or more networks.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::vector<Network*> networks() = 0;
  virtual Eigen::Index row_count() const = 0;
  // Mean loss over `rows`. When `grads` is non-null it is filled with the
  // gradient of that mean, one entry per network.
  virtual double evaluate(std::span<const Eigen::Index> rows, std::vector<Gradients>* grads) = 0;
};

// Mini-batch Adam with a seeded held-out validation split, per-epoch reshuffling,
// best-validation snapshot and early stopping after `patience` stale epochs.
TrainHistory optimize(Objective& objective, const TrainConfig& cfg);

class Loss {
 public:
  virtual ~Loss() = default;
  // Mean loss over the columns; fills dLoss/dPrediction when `grad` is non-null.
  virtual double value(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target,
                       Eigen::MatrixXd* grad) const = 0;
};

// Mean over samples of the squared L2 error of each output vector.
class MseLoss final : public Loss {
 public:
  double value(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target,
               Eigen::MatrixXd* grad) const override;
};

struct Dataset {
  Eigen::MatrixXd inputs;   // in x n
  Eigen::MatrixXd targets;  // out x n
};

TrainHistory train(Network& net, const Dataset& rows, const Loss& loss, const TrainConfig& cfg);

struct OpCounts {
  std::size_t multiplications = 0;
  std::size_t bias_additions = 0;
  std::size_t accumulations = 0;
  std::size_t activations = 0;
};

// Scalar reference forward pass that tallies its arithmetic.
Eigen::VectorXd forward_counted(const Network& net, const Eigen::VectorXd& input, OpCounts& counts);

}  // namespace rti::nn
