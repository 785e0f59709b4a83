#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rti/error.hpp"
#include "rti/nn.hpp"

namespace rti::nn {
namespace {

// Central-difference gradient of `loss_of` with respect to every parameter of `net`.
template <typename LossFn>
Gradients numeric_gradient(Network& net, LossFn loss_of, double h = 1e-4) {
  Gradients g = Gradients::zeros_like(net);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      double& w = layer.weights.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss_of();
      w = saved - h;
      const double down = loss_of();
      w = saved;
      g.weights[l].data()[i] = (up - down) / (2 * h);
    }
    for (Eigen::Index i = 0; i < layer.biases.size(); ++i) {
      double& b = layer.biases[i];
      const double saved = b;
      b = saved + h;
      const double up = loss_of();
      b = saved - h;
      const double down = loss_of();
      b = saved;
      g.biases[l][i] = (up - down) / (2 * h);
    }
  }
  return g;
}

// max |a - n| / max(|a|, |n|, floor) over all entries.
double max_relative_error(const Gradients& analytic, const Gradients& numeric, double floor = 1e-6) {
  double worst = 0.0;
  auto visit = [&](double a, double n) {
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  };
  for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < analytic.weights[l].size(); ++i) {
      visit(analytic.weights[l].data()[i], numeric.weights[l].data()[i]);
    }
    for (Eigen::Index i = 0; i < analytic.biases[l].size(); ++i) visit(analytic.biases[l][i], numeric.biases[l][i]);
  }
  return worst;
}

TEST(Elu, Definition) {
  EXPECT_DOUBLE_EQ(elu(0.0), 0.0);
  EXPECT_DOUBLE_EQ(elu(1.0), 1.0);
  EXPECT_NEAR(elu(-1.0), std::exp(-1.0) - 1.0, 1e-15);
  EXPECT_NEAR(elu(-1.0), -0.6321205588, 1e-9);
  EXPECT_DOUBLE_EQ(elu_derivative(2.0), 1.0);
  EXPECT_NEAR(elu_derivative(-0.5), elu(-0.5) + 1.0, 1e-15);
}

TEST(Forward, IdentityLayerPassesInputThrough) {
  DenseLayer l{Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4), Activation::Identity};
  const Network net({l});
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  EXPECT_EQ(forward_one(net, x), x);
}

TEST(Forward, TwoLayerHandComputation) {
  DenseLayer a;
  a.weights.resize(2, 2);
  a.weights << 1.0, -2.0, 0.5, 1.0;
  a.biases = Eigen::Vector2d(0.5, -1.0);
  a.activation = Activation::Elu;
  DenseLayer b;
  b.weights.resize(1, 2);
  b.weights << 2.0, 3.0;
  b.biases = Eigen::VectorXd::Constant(1, 0.25);
  b.activation = Activation::Identity;
  const Network net({a, b});
  // x = (1, 1): pre = (1 - 2 + 0.5, 0.5 + 1 - 1) = (-0.5, 0.5); post = (e^-0.5 - 1, 0.5).
  const Eigen::VectorXd y = forward_one(net, Eigen::Vector2d(1.0, 1.0));
  EXPECT_NEAR(y(0), 2.0 * (std::exp(-0.5) - 1.0) + 3.0 * 0.5 + 0.25, 1e-15);
}

TEST(Forward, BatchMatchesSingleSamples) {
  const Network net = make_mlp({5, 7, 7, 3}, 4);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 6);
  const Eigen::MatrixXd y = forward(net, x);
  for (Eigen::Index c = 0; c < x.cols(); ++c) EXPECT_LT((y.col(c) - forward_one(net, x.col(c))).norm(), 1e-14);
}

TEST(Forward, DimensionMismatch) {
  const Network net = make_mlp({3, 4, 2}, 1);
  try {
    forward(net, Eigen::MatrixXd::Zero(4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Network, ValidateChecksNeighbours) {
  DenseLayer a{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Activation::Elu};
  DenseLayer b{Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1), Activation::Identity};
  EXPECT_THROW(Network({a, b}), Error);
  DenseLayer c{Eigen::MatrixXd::Constant(1, 3, NAN), Eigen::VectorXd::Zero(1), Activation::Identity};
  EXPECT_THROW(Network({a, c}), Error);
}

TEST(MakeMlp, InitializationRanges) {
  const Network net = make_mlp({40, 30, 20}, 9);
  const double he = std::sqrt(6.0 / 40.0), glorot = std::sqrt(6.0 / 50.0);
  EXPECT_LE(net.layers()[0].weights.cwiseAbs().maxCoeff(), he);
  EXPECT_GT(net.layers()[0].weights.cwiseAbs().maxCoeff(), 0.9 * he);
  EXPECT_LE(net.layers()[1].weights.cwiseAbs().maxCoeff(), glorot);
  EXPECT_EQ(net.layers()[0].activation, Activation::Elu);
  EXPECT_EQ(net.layers()[1].activation, Activation::Identity);
  EXPECT_TRUE(net.layers()[0].biases.isZero());
  EXPECT_EQ(net.layer_sizes(), (std::vector<int>{40, 30, 20}));
  EXPECT_EQ(net.weight_count(), 40u * 30 + 30 * 20);
  EXPECT_EQ(net.bias_count(), 50u);
}

TEST(Backward, ZeroOutputGradientGivesZeroGradients) {
  const Network net = make_mlp({4, 6, 2}, 3);
  ForwardCache cache;
  const Eigen::MatrixXd y = forward(net, Eigen::MatrixXd::Random(4, 5), &cache);
  const Gradients g = backward(net, cache, Eigen::MatrixXd::Zero(2, 5));
  EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(Backward, SingleLinearNeuronClosedForm) {
  DenseLayer l{Eigen::MatrixXd::Constant(1, 2, 0.3), Eigen::VectorXd::Constant(1, -0.1), Activation::Identity};
  const Network net({l});
  const Eigen::Vector2d x(2.0, -1.0);
  const double target = 0.7;
  ForwardCache cache;
  const Eigen::MatrixXd y = forward(net, x, &cache);
  Eigen::MatrixXd dy;
  MseLoss().value(y, Eigen::MatrixXd::Constant(1, 1, target), &dy);
  const Gradients g = backward(net, cache, dy);
  const double yhat = 0.3 * 2.0 - 0.3 - 0.1;
  EXPECT_NEAR(g.weights[0](0, 0), 2.0 * (yhat - target) * 2.0, 1e-15);
  EXPECT_NEAR(g.weights[0](0, 1), 2.0 * (yhat - target) * -1.0, 1e-15);
  EXPECT_NEAR(g.biases[0](0), 2.0 * (yhat - target), 1e-15);
}

TEST(Backward, ThreeLayerNetMatchesFiniteDifferences) {
  Network net = make_mlp({6, 8, 8, 3}, 21);
  for (auto& layer : net.layers()) layer.biases.setRandom();
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 5);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(3, 5);
  const MseLoss loss;
  ForwardCache cache;
  Eigen::MatrixXd dy;
  loss.value(forward(net, x, &cache), t, &dy);
  const Gradients analytic = backward(net, cache, dy);
  const Gradients numeric = numeric_gradient(net, [&] { return loss.value(forward(net, x), t, nullptr); });
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
}

TEST(Backward, InputGradientMatchesFiniteDifferences) {
  const Network net = make_mlp({4, 5, 2}, 8);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
  const Eigen::MatrixXd t = Eigen::MatrixXd::Random(2, 3);
  const MseLoss loss;
  ForwardCache cache;
  Eigen::MatrixXd dy, dx;
  loss.value(forward(net, x, &cache), t, &dy);
  backward(net, cache, dy, &dx);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = loss.value(forward(net, x), t, nullptr);
    x.data()[i] = saved - h;
    const double down = loss.value(forward(net, x), t, nullptr);
    x.data()[i] = saved;
    EXPECT_NEAR(dx.data()[i], (up - down) / (2 * h), 1e-8);
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Network net = make_mlp({3, 4, 2}, 5);
  const Network before = net;
  AdamState state = make_adam(net);
  adam_step(net, Gradients::zeros_like(net), state);
  EXPECT_EQ(state.t, 1);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    EXPECT_EQ(net.layers()[l].weights, before.layers()[l].weights);
    EXPECT_EQ(net.layers()[l].biases, before.layers()[l].biases);
  }
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Network net = make_mlp({3, 2}, 5);
  const Network before = net;
  Gradients g = Gradients::zeros_like(net);
  g.weights[0] << 0.5, -2.0, 1e-3, -1e-3, 4.0, -0.25;
  AdamState state = make_adam(net, 0.01, 0.9, 0.99, 1e-8);
  adam_step(net, g, state);
  // Bias-corrected first step: m_hat = g, v_hat = g^2, so delta = -lr * g / (|g| + eps).
  for (Eigen::Index i = 0; i < g.weights[0].size(); ++i) {
    const double gi = g.weights[0].data()[i];
    const double expected = -0.01 * gi / (std::abs(gi) + 1e-8);
    EXPECT_NEAR(net.layers()[0].weights.data()[i] - before.layers()[0].weights.data()[i], expected, 1e-12);
  }
}

TEST(Adam, SecondStepDependsOnHistory) {
  Network a = make_mlp({2, 2}, 1), b = a;
  Gradients g1 = Gradients::zeros_like(a), g2 = Gradients::zeros_like(a);
  g1.weights[0].setConstant(1.0);
  g2.weights[0].setConstant(-0.3);
  AdamState sa = make_adam(a), sb = make_adam(b);
  adam_step(a, g1, sa);
  adam_step(a, g2, sa);
  const Network b_start = b;
  adam_step(b, g2, sb);
  const Eigen::MatrixXd step_with_history = a.layers()[0].weights - b_start.layers()[0].weights;
  const Eigen::MatrixXd first_step_only = b.layers()[0].weights - b_start.layers()[0].weights;
  EXPECT_GT((step_with_history - first_step_only).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_GE(sa.v.weights[0].minCoeff(), 0.0);
}

Dataset constant_dataset(int n, double noise_sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.inputs.resize(2, n);
  d.targets.resize(1, n);
  for (int i = 0; i < n; ++i) {
    d.inputs(0, i) = u(rng);
    d.inputs(1, i) = u(rng);
    d.targets(0, i) = 0.5 + noise(rng);
  }
  return d;
}

TEST(Train, LearnsNoisyConstant) {
  const double sd = 0.05;
  const Dataset d = constant_dataset(2000, sd, 3);
  Network net = make_mlp({2, 8, 1}, 2);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.seed = 1;
  const TrainHistory h = train(net, d, MseLoss(), cfg);
  EXPECT_LT(h.best_val_loss, sd * sd + 1e-3);
  EXPECT_LE(h.best_val_loss, h.initial_val_loss);
  EXPECT_LE(h.val_loss.back() - 1e-12, *std::max_element(h.val_loss.begin(), h.val_loss.end()));
}

TEST(Train, LearnsClampedLambertTerm) {
  const Eigen::Vector3d n = Eigen::Vector3d(0.3, -0.2, 0.93).normalized();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Dataset d;
  d.inputs.resize(2, 3000);
  d.targets.resize(1, 3000);
  for (int i = 0; i < 3000; ++i) {
    double x, y;
    do {
      x = u(rng);
      y = u(rng);
    } while (x * x + y * y > 1.0);
    const Eigen::Vector3d l(x, y, std::sqrt(1.0 - x * x - y * y));
    d.inputs.col(i) << x, y;
    d.targets(0, i) = std::max(0.0, n.dot(l));
  }
  Network net = make_mlp({2, 16, 16, 1}, 6);
  TrainConfig cfg;
  cfg.max_epochs = 150;
  cfg.seed = 2;
  cfg.lr = 0.01;
  const TrainHistory h = train(net, d, MseLoss(), cfg);
  EXPECT_LT(h.best_val_loss, 1e-3);
}

TEST(Train, PatienceZeroStopsAfterFirstNonImprovement) {
  const Dataset d = constant_dataset(300, 0.2, 5);
  Network net = make_mlp({2, 4, 1}, 3);
  TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.patience = 0;
  cfg.lr = 0.05;
  const TrainHistory h = train(net, d, MseLoss(), cfg);
  ASSERT_TRUE(h.early_stopped);
  // Epochs up to the best improve on their predecessors; exactly one more epoch follows.
  EXPECT_EQ(h.epochs_run, h.best_epoch + 2);
  for (int e = 0; e <= h.best_epoch; ++e) {
    const double prev = e == 0 ? h.initial_val_loss : h.val_loss[static_cast<std::size_t>(e - 1)];
    EXPECT_LT(h.val_loss[static_cast<std::size_t>(e)], prev);
  }
  EXPECT_GE(h.val_loss.back(), h.best_val_loss);
}

TEST(Train, BestSnapshotIsRestored) {
  const Dataset d = constant_dataset(400, 0.1, 6);
  Network net = make_mlp({2, 6, 1}, 4);
  TrainConfig cfg;
  cfg.max_epochs = 25;
  cfg.patience = 3;
  cfg.lr = 0.2;  // noisy on purpose
  cfg.seed = 8;
  const TrainHistory h = train(net, d, MseLoss(), cfg);
  // Re-evaluating on the same validation split reproduces the best loss.
  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> order(400);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  Dataset val;
  val.inputs.resize(2, 40);
  val.targets.resize(1, 40);
  for (int i = 0; i < 40; ++i) {
    val.inputs.col(i) = d.inputs.col(order[i]);
    val.targets.col(i) = d.targets.col(order[i]);
  }
  EXPECT_NEAR(MseLoss().value(forward(net, val.inputs), val.targets, nullptr), h.best_val_loss, 1e-12);
}

TEST(Train, DeterministicForSameSeed) {
  const Dataset d = constant_dataset(500, 0.1, 7);
  Network a = make_mlp({2, 8, 1}, 11), b = a;
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 99;
  const TrainHistory ha = train(a, d, MseLoss(), cfg);
  const TrainHistory hb = train(b, d, MseLoss(), cfg);
  EXPECT_EQ(ha.train_loss, hb.train_loss);
  EXPECT_EQ(ha.val_loss, hb.val_loss);
}

TEST(Train, PlateauDecaysFollowStaleEpochs) {
  const Dataset d = constant_dataset(400, 0.1, 6);
  Network net = make_mlp({2, 6, 1}, 4);
  TrainConfig cfg;
  cfg.max_epochs = 40;
  cfg.patience = 40;
  cfg.lr = 0.2;
  cfg.lr_decay = 0.5;
  cfg.decay_patience = 2;
  cfg.seed = 8;
  const TrainHistory h = train(net, d, MseLoss(), cfg);

  // Replay the rule on the recorded validation curve.
  double best = h.initial_val_loss;
  int since = 0, decays = 0;
  for (double v : h.val_loss) {
    if (v < best) {
      best = v;
      since = 0;
    } else if (++since >= cfg.decay_patience) {
      ++decays;
      since = 0;
    }
  }
  EXPECT_GT(h.lr_decays, 0);
  EXPECT_EQ(h.lr_decays, decays);
  EXPECT_DOUBLE_EQ(h.final_lr, cfg.lr * std::pow(0.5, decays));
}

TEST(Train, UnitDecayKeepsRateFixed) {
  const Dataset d = constant_dataset(400, 0.1, 6);
  Network net = make_mlp({2, 6, 1}, 4);
  TrainConfig cfg;
  cfg.max_epochs = 30;
  cfg.patience = 30;
  cfg.lr = 0.2;
  cfg.lr_decay = 1.0;
  cfg.decay_patience = 1;
  const TrainHistory h = train(net, d, MseLoss(), cfg);
  EXPECT_EQ(h.lr_decays, 0);
  EXPECT_EQ(h.final_lr, 0.2);
}

TEST(Train, Errors) {
  Network net = make_mlp({2, 1}, 1);
  Dataset empty;
  empty.inputs.resize(2, 0);
  empty.targets.resize(1, 0);
  try {
    train(net, empty, MseLoss(), TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTrainingSet);
  }
  TrainConfig bad;
  bad.val_fraction = 1.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = TrainConfig{};
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
  for (double f : {0.0, 1.5}) {
    bad = TrainConfig{};
    bad.lr_decay = f;
    EXPECT_THROW(bad.validate(), Error);
  }
  bad = TrainConfig{};
  bad.decay_patience = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(OpCounts, DecoderArithmeticMatchesParameterCounts) {
  for (int n : {10, 20, 50}) {
    const Network net = make_mlp({11, n, n, 3}, 1);
    OpCounts counts;
    const Eigen::VectorXd x = Eigen::VectorXd::Random(11);
    const Eigen::VectorXd y = forward_counted(net, x, counts);
    EXPECT_LT((y - forward_one(net, x)).norm(), 1e-14);
    EXPECT_EQ(counts.multiplications, net.weight_count());
    EXPECT_EQ(counts.bias_additions, net.bias_count());
    EXPECT_EQ(counts.activations, static_cast<std::size_t>(2 * n));
  }
}

}  // namespace
}  // namespace rti::nn
