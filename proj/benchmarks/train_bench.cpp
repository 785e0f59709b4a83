#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "rti/neural.hpp"
#include "rti/nn.hpp"

namespace {

rti::TrainingTable random_table(Eigen::Index rows, Eigen::Index lights) {
  rti::TrainingTable t;
  t.colors = (Eigen::MatrixXd::Random(3 * lights, rows).array() + 1.0) * 0.5;
  t.lights = Eigen::MatrixXd::Random(2, lights) * 0.7;
  return t;
}

// One mini-batch gradient of the end-to-end autoencoder loss.
void BM_AutoencoderGradient(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  constexpr int kLights = 49;
  const auto table = random_table(64, kLights);
  auto model = rti::neural::build_model(rti::neural::EncoderSpec::improved(), {2, width, 2}, kLights, 3);
  rti::neural::AutoencoderObjective objective(model, table);
  std::vector<Eigen::Index> rows(64);
  std::iota(rows.begin(), rows.end(), 0);
  std::vector<rti::nn::Gradients> grads(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(objective.evaluate(rows, &grads));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 64);
}

}  // namespace

BENCHMARK(BM_AutoencoderGradient)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);
