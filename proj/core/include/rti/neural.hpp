#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>

#include "rti/image.hpp"
#include "rti/mlic.hpp"
#include "rti/nn.hpp"

namespace rti::neural {

struct EncoderSpec {
  int hidden_layers = 3;
  int hidden_width = 150;
  int latent_dim = 9;

  static EncoderSpec original() { return {3, 150, 9}; }
  static EncoderSpec improved() { return {6, 150, 9}; }
  void validate() const;
};

struct DecoderSpec {
  int hidden_layers = 2;
  int hidden_width = 50;
  int light_dim = 2;

  void validate() const;
};

struct ParamCount {
  std::size_t weights = 0;
  std::size_t biases = 0;
  std::size_t total() const { return weights + biases; }
  bool operator==(const ParamCount&) const = default;
};

// Weights and biases of a two-hidden-layer decoder fed K latents plus (lx, ly):
// W = (K+2)N + N^2 + 3N, B = 2N + 3.
ParamCount decoder_param_count(int latent_dim, int width);
ParamCount param_count(const nn::Network& net);

struct NeuralRtiModel {
  nn::Network encoder;
  nn::Network decoder;
  EncoderSpec encoder_spec;
  DecoderSpec decoder_spec;
  bool trained = false;

  int latent_dim() const { return encoder_spec.latent_dim; }
  int train_light_count() const { return static_cast<int>(encoder.input_dim() / 3); }
  void validate() const;
};

// Encoder 3L -> [width]*hidden -> K (linear), decoder K+2 -> [N]*2 -> 3 (linear).
NeuralRtiModel build_model(const EncoderSpec& enc, const DecoderSpec& dec, int n_train_lights, std::uint64_t seed);

// End-to-end objective over pixel rows of a TrainingTable. Each row runs the
// encoder once and the decoder once per train light; the loss is
//   (1/n) sum_k alpha*|Ps - Pgt|^2 + (1 - alpha)*|Ps - Pt|^2
// over the n (pixel, light) samples of the batch. Without teacher targets the
// second term is dropped and alpha is forced to 1.
class AutoencoderObjective final : public nn::Objective {
 public:
  AutoencoderObjective(NeuralRtiModel& model, const TrainingTable& table,
                       const Eigen::MatrixXd* teacher_targets = nullptr, double alpha = 1.0,
                       bool freeze_encoder = false);

  std::vector<nn::Network*> networks() override;
  Eigen::Index row_count() const override { return table_.rows(); }
  double evaluate(std::span<const Eigen::Index> rows, std::vector<nn::Gradients>* grads) override;

 private:
  NeuralRtiModel& model_;
  const TrainingTable& table_;
  const Eigen::MatrixXd* teacher_;
  double alpha_;
  bool freeze_encoder_;
};

nn::TrainHistory train_teacher(NeuralRtiModel& model, const TrainingTable& rows, const nn::TrainConfig& cfg);

// Teacher prediction for every (row, train light), laid out like table.colors.
Eigen::MatrixXd teacher_predictions(const NeuralRtiModel& teacher, const TrainingTable& rows);

inline constexpr double kDefaultAlpha = 0.6;

struct DistillConfig {
  double alpha = kDefaultAlpha;
  const NeuralRtiModel* teacher = nullptr;
  DecoderSpec student_decoder{2, 20, 2};
  // Reuse the teacher's encoder weights frozen and train only the decoder.
  bool copy_encoder = false;
  std::uint64_t seed = 0;
};

struct DistillResult {
  NeuralRtiModel student;
  nn::TrainHistory history;
};

// The student keeps the teacher's encoder architecture but learns its own
// encoder (unless copy_encoder) together with a fresh, smaller decoder.
DistillResult distill_student(const DistillConfig& cfg, const TrainingTable& rows, const nn::TrainConfig& tcfg);

// H x W x K latent codes; column (row * width + col) of `codes` is one pixel.
struct LatentImage {
  int width = 0;
  int height = 0;
  int latent_dim = 0;
  Eigen::MatrixXd codes;  // K x (H*W)
};

LatentImage encode_latents(const NeuralRtiModel& model, const Mlic& mlic, const SplitSpec& split);

struct RelitPixel {
  Rgb raw;      // decoder output
  Rgb display;  // clamped to [0,1]
};

RelitPixel relight(const Eigen::VectorXd& latent, const nn::Network& decoder, const LightDirection& light);
// Decodes every pixel of `latent` under `light`; unclamped unless `clamp`.
Image relight_image(const LatentImage& latent, const nn::Network& decoder, const LightDirection& light,
                    bool clamp = true);

}  // namespace rti::neural
