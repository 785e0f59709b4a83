#include "rti/neural.hpp"

#include <algorithm>
#include <string>

#include "rti/error.hpp"

namespace rti::neural {

void EncoderSpec::validate() const {
  if (hidden_layers < 1 || hidden_width < 1 || latent_dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "encoder spec needs positive layer count, width and latent size");
  }
}

void DecoderSpec::validate() const {
  if (hidden_layers != 2) throw Error(ErrorCode::InvalidArgument, "decoder must have exactly two hidden layers");
  if (hidden_width < 1) throw Error(ErrorCode::InvalidArgument, "decoder width must be positive");
  if (light_dim != 2) throw Error(ErrorCode::InvalidArgument, "decoder consumes (lx, ly) only");
}

ParamCount decoder_param_count(int latent_dim, int width) {
  if (latent_dim < 1 || width < 1) throw Error(ErrorCode::InvalidArgument, "K and N must be >= 1");
  const auto k = static_cast<std::size_t>(latent_dim);
  const auto n = static_cast<std::size_t>(width);
  return {(k + 2) * n + n * n + n * 3, n + n + 3};
}

ParamCount param_count(const nn::Network& net) { return {net.weight_count(), net.bias_count()}; }

void NeuralRtiModel::validate() const {
  encoder.validate();
  decoder.validate();
  if (encoder.input_dim() % 3 != 0 || encoder.output_dim() != encoder_spec.latent_dim) {
    throw Error(ErrorCode::DimensionMismatch, "encoder shape inconsistent with its spec");
  }
  if (decoder.input_dim() != encoder_spec.latent_dim + decoder_spec.light_dim || decoder.output_dim() != 3) {
    throw Error(ErrorCode::DimensionMismatch, "decoder must map K+2 inputs to RGB");
  }
}

NeuralRtiModel build_model(const EncoderSpec& enc, const DecoderSpec& dec, int n_train_lights, std::uint64_t seed) {
  enc.validate();
  dec.validate();
  if (n_train_lights < 1) throw Error(ErrorCode::InvalidArgument, "need at least one train light");
  std::vector<int> enc_sizes{3 * n_train_lights};
  for (int i = 0; i < enc.hidden_layers; ++i) enc_sizes.push_back(enc.hidden_width);
  enc_sizes.push_back(enc.latent_dim);

  std::vector<int> dec_sizes{enc.latent_dim + dec.light_dim};
  for (int i = 0; i < dec.hidden_layers; ++i) dec_sizes.push_back(dec.hidden_width);
  dec_sizes.push_back(3);

  NeuralRtiModel model;
  model.encoder = nn::make_mlp(enc_sizes, seed);
  model.decoder = nn::make_mlp(dec_sizes, seed ^ 0x9e3779b97f4a7c15ull);
  model.encoder_spec = enc;
  model.decoder_spec = dec;
  return model;
}

namespace {

// Decoder input for every (pixel, light) pair: column b*L + j = [z_b; lx_j; ly_j].
Eigen::MatrixXd decoder_inputs(const Eigen::MatrixXd& latents, const Eigen::MatrixXd& lights) {
  const Eigen::Index k = latents.rows(), b_count = latents.cols(), l_count = lights.cols();
  Eigen::MatrixXd in(k + 2, b_count * l_count);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    in.block(0, b * l_count, k, l_count) = latents.col(b).replicate(1, l_count);
    in.block(k, b * l_count, 2, l_count) = lights;
  }
  return in;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const Eigen::Index> cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(cols[i]);
  return out;
}

}  // namespace

AutoencoderObjective::AutoencoderObjective(NeuralRtiModel& model, const TrainingTable& table,
                                           const Eigen::MatrixXd* teacher_targets, double alpha,
                                           bool freeze_encoder)
    : model_(model),
      table_(table),
      teacher_(teacher_targets),
      alpha_(teacher_targets ? alpha : 1.0),
      freeze_encoder_(freeze_encoder) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
  if (model.encoder.input_dim() != table.colors.rows() || 3 * table.light_count() != table.colors.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "encoder expects " + std::to_string(model.encoder.input_dim()) +
                                                  " inputs, table rows carry " +
                                                  std::to_string(table.colors.rows()));
  }
  if (teacher_ && (teacher_->rows() != table.colors.rows() || teacher_->cols() != table.colors.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "teacher targets do not match the training table");
  }
}

std::vector<nn::Network*> AutoencoderObjective::networks() {
  if (freeze_encoder_) return {&model_.decoder};
  return {&model_.encoder, &model_.decoder};
}

double AutoencoderObjective::evaluate(std::span<const Eigen::Index> rows, std::vector<nn::Gradients>* grads) {
  const Eigen::Index b_count = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index l_count = table_.light_count();
  const Eigen::Index k = model_.encoder.output_dim();
  const Eigen::Index samples = b_count * l_count;
  if (samples == 0) return 0.0;

  const Eigen::MatrixXd x = gather_columns(table_.colors, rows);
  const bool need_grad = grads != nullptr;
  nn::ForwardCache enc_cache, dec_cache;
  const Eigen::MatrixXd z = nn::forward(model_.encoder, x, need_grad && !freeze_encoder_ ? &enc_cache : nullptr);
  const Eigen::MatrixXd pred = nn::forward(model_.decoder, decoder_inputs(z, table_.lights),
                                           need_grad ? &dec_cache : nullptr);

  // Interleaved-by-light columns reinterpret as 3 x (B*L) with column b*L + j.
  const Eigen::Map<const Eigen::MatrixXd> gt(x.data(), 3, samples);
  Eigen::MatrixXd residual = pred - gt;
  double loss = alpha_ * residual.squaredNorm();
  Eigen::MatrixXd dpred;
  if (teacher_) {
    const Eigen::MatrixXd t = gather_columns(*teacher_, rows);
    const Eigen::Map<const Eigen::MatrixXd> pt(t.data(), 3, samples);
    const Eigen::MatrixXd teacher_residual = pred - pt;
    loss += (1.0 - alpha_) * teacher_residual.squaredNorm();
    if (need_grad) dpred = (2.0 / samples) * (alpha_ * residual + (1.0 - alpha_) * teacher_residual);
  } else if (need_grad) {
    dpred = (2.0 / samples) * residual;
  }
  loss /= static_cast<double>(samples);
  if (!need_grad) return loss;

  Eigen::MatrixXd dinput;
  nn::Gradients dec_grads = nn::backward(model_.decoder, dec_cache, dpred, freeze_encoder_ ? nullptr : &dinput);
  if (freeze_encoder_) {
    (*grads)[0] = std::move(dec_grads);
    return loss;
  }
  Eigen::MatrixXd dz(k, b_count);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    dz.col(b) = dinput.block(0, b * l_count, k, l_count).rowwise().sum();
  }
  (*grads)[0] = nn::backward(model_.encoder, enc_cache, dz);
  (*grads)[1] = std::move(dec_grads);
  return loss;
}

nn::TrainHistory train_teacher(NeuralRtiModel& model, const TrainingTable& rows, const nn::TrainConfig& cfg) {
  if (rows.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  AutoencoderObjective objective(model, rows);
  nn::TrainHistory history = nn::optimize(objective, cfg);
  model.trained = true;
  return history;
}

Eigen::MatrixXd teacher_predictions(const NeuralRtiModel& teacher, const TrainingTable& rows) {
  const Eigen::Index l_count = rows.light_count();
  Eigen::MatrixXd out(rows.colors.rows(), rows.rows());
  constexpr Eigen::Index kChunk = 256;
  for (Eigen::Index start = 0; start < rows.rows(); start += kChunk) {
    const Eigen::Index count = std::min(kChunk, rows.rows() - start);
    const Eigen::MatrixXd z = nn::forward(teacher.encoder, rows.colors.middleCols(start, count));
    const Eigen::MatrixXd pred = nn::forward(teacher.decoder, decoder_inputs(z, rows.lights));
    out.middleCols(start, count) = Eigen::Map<const Eigen::MatrixXd>(pred.data(), 3 * l_count, count);
  }
  return out;
}

DistillResult distill_student(const DistillConfig& cfg, const TrainingTable& rows, const nn::TrainConfig& tcfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [0, 1]");
  if (cfg.teacher == nullptr || !cfg.teacher->trained) {
    throw Error(ErrorCode::TeacherUntrained, "distillation needs a trained teacher");
  }
  if (rows.rows() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no training rows");
  const NeuralRtiModel& teacher = *cfg.teacher;
  if (teacher.encoder.input_dim() != rows.colors.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "teacher was trained on a different light count");
  }
  DistillResult result;
  result.student = build_model(teacher.encoder_spec, cfg.student_decoder, static_cast<int>(rows.light_count()),
                               cfg.seed);
  if (cfg.copy_encoder) result.student.encoder = teacher.encoder;

  const Eigen::MatrixXd targets = teacher_predictions(teacher, rows);
  AutoencoderObjective objective(result.student, rows, &targets, cfg.alpha, cfg.copy_encoder);
  result.history = nn::optimize(objective, tcfg);
  result.student.trained = true;
  return result;
}

LatentImage encode_latents(const NeuralRtiModel& model, const Mlic& mlic, const SplitSpec& split) {
  if (model.encoder.input_dim() != 3 * static_cast<Eigen::Index>(split.train_indices.size())) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.train_light_count()) +
                                                  " train lights, split has " +
                                                  std::to_string(split.train_indices.size()));
  }
  const TrainingTable table = gather_training_rows(mlic, all_pixels(mlic.width, mlic.height), split);
  LatentImage latent;
  latent.width = mlic.width;
  latent.height = mlic.height;
  latent.latent_dim = static_cast<int>(model.encoder.output_dim());
  latent.codes.resize(latent.latent_dim, table.rows());
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < table.rows(); start += kChunk) {
    const Eigen::Index count = std::min(kChunk, table.rows() - start);
    latent.codes.middleCols(start, count) = nn::forward(model.encoder, table.colors.middleCols(start, count));
  }
  return latent;
}

RelitPixel relight(const Eigen::VectorXd& latent, const nn::Network& decoder, const LightDirection& light) {
  if (decoder.input_dim() != latent.size() + 2) {
    throw Error(ErrorCode::DimensionMismatch, "decoder input must be latent size + 2");
  }
  Eigen::VectorXd in(latent.size() + 2);
  in << latent, light.lx, light.ly;
  const Eigen::VectorXd out = nn::forward_one(decoder, in);
  RelitPixel p;
  for (int c = 0; c < 3; ++c) {
    p.raw[c] = out(c);
    p.display[c] = std::clamp(out(c), 0.0, 1.0);
  }
  return p;
}

Image relight_image(const LatentImage& latent, const nn::Network& decoder, const LightDirection& light, bool clamp) {
  if (decoder.input_dim() != latent.latent_dim + 2) {
    throw Error(ErrorCode::DimensionMismatch, "decoder input must be latent size + 2");
  }
  Image out(latent.width, latent.height);
  const Eigen::Index n = latent.codes.cols();
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index count = std::min(kChunk, n - start);
    Eigen::MatrixXd in(latent.latent_dim + 2, count);
    in.topRows(latent.latent_dim) = latent.codes.middleCols(start, count);
    in.row(latent.latent_dim).setConstant(light.lx);
    in.row(latent.latent_dim + 1).setConstant(light.ly);
    const Eigen::MatrixXd rgb = nn::forward(decoder, in);
    std::copy(rgb.data(), rgb.data() + rgb.size(), out.data().begin() + 3 * start);
  }
  return clamp ? out.clamped() : out;
}

}  // namespace rti::neural
