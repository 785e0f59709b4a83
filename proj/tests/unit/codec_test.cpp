#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "rti/codec.hpp"
#include "rti/error.hpp"
#include "rti/synth.hpp"
#include "test_util.hpp"

namespace rti::codec {
namespace {

using rti::testing::TempDir;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rti::Error thrown";
  return ErrorCode::InvalidArgument;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

neural::LatentImage random_latent(int w, int h, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 2.0);
  neural::LatentImage l{w, h, k, Eigen::MatrixXd(k, static_cast<Eigen::Index>(w) * h)};
  for (Eigen::Index i = 0; i < l.codes.size(); ++i) l.codes.data()[i] = g(rng);
  return l;
}

RelightableFile sample_file(int width = 6, int height = 5, int n = 20) {
  const auto decoder = nn::make_mlp({11, n, n, 3}, 3);
  return make_neural_file(decoder, quantize(random_latent(width, height, 9, 8)), Method::DiskNeuralRti, 49);
}

TEST(Quantize, ConstantFeatureHasUnitScale) {
  neural::LatentImage l{3, 2, 1, Eigen::MatrixXd::Constant(1, 6, 0.7)};
  const auto q = quantize(l);
  EXPECT_DOUBLE_EQ(q.quant.offsets[0], 0.7);
  EXPECT_DOUBLE_EQ(q.quant.scales[0], 1.0);
  for (auto b : q.planes[0].data) EXPECT_EQ(b, 0);
}

TEST(Quantize, EndpointsMapToZeroAnd255) {
  neural::LatentImage l{3, 1, 1, Eigen::MatrixXd(1, 3)};
  l.codes << -1.0, 0.2, 1.0;
  const auto q = quantize(l);
  EXPECT_DOUBLE_EQ(q.quant.offsets[0], -1.0);
  EXPECT_DOUBLE_EQ(q.quant.scales[0], 2.0 / 255.0);
  EXPECT_EQ(q.planes[0].data[0], 0);
  EXPECT_EQ(q.planes[0].data[3], 153);  // round(1.2 / (2/255)) = round(153.0)
  EXPECT_EQ(q.planes[0].data[6], 255);
}

TEST(Quantize, PacksThreeFeaturesPerPlane) {
  neural::LatentImage l{1, 1, 9, Eigen::MatrixXd::Zero(9, 1)};
  const auto q = quantize(l);
  ASSERT_EQ(q.planes.size(), 3u);
  for (const auto& p : q.planes) EXPECT_EQ(p.data.size(), 3u);
  neural::LatentImage l4{2, 1, 4, Eigen::MatrixXd(4, 2)};
  l4.codes << 0, 1, 0, 1, 0, 1, 5, 6;
  const auto q4 = quantize(l4);
  ASSERT_EQ(q4.planes.size(), 2u);
  EXPECT_EQ(q4.planes[1].data[0], 0);
  EXPECT_EQ(q4.planes[1].data[3], 255);
  EXPECT_EQ(q4.planes[1].data[1], 0);  // padding channel
}

TEST(Quantize, DequantizationErrorWithinHalfStep) {
  const auto latent = random_latent(64, 48, 9, 1);
  const auto q = quantize(latent);
  const auto back = dequantize(q);
  for (int f = 0; f < 9; ++f) {
    const double bound = q.quant.scales[f] / 2 * (1 + 1e-12);
    EXPECT_LE((back.codes.row(f) - latent.codes.row(f)).cwiseAbs().maxCoeff(), bound) << "feature " << f;
  }
}

TEST(Quantize, ByteEndpointsFollowAffineMap) {
  const auto latent = random_latent(16, 16, 9, 2);
  const auto q = quantize(latent);
  for (int f = 0; f < 9; ++f) {
    EXPECT_DOUBLE_EQ(q.quant.offsets[f], latent.codes.row(f).minCoeff());
    EXPECT_NEAR(q.quant.offsets[f] + 255 * q.quant.scales[f], latent.codes.row(f).maxCoeff(), 1e-12);
  }
}

TEST(Quantize, RejectsNonFiniteAndShapeErrors) {
  auto latent = random_latent(4, 4, 9, 3);
  latent.codes(2, 5) = std::nan("");
  EXPECT_EQ(code_of([&] { quantize(latent); }), ErrorCode::NonFiniteLatent);
  auto wrong = random_latent(4, 4, 9, 3);
  wrong.width = 5;
  EXPECT_EQ(code_of([&] { quantize(wrong); }), ErrorCode::ShapeMismatch);
}

TEST(Method, TagsRoundTrip) {
  for (auto m : {Method::DiskNeuralRti, Method::NeuralRti, Method::PtmLrgb, Method::Hsh3}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_EQ(to_string(Method::DiskNeuralRti), "disk-neuralrti");
  EXPECT_EQ(code_of([] { parse_method("pca-rbf"); }), ErrorCode::SchemaViolation);
}

TEST(Header, SchemaKeysAndDecoderCounts) {
  const auto file = sample_file();
  const auto j = nlohmann::json::parse(header_json(file));
  for (const char* key : {"format_version", "method", "width", "height", "K", "decoder", "quant", "lights_trained"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["method"], "disk-neuralrti");
  EXPECT_EQ(j["K"], 9);
  EXPECT_EQ(j["decoder"]["layer_sizes"], nlohmann::json({11, 20, 20, 3}));
  EXPECT_EQ(j["decoder"]["activation"], "elu");
  std::size_t w = 0, b = 0;
  for (const auto& layer : j["decoder"]["weights"]) w += layer.size();
  for (const auto& layer : j["decoder"]["biases"]) b += layer.size();
  EXPECT_EQ(w, 680u);
  EXPECT_EQ(b, 43u);
  EXPECT_EQ(j["quant"]["offsets"].size(), 9u);
}

TEST(Header, WeightsAreRowMajor) {
  const auto file = sample_file();
  const auto j = nlohmann::json::parse(header_json(file));
  const auto& w0 = file.decoder.layers()[0].weights;
  EXPECT_DOUBLE_EQ(j["decoder"]["weights"][0][1].get<double>(), w0(0, 1));
  EXPECT_DOUBLE_EQ(j["decoder"]["weights"][0][11].get<double>(), w0(1, 0));
}

TEST(Header, MissingKeyIsNamed) {
  auto j = nlohmann::json::parse(header_json(sample_file()));
  j["quant"].erase("scales");
  try {
    parse_header(j.dump());
    FAIL() << "expected SchemaViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    EXPECT_NE(std::string(e.what()).find("quant.scales"), std::string::npos) << e.what();
  }
  for (const char* key : {"format_version", "method", "width", "height", "K", "decoder", "quant", "lights_trained"}) {
    auto k = nlohmann::json::parse(header_json(sample_file()));
    k.erase(key);
    EXPECT_EQ(code_of([&] { parse_header(k.dump()); }), ErrorCode::SchemaViolation) << key;
  }
}

TEST(Header, WeightCountMismatchDetected) {
  auto j = nlohmann::json::parse(header_json(sample_file()));
  j["decoder"]["weights"][1].erase(0);  // 679 weights
  EXPECT_EQ(code_of([&] { parse_header(j.dump()); }), ErrorCode::CountMismatch);
  auto k = nlohmann::json::parse(header_json(sample_file()));
  k["decoder"]["biases"][2].push_back(0.0);
  EXPECT_EQ(code_of([&] { parse_header(k.dump()); }), ErrorCode::CountMismatch);
}

TEST(Header, RejectsBadVersionMethodAndScales) {
  auto j = nlohmann::json::parse(header_json(sample_file()));
  j["format_version"] = 2;
  EXPECT_EQ(code_of([&] { parse_header(j.dump()); }), ErrorCode::SchemaViolation);
  j = nlohmann::json::parse(header_json(sample_file()));
  j["method"] = "rbf";
  EXPECT_EQ(code_of([&] { parse_header(j.dump()); }), ErrorCode::SchemaViolation);
  j = nlohmann::json::parse(header_json(sample_file()));
  j["quant"]["scales"][4] = 0.0;
  EXPECT_EQ(code_of([&] { parse_header(j.dump()); }), ErrorCode::SchemaViolation);
  EXPECT_EQ(code_of([&] { parse_header("{not json"); }), ErrorCode::SchemaViolation);
}

TEST(Container, WriteReadWriteIsByteIdentical) {
  TempDir tmp("codec_rt");
  const auto file = sample_file(7, 5, 20);
  write_relightable(tmp / "a", file);
  for (const char* name : {"info.json", "plane_0.png", "plane_1.png", "plane_2.png"}) {
    EXPECT_TRUE(std::filesystem::exists(tmp / "a" / name)) << name;
  }
  const auto back = read_relightable(tmp / "a");
  EXPECT_EQ(back.method, file.method);
  EXPECT_EQ(back.width, 7);
  EXPECT_EQ(back.height, 5);
  EXPECT_EQ(back.lights_trained, 49);
  EXPECT_EQ(back.quant.offsets, file.quant.offsets);
  EXPECT_EQ(back.quant.scales, file.quant.scales);
  ASSERT_EQ(back.planes.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.planes[i], file.planes[i]);
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(back.decoder.layers()[l].weights, file.decoder.layers()[l].weights);
    EXPECT_EQ(back.decoder.layers()[l].biases, file.decoder.layers()[l].biases);
  }
  write_relightable(tmp / "b", back);
  for (const char* name : {"info.json", "plane_0.png", "plane_1.png", "plane_2.png"}) {
    EXPECT_EQ(slurp(tmp / "a" / name), slurp(tmp / "b" / name)) << name;
  }
}

TEST(Container, MissingFilesReported) {
  TempDir tmp("codec_missing");
  EXPECT_EQ(code_of([&] { read_relightable(tmp / "nothing"); }), ErrorCode::MissingFile);
  write_relightable(tmp / "a", sample_file());
  std::filesystem::remove(tmp / "a" / "plane_2.png");
  EXPECT_EQ(code_of([&] { read_relightable(tmp / "a"); }), ErrorCode::MissingFile);
}

TEST(Container, WrongPlaneSizeDetected) {
  TempDir tmp("codec_plane");
  write_relightable(tmp / "a", sample_file(6, 5));
  write_png(tmp / "a" / "plane_1.png", ByteImage{5, 5, std::vector<unsigned char>(75, 9)});
  EXPECT_EQ(code_of([&] { read_relightable(tmp / "a"); }), ErrorCode::PlaneDimensionMismatch);
}

TEST(Container, EditedHeaderRejected) {
  TempDir tmp("codec_edit");
  write_relightable(tmp / "a", sample_file());
  auto j = nlohmann::json::parse(slurp(tmp / "a" / "info.json"));
  j["decoder"]["weights"][0].erase(3);
  spit(tmp / "a" / "info.json", j.dump());
  EXPECT_EQ(code_of([&] { read_relightable(tmp / "a"); }), ErrorCode::CountMismatch);
}

TEST(Container, ShapeCheckedOnWrite) {
  TempDir tmp("codec_shape");
  auto file = sample_file();
  file.planes.pop_back();
  EXPECT_EQ(code_of([&] { write_relightable(tmp / "a", file); }), ErrorCode::ShapeMismatch);
}

TEST(Container, ClassicalRoundTrip) {
  TempDir tmp("codec_classical");
  const auto lights = synth::dome_directions(synth::training_dome());
  const Mlic m = synth::render_mlic(synth::make_scene(synth::SceneKind::Mixed, 10, 2), lights);
  std::vector<int> idx(lights.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  const auto split = split_by_indices(m, idx, {});
  const auto ptm = classical::fit_ptm(m, split);
  const auto hsh = classical::fit_hsh(m, split, 3);
  const auto probe = LightDirection::from_angles(40, 120);

  const auto ptm_file = make_ptm_file(ptm, 49);
  EXPECT_EQ(ptm_file.latent_dim, 9);
  write_relightable(tmp / "ptm", ptm_file);
  const auto ptm_back = read_relightable(tmp / "ptm");
  EXPECT_EQ(ptm_back.method, Method::PtmLrgb);
  EXPECT_EQ(ptm_back.coefficients, ptm_file.coefficients);
  EXPECT_LT(rti::testing::max_abs_diff(cpu_relight_file(ptm_back, probe), classical::relight_image(ptm, probe)), 1e-5);

  const auto hsh_file = make_hsh_file(hsh, 49);
  EXPECT_EQ(hsh_file.latent_dim, 27);
  write_relightable(tmp / "hsh", hsh_file);
  const auto hsh_back = read_relightable(tmp / "hsh");
  EXPECT_EQ(hsh_back.method, Method::Hsh3);
  EXPECT_LT(rti::testing::max_abs_diff(cpu_relight_file(hsh_back, probe), classical::relight_image(hsh, probe)), 1e-5);
  write_relightable(tmp / "hsh2", hsh_back);
  EXPECT_EQ(slurp(tmp / "hsh" / "info.json"), slurp(tmp / "hsh2" / "info.json"));
  EXPECT_EQ(slurp(tmp / "hsh" / "coefficients.bin"), slurp(tmp / "hsh2" / "coefficients.bin"));

  std::filesystem::resize_file(tmp / "hsh2" / "coefficients.bin", 100);
  EXPECT_EQ(code_of([&] { read_relightable(tmp / "hsh2"); }), ErrorCode::CountMismatch);
  EXPECT_EQ(code_of([&] { make_hsh_file(classical::fit_hsh(m, split, 2), 49); }), ErrorCode::OrderUnsupported);
}

TEST(CpuRelight, MatchesInMemoryDecodeWithinQuantization) {
  const auto latent = random_latent(9, 7, 9, 4);
  const auto decoder = nn::make_mlp({11, 20, 20, 3}, 5);
  const auto file = make_neural_file(decoder, quantize(latent), Method::DiskNeuralRti, 49);
  const auto dq = dequantize(quantize(latent));
  for (const auto& l : synth::dome_directions(synth::test_dome())) {
    EXPECT_LT(rti::testing::max_abs_diff(cpu_relight_file(file, l), neural::relight_image(dq, decoder, l)), 1e-5);
  }
}

TEST(CpuRelight, ScaleDecodesEverySthPixel) {
  neural::LatentImage latent = random_latent(5, 5, 9, 6);
  const auto decoder = nn::make_mlp({11, 10, 10, 3}, 2);
  const auto file = make_neural_file(decoder, quantize(latent), Method::NeuralRti, 49);
  const auto light = LightDirection::from_angles(50, 10);
  const Image full = cpu_relight_file(file, light, 1);
  const Image coarse = cpu_relight_file(file, light, 2);
  ASSERT_TRUE(coarse.same_size(full));
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      // Float GEMM summation order depends on the block width, so allow the last bits to differ.
      for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(coarse.at(r, c, ch), full.at(r / 2 * 2, c / 2 * 2, ch), 1e-6);
    }
  }
  neural::LatentImage flat{4, 4, 9, Eigen::MatrixXd::Constant(9, 16, 0.3)};
  const auto flat_file = make_neural_file(decoder, quantize(flat), Method::NeuralRti, 49);
  EXPECT_EQ(cpu_relight_file(flat_file, light, 1).data(), cpu_relight_file(flat_file, light, 2).data());
  EXPECT_THROW(cpu_relight_file(file, light, 0), Error);
}

TEST(MakeNeuralFile, RejectsWrongDecoder) {
  const auto q = quantize(random_latent(2, 2, 9, 1));
  EXPECT_EQ(code_of([&] { make_neural_file(nn::make_mlp({10, 20, 20, 3}, 1), q, Method::NeuralRti, 49); }),
            ErrorCode::ShapeMismatch);
  EXPECT_THROW(make_neural_file(nn::make_mlp({11, 20, 20, 3}, 1), q, Method::PtmLrgb, 49), Error);
}

TEST(Checkpoint, RoundTrip) {
  TempDir tmp("ckpt");
  Checkpoint ck;
  ck.model = neural::build_model(neural::EncoderSpec::original(), {2, 20, 2}, 4, 1);
  ck.model.trained = true;
  ck.method = Method::DiskNeuralRti;
  ck.train_indices = {0, 1, 2, 3};
  ck.test_indices = {4};
  ck.mlic_dir = "frames";
  ck.lp_file = "frames/lights.lp";
  write_checkpoint(tmp / "c.json", ck);
  const auto back = read_checkpoint(tmp / "c.json");
  EXPECT_EQ(back.method, Method::DiskNeuralRti);
  EXPECT_TRUE(back.model.trained);
  EXPECT_EQ(back.train_indices, ck.train_indices);
  EXPECT_EQ(back.test_indices, ck.test_indices);
  EXPECT_EQ(back.mlic_dir, "frames");
  EXPECT_EQ(back.lp_file, "frames/lights.lp");
  EXPECT_EQ(back.model.encoder.layer_sizes(), ck.model.encoder.layer_sizes());
  EXPECT_EQ(back.model.decoder.layers()[1].weights, ck.model.decoder.layers()[1].weights);
  EXPECT_EQ(back.model.encoder_spec.hidden_layers, 3);
  EXPECT_EQ(back.model.decoder_spec.hidden_width, 20);
}

}  // namespace
}  // namespace rti::codec
