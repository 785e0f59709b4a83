#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "rti/error.hpp"
#include "rti/study.hpp"
#include "rti/synth.hpp"

namespace rti::study {
namespace {

codec::RelightableFile small_file(int n) {
  neural::LatentImage latent{3, 2, 9, Eigen::MatrixXd::Random(9, 6)};
  return codec::make_neural_file(nn::make_mlp({11, n, n, 3}, 1), codec::quantize(latent),
                                 codec::Method::DiskNeuralRti, 49);
}

TEST(ResizeFile, TilesPlanes) {
  const auto file = small_file(10);
  const auto big = resize_file(file, 2500);
  EXPECT_EQ(big.width, 1000);
  EXPECT_EQ(big.height, 3);
  EXPECT_EQ(big.planes.size(), 3u);
  for (const auto& p : big.planes) EXPECT_EQ(p.data.size(), 3000u * 3);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 1000; c += 7) {
      const std::size_t src = (r % 2) * 3 + c % 3;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        EXPECT_EQ(big.planes[1].data[3 * (r * 1000 + c) + ch], file.planes[1].data[3 * src + ch]);
      }
    }
  }
  const auto tiny = resize_file(file, 1);
  EXPECT_EQ(tiny.width, 1);
  EXPECT_EQ(tiny.height, 1);
}

TEST(MeasureThroughput, ReportsOneRowPerCount) {
  const auto file = small_file(20);
  const auto rows = measure_throughput(file, {1, 5000}, 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].pixels, 1u);
  EXPECT_EQ(rows[1].pixels, 5000u);
  EXPECT_EQ(rows[1].repetitions, 3);
  EXPECT_EQ(rows[1].params_w, 680u);
  EXPECT_EQ(rows[1].params_b, 43u);
  EXPECT_EQ(rows[1].method, "disk-neuralrti");
  EXPECT_GT(rows[1].pixels_per_second, 0.0);
  EXPECT_NEAR(rows[1].pixels_per_second * rows[1].median_seconds, 5000.0, 1e-6);
  const std::string csv = throughput_csv(rows);
  EXPECT_EQ(csv.rfind("method,pixels,repetitions,median_seconds,pixels_per_second,params_W,params_B\n", 0), 0u);
}

TEST(StudySubsample, OneRowPerFraction) {
  const Mlic m = synth::render_mlic(synth::make_scene(synth::SceneKind::Flat, 16, 3), synth::benchmark_lights());
  const SplitSpec split = split_by_elevation(m, {20, 40, 60, 80});
  PipelineConfig cfg;
  cfg.encoder = neural::EncoderSpec::original();
  cfg.teacher_decoder = {2, 10, 2};
  cfg.student_decoder = {2, 5, 2};
  cfg.train.max_epochs = 2;
  cfg.train.patience = 2;
  cfg.seed = 4;
  const auto table = study_subsample(m, split, {0.25, 1.0}, cfg);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].pixels, 64u);
  EXPECT_EQ(table.rows[1].pixels, 256u);
  for (const auto& r : table.rows) {
    EXPECT_TRUE(std::isfinite(r.teacher_psnr_db));
    EXPECT_TRUE(std::isfinite(r.student_psnr_db));
    EXPECT_GT(r.teacher_train_s, 0.0);
    EXPECT_GT(r.student_train_s, 0.0);
  }
  const auto j = nlohmann::json::parse(table.to_json());
  EXPECT_EQ(j.size(), 2u);
  const std::string csv = table.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_THROW(study_subsample(m, split, {0.0}, cfg), Error);
}

}  // namespace
}  // namespace rti::study
