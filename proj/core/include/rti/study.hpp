#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rti/codec.hpp"
#include "rti/metrics.hpp"
#include "rti/mlic.hpp"
#include "rti/neural.hpp"
#include "rti/nn.hpp"

namespace rti::study {

// Settings shared by the teacher/student pipeline runs.
struct PipelineConfig {
  neural::EncoderSpec encoder = neural::EncoderSpec::improved();
  neural::DecoderSpec teacher_decoder{2, 50, 2};
  neural::DecoderSpec student_decoder{2, 20, 2};
  double alpha = neural::kDefaultAlpha;
  bool copy_encoder = false;
  nn::TrainConfig train;
  // Student schedule; the teacher schedule is reused when unset.
  std::optional<nn::TrainConfig> student_train;
  std::uint64_t seed = 0;
};

struct SubsampleRow {
  double fraction = 0.0;
  std::size_t pixels = 0;
  double teacher_psnr_db = 0.0;
  double teacher_ssim = 0.0;
  double student_psnr_db = 0.0;
  double student_ssim = 0.0;
  double teacher_train_s = 0.0;
  double student_train_s = 0.0;
};

struct SubsampleTable {
  std::vector<SubsampleRow> rows;

  std::string to_csv() const;
  std::string to_json() const;
};

// For every fraction: uniform-random pixel sample (seeded), teacher training,
// distillation, then quality of both models on the test lights of the full image.
SubsampleTable study_subsample(const Mlic& mlic, const SplitSpec& split, const std::vector<double>& fractions,
                               const PipelineConfig& cfg);

struct ThroughputRow {
  std::string method;
  std::size_t pixels = 0;
  int repetitions = 0;
  double median_seconds = 0.0;
  double pixels_per_second = 0.0;
  std::size_t params_w = 0;
  std::size_t params_b = 0;
};

// A copy of `file` covering `pixels` pixels (width min(pixels, 1000)), filled by
// tiling the source planes or coefficients.
codec::RelightableFile resize_file(const codec::RelightableFile& file, std::size_t pixels);

// Median wall-clock time of cpu_relight_file over `repetitions` runs per count.
std::vector<ThroughputRow> measure_throughput(const codec::RelightableFile& file,
                                              const std::vector<std::size_t>& pixel_counts, int repetitions = 5);

std::string throughput_csv(const std::vector<ThroughputRow>& rows);

}  // namespace rti::study
