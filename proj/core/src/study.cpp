#include "rti/study.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rti/error.hpp"

namespace rti::study {

std::string SubsampleTable::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "fraction,pixels,teacher_psnr_db,teacher_ssim,student_psnr_db,student_ssim,teacher_train_s,student_train_s\n";
  for (const auto& r : rows) {
    out << r.fraction << ',' << r.pixels << ',' << r.teacher_psnr_db << ',' << r.teacher_ssim << ','
        << r.student_psnr_db << ',' << r.student_ssim << ',' << r.teacher_train_s << ',' << r.student_train_s << '\n';
  }
  return out.str();
}

std::string SubsampleTable::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"fraction", r.fraction},
                 {"pixels", r.pixels},
                 {"teacher_psnr_db", r.teacher_psnr_db},
                 {"teacher_ssim", r.teacher_ssim},
                 {"student_psnr_db", r.student_psnr_db},
                 {"student_ssim", r.student_ssim},
                 {"teacher_train_s", r.teacher_train_s},
                 {"student_train_s", r.student_train_s}});
  }
  return j.dump(2);
}

namespace {

metrics::QualityReport score(const neural::NeuralRtiModel& model, const Mlic& mlic, const SplitSpec& split) {
  const neural::LatentImage latent = neural::encode_latents(model, mlic, split);
  return metrics::evaluate(mlic, split.test_indices, [&](const LightDirection& light) {
    return neural::relight_image(latent, model.decoder, light);
  });
}

}  // namespace

SubsampleTable study_subsample(const Mlic& mlic, const SplitSpec& split, const std::vector<double>& fractions,
                               const PipelineConfig& cfg) {
  SubsampleTable table;
  const int n_lights = static_cast<int>(split.train_indices.size());
  for (double fraction : fractions) {
    const PixelSampleSet sample = sample_pixels(mlic, fraction, UniformRandom{cfg.seed});
    const TrainingTable rows = gather_training_rows(mlic, sample, split);

    neural::NeuralRtiModel teacher = neural::build_model(cfg.encoder, cfg.teacher_decoder, n_lights, cfg.seed);
    nn::TrainConfig tcfg = cfg.train;
    tcfg.seed = cfg.seed;
    const nn::TrainHistory teacher_history = neural::train_teacher(teacher, rows, tcfg);

    neural::DistillConfig dcfg;
    dcfg.alpha = cfg.alpha;
    dcfg.teacher = &teacher;
    dcfg.student_decoder = cfg.student_decoder;
    dcfg.copy_encoder = cfg.copy_encoder;
    dcfg.seed = cfg.seed + 1;
    nn::TrainConfig scfg = cfg.student_train.value_or(cfg.train);
    scfg.seed = cfg.seed + 1;
    const neural::DistillResult student = neural::distill_student(dcfg, rows, scfg);

    const metrics::QualityReport tq = score(teacher, mlic, split);
    const metrics::QualityReport sq = score(student.student, mlic, split);
    SubsampleRow row;
    row.fraction = fraction;
    row.pixels = sample.indices.size();
    row.teacher_psnr_db = tq.mean_psnr_db;
    row.teacher_ssim = tq.mean_ssim;
    row.student_psnr_db = sq.mean_psnr_db;
    row.student_ssim = sq.mean_ssim;
    row.teacher_train_s = teacher_history.seconds;
    row.student_train_s = student.history.seconds;
    spdlog::info("subsample {:.4f}: {} px, teacher {:.2f} dB ({:.1f} s), student {:.2f} dB ({:.1f} s)", fraction,
                 row.pixels, row.teacher_psnr_db, row.teacher_train_s, row.student_psnr_db, row.student_train_s);
    table.rows.push_back(row);
  }
  return table;
}

codec::RelightableFile resize_file(const codec::RelightableFile& file, std::size_t pixels) {
  if (pixels < 1) throw Error(ErrorCode::InvalidArgument, "pixel count must be >= 1");
  constexpr std::size_t kMaxWidth = 1000;
  const std::size_t width = std::min(pixels, kMaxWidth);
  const std::size_t height = (pixels + width - 1) / width;

  codec::RelightableFile out = file;
  out.width = static_cast<int>(width);
  out.height = static_cast<int>(height);
  const auto src_w = static_cast<std::size_t>(file.width), src_h = static_cast<std::size_t>(file.height);
  auto source = [&](std::size_t r, std::size_t c) { return (r % src_h) * src_w + c % src_w; };

  if (codec::is_neural(file.method)) {
    for (std::size_t i = 0; i < file.planes.size(); ++i) {
      ByteImage& plane = out.planes[i];
      plane.width = out.width;
      plane.height = out.height;
      plane.data.assign(width * height * 3, 0);
      for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          const std::size_t s = source(r, c);
          std::copy_n(file.planes[i].data.begin() + 3 * s, 3, plane.data.begin() + 3 * (r * width + c));
        }
      }
    }
  } else {
    const auto k = static_cast<std::size_t>(file.latent_dim);
    out.coefficients.assign(width * height * k, 0.0f);
    for (std::size_t r = 0; r < height; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        std::copy_n(file.coefficients.begin() + source(r, c) * k, k, out.coefficients.begin() + (r * width + c) * k);
      }
    }
  }
  return out;
}

std::vector<ThroughputRow> measure_throughput(const codec::RelightableFile& file,
                                              const std::vector<std::size_t>& pixel_counts, int repetitions) {
  if (repetitions < 1) throw Error(ErrorCode::InvalidArgument, "repetitions must be >= 1");
  const LightDirection light = LightDirection::from_angles(45.0, 30.0);
  std::vector<ThroughputRow> rows;
  for (std::size_t count : pixel_counts) {
    const codec::RelightableFile region = resize_file(file, count);
    std::vector<double> seconds;
    Image img;
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      codec::cpu_relight_file(region, light, img);
      const auto stop = std::chrono::steady_clock::now();
      if (img.empty()) throw Error(ErrorCode::InvalidArgument, "empty relight");
      seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::sort(seconds.begin(), seconds.end());
    const double median = seconds.size() % 2 ? seconds[seconds.size() / 2]
                                             : 0.5 * (seconds[seconds.size() / 2 - 1] + seconds[seconds.size() / 2]);
    ThroughputRow row;
    row.method = std::string(codec::to_string(file.method));
    row.pixels = static_cast<std::size_t>(region.width) * region.height;
    row.repetitions = repetitions;
    row.median_seconds = median;
    row.pixels_per_second = median > 0.0 ? row.pixels / median : INFINITY;
    if (codec::is_neural(file.method)) {
      const neural::ParamCount p = neural::param_count(file.decoder);
      row.params_w = p.weights;
      row.params_b = p.biases;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string throughput_csv(const std::vector<ThroughputRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "method,pixels,repetitions,median_seconds,pixels_per_second,params_W,params_B\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.pixels << ',' << r.repetitions << ',' << r.median_seconds << ','
        << r.pixels_per_second << ',' << r.params_w << ',' << r.params_b << '\n';
  }
  return out.str();
}

}  // namespace rti::study
