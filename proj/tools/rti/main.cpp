// rti: command-line front end for building, evaluating and exporting
// relightable images.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rti/classical.hpp"
#include "rti/codec.hpp"
#include "rti/error.hpp"
#include "rti/metrics.hpp"
#include "rti/mlic.hpp"
#include "rti/neural.hpp"
#include "rti/study.hpp"
#include "rti/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for flag combinations CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string config;
};

struct DataFlags {
  std::string mlic;
  std::string lp;
  std::vector<double> test_elevations{20, 40, 60, 80};
  double tolerance = rti::kDefaultElevationToleranceDeg;
};

struct TrainFlags {
  int epochs = 150;
  int patience = 15;
  double lr = 0.01;
  double lr_decay = 0.5;
  int decay_patience = 3;
  int batch = 64;
  double val_fraction = 0.1;
  double fraction = 1.0;
};

void add_data_flags(CLI::App* app, DataFlags& f, bool required) {
  auto* opt = app->add_option("--mlic", f.mlic, "Directory holding the image collection");
  if (required) opt->required();
  app->add_option("--lp", f.lp, "Light-position file (default: the only .lp in --mlic)");
  app->add_option("--test-elevations", f.test_elevations, "Elevations (deg) held out for testing")->delimiter(',');
  app->add_option("--tolerance", f.tolerance, "Elevation matching tolerance in degrees");
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--epochs", f.epochs, "Maximum training epochs")->check(CLI::PositiveNumber);
  app->add_option("--patience", f.patience, "Early-stopping patience in epochs")->check(CLI::NonNegativeNumber);
  app->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  app->add_option("--lr-decay", f.lr_decay, "Learning-rate factor applied on a plateau (1 keeps it fixed)")
      ->check(CLI::Range(1e-6, 1.0));
  app->add_option("--decay-patience", f.decay_patience, "Stale epochs before a learning-rate decay")
      ->check(CLI::PositiveNumber);
  app->add_option("--batch", f.batch, "Mini-batch size in pixels")->check(CLI::PositiveNumber);
  app->add_option("--val-fraction", f.val_fraction, "Held-out validation fraction")->check(CLI::Range(0.0, 0.99));
  app->add_option("--fraction", f.fraction, "Fraction of pixels used for training")->check(CLI::Range(0.0, 1.0));
}

rti::nn::TrainConfig train_config(const TrainFlags& f, std::uint64_t seed) {
  rti::nn::TrainConfig cfg;
  cfg.max_epochs = f.epochs;
  cfg.patience = f.patience;
  cfg.lr = f.lr;
  cfg.lr_decay = f.lr_decay;
  cfg.decay_patience = f.decay_patience;
  cfg.batch_size = f.batch;
  cfg.val_fraction = f.val_fraction;
  cfg.seed = seed;
  return cfg;
}

fs::path find_lp(const fs::path& dir, const std::string& lp) {
  if (!lp.empty()) return fs::path(lp).is_absolute() || fs::exists(lp) ? fs::path(lp) : dir / lp;
  std::optional<fs::path> found;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".lp") continue;
      if (found) throw UsageError("--lp: several .lp files in " + dir.string());
      found = entry.path();
    }
  }
  if (!found) throw rti::Error(rti::ErrorCode::MissingFile, "no .lp file in " + dir.string());
  return *found;
}

struct LoadedData {
  rti::Mlic mlic;
  rti::SplitSpec split;
  fs::path lp;
};

LoadedData load_data(const DataFlags& f) {
  LoadedData d;
  d.lp = find_lp(f.mlic, f.lp);
  d.mlic = rti::load_mlic(f.mlic, d.lp);
  d.split = rti::split_by_elevation(d.mlic, f.test_elevations, f.tolerance);
  spdlog::info("loaded {} frames ({}x{}), {} train / {} test", d.mlic.light_count(), d.mlic.width, d.mlic.height,
               d.split.train_indices.size(), d.split.test_indices.size());
  return d;
}

rti::TrainingTable training_rows(const LoadedData& d, double fraction, std::uint64_t seed) {
  const auto sample = rti::sample_pixels(d.mlic, fraction, rti::UniformRandom{seed});
  return rti::gather_training_rows(d.mlic, sample, d.split);
}

rti::metrics::QualityReport score_neural(const rti::neural::NeuralRtiModel& model, const LoadedData& d) {
  if (d.split.test_indices.empty()) return {};
  const auto latent = rti::neural::encode_latents(model, d.mlic, d.split);
  return rti::metrics::evaluate(d.mlic, d.split.test_indices, [&](const rti::LightDirection& l) {
    return rti::neural::relight_image(latent, model.decoder, l);
  });
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw rti::Error(rti::ErrorCode::IoError, "failed writing " + path.string());
}

// Numbers and booleans keep their JSON type in the record; everything else stays text.
json typed(const std::string& text) {
  if (text.empty()) return text;
  try {
    json v = json::parse(text);
    if (v.is_number() || v.is_boolean()) return v;
  } catch (const json::parse_error&) {
  }
  return text;
}

json typed(const std::vector<std::string>& texts) {
  json out = json::array();
  for (const auto& t : texts) out.push_back(typed(t));
  return out;
}

// Run record: every resolved option of the subcommand plus outcomes.
class RunRecord {
 public:
  RunRecord(const CLI::App& app, const CLI::App& sub, const Globals& g) {
    j_["subcommand"] = sub.get_name();
    j_["seed"] = g.seed;
    json cfg = json::object();
    for (const CLI::App* a : {&app, &sub}) {
      for (const CLI::Option* opt : a->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        const auto& res = opt->results();
        if (opt->count() > 0) {
          cfg[name] = res.size() == 1 && opt->get_expected_max() <= 1 ? typed(res.front()) : typed(res);
        } else if (opt->get_expected_max() > 1) {
          std::string list = opt->get_default_str();  // "[a,b,c]"
          if (list.size() >= 2 && list.front() == '[') list = list.substr(1, list.size() - 2);
          cfg[name] = list.empty() ? json::array() : typed(CLI::detail::split(list, ','));
        } else {
          cfg[name] = typed(opt->get_default_str());
        }
      }
    }
    j_["config"] = cfg;
    j_["timings"] = json::object();
  }

  json& operator[](const char* key) { return j_[key]; }

  void write(const fs::path& dir) const { write_text(dir / "run.json", j_.dump(2) + "\n"); }

 private:
  json j_;
};

json quality_json(const rti::metrics::QualityReport& r) { return json::parse(r.to_json()); }

// ---------------------------------------------------------------- subcommands

struct SynthFlags {
  std::string scene = "mixed";
  int size = 128;
};

void run_synth(const SynthFlags& f, const Globals& g, RunRecord& rec) {
  const auto scene = rti::synth::make_scene(rti::synth::parse_scene_kind(f.scene), f.size, g.seed);
  const rti::Mlic mlic = rti::synth::render_mlic(scene, rti::synth::benchmark_lights());
  rti::save_mlic(mlic, g.out, "lights.lp");
  rec["frames"] = mlic.light_count();
  spdlog::info("wrote {} frames to {}", mlic.light_count(), g.out);
}

struct TeacherFlags {
  DataFlags data;
  TrainFlags train;
  std::string encoder = "improved";
  int width = 50;
};

void run_train_teacher(const TeacherFlags& f, const Globals& g, RunRecord& rec) {
  const LoadedData d = load_data(f.data);
  const auto rows = training_rows(d, f.train.fraction, g.seed);
  const auto enc = f.encoder == "original" ? rti::neural::EncoderSpec::original() : rti::neural::EncoderSpec::improved();
  auto model = rti::neural::build_model(enc, {2, f.width, 2}, static_cast<int>(d.split.train_indices.size()), g.seed);
  const auto history = rti::neural::train_teacher(model, rows, train_config(f.train, g.seed));

  rti::codec::Checkpoint ck{model, rti::codec::Method::NeuralRti, d.split.train_indices, d.split.test_indices,
                            fs::absolute(f.data.mlic).string(), fs::absolute(d.lp).string()};
  fs::create_directories(g.out);
  rti::codec::write_checkpoint(fs::path(g.out) / "teacher.json", ck);
  const auto quant = rti::codec::quantize(rti::neural::encode_latents(model, d.mlic, d.split));
  rti::codec::write_relightable(fs::path(g.out) / "relightable",
                                rti::codec::make_neural_file(model.decoder, quant, ck.method,
                                                             static_cast<int>(d.split.train_indices.size())));
  const auto report = score_neural(model, d);
  write_text(fs::path(g.out) / "quality.csv", report.to_csv());
  rec["timings"]["teacher_train_s"] = history.seconds;
  rec["epochs_run"] = history.epochs_run;
  rec["quality"] = {{"neuralrti", quality_json(report)}};
  spdlog::info("teacher: {} epochs, {:.1f} s, test PSNR {:.2f} dB", history.epochs_run, history.seconds,
               report.mean_psnr_db);
}

struct DistillFlags {
  std::string teacher;
  DataFlags data;
  TrainFlags train;
  int width = 20;
  double alpha = rti::neural::kDefaultAlpha;
  bool copy_encoder = false;
};

LoadedData data_for_checkpoint(const rti::codec::Checkpoint& ck, const DataFlags& f) {
  if (!f.mlic.empty()) return load_data(f);
  if (ck.mlic_dir.empty()) throw UsageError("--mlic: checkpoint does not record its image collection");
  LoadedData d;
  d.lp = ck.lp_file;
  d.mlic = rti::load_mlic(ck.mlic_dir, ck.lp_file);
  d.split = rti::split_by_indices(d.mlic, ck.train_indices, ck.test_indices);
  return d;
}

void run_distill(const DistillFlags& f, const Globals& g, RunRecord& rec) {
  const auto teacher_ck = rti::codec::read_checkpoint(f.teacher);
  const LoadedData d = data_for_checkpoint(teacher_ck, f.data);
  const auto rows = training_rows(d, f.train.fraction, g.seed);

  rti::neural::DistillConfig cfg;
  cfg.alpha = f.alpha;
  cfg.teacher = &teacher_ck.model;
  cfg.student_decoder = {2, f.width, 2};
  cfg.copy_encoder = f.copy_encoder;
  cfg.seed = g.seed;
  const auto result = rti::neural::distill_student(cfg, rows, train_config(f.train, g.seed));

  rti::codec::Checkpoint ck{result.student, rti::codec::Method::DiskNeuralRti, d.split.train_indices,
                            d.split.test_indices, teacher_ck.mlic_dir, teacher_ck.lp_file};
  if (!f.data.mlic.empty()) {
    ck.mlic_dir = fs::absolute(f.data.mlic).string();
    ck.lp_file = fs::absolute(d.lp).string();
  }
  fs::create_directories(g.out);
  rti::codec::write_checkpoint(fs::path(g.out) / "student.json", ck);
  const auto quant = rti::codec::quantize(rti::neural::encode_latents(result.student, d.mlic, d.split));
  rti::codec::write_relightable(fs::path(g.out) / "relightable",
                                rti::codec::make_neural_file(result.student.decoder, quant, ck.method,
                                                             static_cast<int>(d.split.train_indices.size())));
  const auto params = rti::neural::param_count(result.student.decoder);
  const auto report = score_neural(result.student, d);
  write_text(fs::path(g.out) / "quality.csv", report.to_csv());
  rec["timings"]["student_train_s"] = result.history.seconds;
  rec["epochs_run"] = result.history.epochs_run;
  rec["decoder_params"] = {{"W", params.weights}, {"B", params.biases}, {"total", params.total()}};
  rec["quality"] = {{"disk-neuralrti", quality_json(report)}};
  spdlog::info("student: {} decoder parameters ({} W + {} B), test PSNR {:.2f} dB", params.total(), params.weights,
               params.biases, report.mean_psnr_db);
}

struct FitFlags {
  DataFlags data;
  int order = rti::classical::kMaxHshOrder;
};

void run_fit(const FitFlags& f, bool hsh, const Globals& g, RunRecord& rec) {
  const LoadedData d = load_data(f.data);
  const int n_train = static_cast<int>(d.split.train_indices.size());
  const auto start = std::chrono::steady_clock::now();
  rti::codec::RelightableFile file;
  rti::metrics::Relighter relighter;
  std::optional<rti::classical::PtmMap> ptm;
  std::optional<rti::classical::HshMap> hsh_map;
  if (hsh) {
    hsh_map = rti::classical::fit_hsh(d.mlic, d.split, f.order);
    relighter = [&](const rti::LightDirection& l) { return rti::classical::relight_image(*hsh_map, l); };
  } else {
    ptm = rti::classical::fit_ptm(d.mlic, d.split);
    relighter = [&](const rti::LightDirection& l) { return rti::classical::relight_image(*ptm, l); };
  }
  const double fit_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  file = hsh ? rti::codec::make_hsh_file(*hsh_map, n_train) : rti::codec::make_ptm_file(*ptm, n_train);
  rti::codec::write_relightable(fs::path(g.out) / "relightable", file);

  rti::metrics::QualityReport report;
  if (!d.split.test_indices.empty()) report = rti::metrics::evaluate(d.mlic, d.split.test_indices, relighter);
  write_text(fs::path(g.out) / "quality.csv", report.to_csv());
  rec["timings"]["fit_s"] = fit_s;
  rec["quality"] = {{std::string(rti::codec::to_string(file.method)), quality_json(report)}};
  spdlog::info("{}: fitted in {:.2f} s, test PSNR {:.2f} dB", rti::codec::to_string(file.method), fit_s,
               report.mean_psnr_db);
}

struct RelightFlags {
  std::string file;
  std::string lp;
  std::optional<double> elevation;
  std::optional<double> azimuth;
  int scale = 1;
};

void run_relight(const RelightFlags& f, const Globals& g, RunRecord& rec) {
  const auto file = rti::codec::read_relightable(f.file);
  fs::create_directories(g.out);
  std::vector<rti::LpEntry> targets;
  if (!f.lp.empty()) {
    targets = rti::read_lp(f.lp);
  } else if (f.elevation && f.azimuth) {
    targets.push_back({"relit.png", rti::LightDirection::from_angles(*f.elevation, *f.azimuth)});
  } else {
    throw UsageError("--lp or both --elevation and --azimuth are required");
  }
  for (const auto& t : targets) {
    const auto img = rti::codec::cpu_relight_file(file, t.light, f.scale);
    rti::write_png(fs::path(g.out) / fs::path(t.filename).filename(), rti::to_bytes(img));
  }
  rec["images"] = targets.size();
  spdlog::info("wrote {} relit images to {}", targets.size(), g.out);
}

struct EvaluateFlags {
  std::string gt;
  std::string gt_lp;
  std::string pred;
  std::string file;
  std::vector<double> elevations;
  double tolerance = rti::kDefaultElevationToleranceDeg;
};

void run_evaluate(const EvaluateFlags& f, const Globals& g, RunRecord& rec) {
  if (f.pred.empty() == f.file.empty()) throw UsageError("--pred or --file: exactly one is required");
  const auto lp = find_lp(f.gt, f.gt_lp);
  const rti::Mlic gt = rti::load_mlic(f.gt, lp);
  std::vector<int> indices;
  if (f.elevations.empty()) {
    for (int i = 0; i < static_cast<int>(gt.light_count()); ++i) indices.push_back(i);
  } else {
    indices = rti::split_by_elevation(gt, f.elevations, f.tolerance).test_indices;
  }

  rti::metrics::QualityReport report;
  if (!f.file.empty()) {
    const auto file = rti::codec::read_relightable(f.file);
    report = rti::metrics::evaluate(gt, indices, [&](const rti::LightDirection& l) {
      return rti::codec::cpu_relight_file(file, l);
    });
  } else {
    // Pair predicted frames with ground truth by filename.
    std::size_t cursor = 0;
    report = rti::metrics::evaluate(gt, indices, [&](const rti::LightDirection&) {
      const auto name = fs::path(gt.filenames.at(static_cast<std::size_t>(indices.at(cursor++)))).filename();
      const auto path = fs::path(f.pred) / name;
      if (!fs::exists(path)) throw rti::Error(rti::ErrorCode::MissingFile, path.string());
      return rti::to_image(rti::read_png(path));
    });
  }
  write_text(fs::path(g.out) / "quality.csv", report.to_csv());
  write_text(fs::path(g.out) / "quality.json", report.to_json() + "\n");
  rec["quality"] = {{"evaluated", quality_json(report)}};
  std::cout << report.to_csv();
}

struct SpeedFlags {
  std::vector<std::string> files;
  std::vector<std::size_t> pixels{1000000};
  int reps = 5;
};

void run_speed(const SpeedFlags& f, const Globals& g, RunRecord& rec) {
  std::vector<rti::study::ThroughputRow> rows;
  for (const auto& path : f.files) {
    const auto file = rti::codec::read_relightable(path);
    const auto measured = rti::study::measure_throughput(file, f.pixels, f.reps);
    rows.insert(rows.end(), measured.begin(), measured.end());
  }
  const std::string csv = rti::study::throughput_csv(rows);
  write_text(fs::path(g.out) / "throughput.csv", csv);
  json tp = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    tp.push_back({{"file", f.files[i / f.pixels.size()]},
                  {"method", rows[i].method},
                  {"pixels", rows[i].pixels},
                  {"pixels_per_second", rows[i].pixels_per_second},
                  {"params_W", rows[i].params_w},
                  {"params_B", rows[i].params_b}});
  }
  rec["throughput"] = tp;
  std::cout << csv;
}

struct StudyFlags {
  DataFlags data;
  TrainFlags train;
  std::vector<double> fractions{1.0 / 64, 1.0 / 16, 1.0 / 4, 1.0};
  int teacher_width = 50;
  int student_width = 20;
  double alpha = rti::neural::kDefaultAlpha;
};

void run_study(const StudyFlags& f, const Globals& g, RunRecord& rec) {
  const LoadedData d = load_data(f.data);
  rti::study::PipelineConfig cfg;
  cfg.teacher_decoder = {2, f.teacher_width, 2};
  cfg.student_decoder = {2, f.student_width, 2};
  cfg.alpha = f.alpha;
  cfg.train = train_config(f.train, g.seed);
  cfg.seed = g.seed;
  const auto table = rti::study::study_subsample(d.mlic, d.split, f.fractions, cfg);
  write_text(fs::path(g.out) / "subsample.csv", table.to_csv());
  write_text(fs::path(g.out) / "subsample.json", table.to_json() + "\n");
  rec["subsample"] = json::parse(table.to_json());
  std::cout << table.to_csv();
}

struct ExportFlags {
  std::string checkpoint;
  DataFlags data;
};

void run_export(const ExportFlags& f, const Globals& g, RunRecord& rec) {
  const auto ck = rti::codec::read_checkpoint(f.checkpoint);
  const LoadedData d = data_for_checkpoint(ck, f.data);
  const auto quant = rti::codec::quantize(rti::neural::encode_latents(ck.model, d.mlic, d.split));
  const auto file = rti::codec::make_neural_file(ck.model.decoder, quant, ck.method,
                                                 static_cast<int>(d.split.train_indices.size()));
  rti::codec::write_relightable(g.out, file);
  rti::codec::read_relightable(g.out);
  rec["planes"] = file.plane_count();
  spdlog::info("exported {} ({} planes) to {}", rti::codec::to_string(file.method), file.plane_count(), g.out);
}

// Fills options that were not given on the command line from a JSON object,
// or from the "config" member of a previous run.json.
void apply_config(CLI::App& app, CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  if (!j.is_object()) throw UsageError("--config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = nullptr;
    for (CLI::App* a : {&sub, &app}) {
      try {
        opt = a->get_option("--" + key);
        break;
      } catch (const CLI::OptionNotFound&) {
      }
    }
    if (opt == nullptr) throw UsageError("--config: unknown key '" + key + "'");
    if (opt->count() > 0 || key == "config") continue;
    auto add = [&](const json& v) {
      const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
      if (!s.empty()) opt->add_result(s);
    };
    if (value.is_array()) {
      for (const auto& v : value) add(v);
    } else {
      add(value);
    }
    if (opt->count() > 0) opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relightable image toolkit: neural and classical RTI"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed for sampling, initialization and shuffling");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--config", g.config, "JSON file with option defaults (or a previous run.json)");

  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic image collection");
  synth_cmd->add_option("--scene", synth.scene, "flat, bumps or mixed")
      ->check(CLI::IsMember({"flat", "bumps", "mixed"}));
  synth_cmd->add_option("--size", synth.size, "Image side in pixels")->check(CLI::Range(11, 4096));

  TeacherFlags teacher;
  auto* teacher_cmd = app.add_subcommand("train-teacher", "Train a NeuralRTI autoencoder");
  add_data_flags(teacher_cmd, teacher.data, true);
  add_train_flags(teacher_cmd, teacher.train);
  teacher_cmd->add_option("--encoder", teacher.encoder, "original or improved")
      ->check(CLI::IsMember({"original", "improved"}));
  teacher_cmd->add_option("--width", teacher.width, "Decoder hidden width")->check(CLI::PositiveNumber);

  DistillFlags distill;
  auto* distill_cmd = app.add_subcommand("distill", "Distill a teacher into a small student");
  distill_cmd->add_option("--teacher", distill.teacher, "Teacher checkpoint")->required();
  add_data_flags(distill_cmd, distill.data, false);
  add_train_flags(distill_cmd, distill.train);
  distill_cmd->add_option("--width", distill.width, "Student decoder hidden width")->check(CLI::PositiveNumber);
  distill_cmd->add_option("--alpha", distill.alpha, "Ground-truth weight of the loss")->check(CLI::Range(0.0, 1.0));
  distill_cmd->add_flag("--copy-encoder", distill.copy_encoder, "Freeze a copy of the teacher encoder");

  FitFlags ptm;
  auto* ptm_cmd = app.add_subcommand("fit-ptm", "Fit an LRGB polynomial texture map");
  add_data_flags(ptm_cmd, ptm.data, true);

  FitFlags hsh;
  auto* hsh_cmd = app.add_subcommand("fit-hsh", "Fit hemispherical harmonics");
  add_data_flags(hsh_cmd, hsh.data, true);
  hsh_cmd->add_option("--order", hsh.order, "HSH order")->check(CLI::Range(1, rti::classical::kMaxHshOrder));

  RelightFlags relight;
  auto* relight_cmd = app.add_subcommand("relight", "Relight a relightable file");
  relight_cmd->add_option("--file", relight.file, "Relightable file directory")->required();
  relight_cmd->add_option("--lp", relight.lp, "Relight every light in this .lp file");
  relight_cmd->add_option("--elevation", relight.elevation, "Light elevation in degrees");
  relight_cmd->add_option("--azimuth", relight.azimuth, "Light azimuth in degrees");
  relight_cmd->add_option("--scale", relight.scale, "Decode every n-th pixel")->check(CLI::PositiveNumber);

  EvaluateFlags evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score relit images against ground truth");
  evaluate_cmd->add_option("--gt", evaluate.gt, "Ground-truth collection directory")->required();
  evaluate_cmd->add_option("--gt-lp", evaluate.gt_lp, "Ground-truth .lp file");
  evaluate_cmd->add_option("--pred", evaluate.pred, "Directory of predicted frames (matched by filename)");
  evaluate_cmd->add_option("--file", evaluate.file, "Relightable file to relight at the ground-truth lights");
  evaluate_cmd->add_option("--test-elevations", evaluate.elevations, "Only score these elevations")->delimiter(',');
  evaluate_cmd->add_option("--tolerance", evaluate.tolerance, "Elevation matching tolerance in degrees");

  SpeedFlags speed;
  auto* speed_cmd = app.add_subcommand("speed", "Measure CPU relighting throughput");
  speed_cmd->add_option("--file", speed.files, "Relightable file directories")->required();
  speed_cmd->add_option("--pixels", speed.pixels, "Pixel counts")->delimiter(',')->check(CLI::PositiveNumber);
  speed_cmd->add_option("--reps", speed.reps, "Repetitions per measurement")->check(CLI::PositiveNumber);

  StudyFlags study;
  auto* study_cmd = app.add_subcommand("study-subsample", "Quality and training time versus pixel fraction");
  add_data_flags(study_cmd, study.data, true);
  add_train_flags(study_cmd, study.train);
  study_cmd->add_option("--fractions", study.fractions, "Pixel fractions")->delimiter(',');
  study_cmd->add_option("--teacher-width", study.teacher_width, "Teacher decoder width");
  study_cmd->add_option("--student-width", study.student_width, "Student decoder width");
  study_cmd->add_option("--alpha", study.alpha, "Ground-truth weight of the loss")->check(CLI::Range(0.0, 1.0));

  ExportFlags exp;
  auto* export_cmd = app.add_subcommand("export", "Export a neural checkpoint as a relightable file");
  export_cmd->add_option("--checkpoint", exp.checkpoint, "Model checkpoint")->required();
  add_data_flags(export_cmd, exp.data, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!g.config.empty()) apply_config(app, *sub, g.config);
    RunRecord rec(app, *sub, g);
    const std::string name = sub->get_name();
    if (name == "synth") run_synth(synth, g, rec);
    else if (name == "train-teacher") run_train_teacher(teacher, g, rec);
    else if (name == "distill") run_distill(distill, g, rec);
    else if (name == "fit-ptm") run_fit(ptm, false, g, rec);
    else if (name == "fit-hsh") run_fit(hsh, true, g, rec);
    else if (name == "relight") run_relight(relight, g, rec);
    else if (name == "evaluate") run_evaluate(evaluate, g, rec);
    else if (name == "speed") run_speed(speed, g, rec);
    else if (name == "study-subsample") run_study(study, g, rec);
    else if (name == "export") run_export(exp, g, rec);
    rec.write(g.out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const rti::Error& e) {
    std::cerr << "error [" << rti::to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
