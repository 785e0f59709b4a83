#include "rti/mlic.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "rti/error.hpp"

namespace rti {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kUnitTolerance = 1e-6;

}  // namespace

LightDirection LightDirection::from_vector(double x, double y, double z) {
  const double norm = std::sqrt(x * x + y * y + z * z);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::InvalidArgument, "light vector has zero or non-finite length");
  }
  if (z < 0.0) {
    throw Error(ErrorCode::NonHemisphericalLight, "light below the horizon (lz < 0)");
  }
  return {x / norm, y / norm, z / norm};
}

LightDirection LightDirection::from_angles(double elevation_deg, double azimuth_deg) {
  const double el = elevation_deg / kRadToDeg;
  const double az = azimuth_deg / kRadToDeg;
  const double c = std::cos(el);
  return from_vector(c * std::cos(az), c * std::sin(az), std::max(0.0, std::sin(el)));
}

LightDirection LightDirection::from_disc(double x, double y) {
  const double r2 = x * x + y * y;
  if (r2 >= 1.0) {
    const double r = std::sqrt(r2);
    return {x / r, y / r, 0.0};
  }
  return {x, y, std::sqrt(1.0 - r2)};
}

double LightDirection::elevation_deg() const {
  return std::asin(std::clamp(lz, -1.0, 1.0)) * kRadToDeg;
}

double LightDirection::azimuth_deg() const { return std::atan2(ly, lx) * kRadToDeg; }

void Mlic::validate() const {
  if (images.empty() || images.size() != lights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "frame count " + std::to_string(images.size()) +
                                                  " vs light count " + std::to_string(lights.size()));
  }
  if (!filenames.empty() && filenames.size() != lights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "filename list not aligned with lights");
  }
  for (const Image& img : images) {
    if (img.width() != width || img.height() != height) {
      throw Error(ErrorCode::DimensionMismatch, "frame size differs from collection size");
    }
    for (double v : img.data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "channel value outside [0,1]");
      }
    }
  }
}

Mlic Mlic::subset(const std::vector<int>& light_indices) const {
  Mlic out;
  out.width = width;
  out.height = height;
  for (int i : light_indices) {
    out.images.push_back(images.at(i));
    out.lights.push_back(lights.at(i));
    if (!filenames.empty()) out.filenames.push_back(filenames.at(i));
  }
  return out;
}

std::vector<LpEntry> read_lp(const std::filesystem::path& lp_file) {
  std::ifstream in(lp_file);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + lp_file.string());

  std::string line;
  int line_no = 0;
  long count = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (!(ss >> count) || count < 1) {
      throw Error(ErrorCode::MalformedLpLine, "line " + std::to_string(line_no) + ": expected entry count");
    }
    break;
  }
  if (count < 1) throw Error(ErrorCode::MalformedLpLine, "line 1: missing entry count");

  std::vector<LpEntry> entries;
  while (static_cast<long>(entries.size()) < count && std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    LpEntry e;
    double x = 0, y = 0, z = 0;
    std::string trailing;
    if (!(ss >> e.filename >> x >> y >> z) || (ss >> trailing)) {
      throw Error(ErrorCode::MalformedLpLine, "line " + std::to_string(line_no) + ": expected 'filename lx ly lz'");
    }
    if (z < 0.0) {
      throw Error(ErrorCode::NonHemisphericalLight, "line " + std::to_string(line_no) + ": lz < 0");
    }
    const double norm = std::sqrt(x * x + y * y + z * z);
    if (std::abs(norm - 1.0) > kUnitTolerance) {
      spdlog::info("lp line {}: renormalizing light of length {:.6f}", line_no, norm);
    }
    try {
      e.light = LightDirection::from_vector(x, y, z);
    } catch (const Error&) {
      throw Error(ErrorCode::MalformedLpLine, "line " + std::to_string(line_no) + ": zero-length light");
    }
    entries.push_back(std::move(e));
  }
  if (static_cast<long>(entries.size()) != count) {
    throw Error(ErrorCode::MalformedLpLine, "line " + std::to_string(line_no + 1) + ": expected " +
                                                std::to_string(count) + " entries, found " +
                                                std::to_string(entries.size()));
  }
  return entries;
}

void write_lp(const std::filesystem::path& lp_file, const std::vector<LpEntry>& entries) {
  std::ofstream out(lp_file);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + lp_file.string());
  out << entries.size() << '\n' << std::fixed << std::setprecision(6);
  for (const LpEntry& e : entries) {
    out << e.filename << ' ' << e.light.lx << ' ' << e.light.ly << ' ' << e.light.lz << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + lp_file.string());
}

Mlic load_mlic(const std::filesystem::path& image_dir, const std::filesystem::path& lp_file) {
  const std::vector<LpEntry> entries = read_lp(lp_file);
  Mlic mlic;
  for (const LpEntry& e : entries) {
    const std::filesystem::path frame_path = image_dir / e.filename;
    if (!std::filesystem::exists(frame_path)) {
      throw Error(ErrorCode::MissingFile, frame_path.string());
    }
    Image frame = to_image(read_png(frame_path));
    if (mlic.images.empty()) {
      mlic.width = frame.width();
      mlic.height = frame.height();
    } else if (frame.width() != mlic.width || frame.height() != mlic.height) {
      throw Error(ErrorCode::DimensionMismatch, e.filename + " is " + std::to_string(frame.width()) + "x" +
                                                    std::to_string(frame.height()) + ", expected " +
                                                    std::to_string(mlic.width) + "x" +
                                                    std::to_string(mlic.height));
    }
    mlic.images.push_back(std::move(frame));
    mlic.lights.push_back(e.light);
    mlic.filenames.push_back(e.filename);
  }
  return mlic;
}

void save_mlic(const Mlic& mlic, const std::filesystem::path& dir, const std::string& lp_name) {
  std::filesystem::create_directories(dir);
  std::vector<LpEntry> entries;
  for (std::size_t i = 0; i < mlic.images.size(); ++i) {
    std::ostringstream name;
    if (i < mlic.filenames.size()) {
      name << mlic.filenames[i];
    } else {
      name << "frame_" << std::setw(3) << std::setfill('0') << i << ".png";
    }
    write_png(dir / name.str(), to_bytes(mlic.images[i]));
    entries.push_back({name.str(), mlic.lights[i]});
  }
  write_lp(dir / lp_name, entries);
}

SplitSpec split_by_elevation(const Mlic& mlic, const std::vector<double>& test_elevations_deg,
                             double tolerance_deg) {
  if (!(tolerance_deg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "elevation tolerance must be positive");
  }
  SplitSpec split;
  for (std::size_t i = 0; i < mlic.lights.size(); ++i) {
    const double el = mlic.lights[i].elevation_deg();
    const bool is_test = std::any_of(test_elevations_deg.begin(), test_elevations_deg.end(),
                                     [&](double t) { return std::abs(el - t) <= tolerance_deg; });
    (is_test ? split.test_indices : split.train_indices).push_back(static_cast<int>(i));
  }
  if (split.train_indices.empty()) {
    throw Error(ErrorCode::EmptyTrainSet, "every light matches a test elevation");
  }
  if (split.test_indices.empty()) {
    spdlog::warn("EmptyTestSet: no light within {} deg of the requested test elevations", tolerance_deg);
  }
  return split;
}

SplitSpec split_by_indices(const Mlic& mlic, std::vector<int> train, std::vector<int> test) {
  const int n = static_cast<int>(mlic.light_count());
  std::set<int> seen;
  for (const auto* list : {&train, &test}) {
    for (int i : *list) {
      if (i < 0 || i >= n) throw Error(ErrorCode::InvalidArgument, "light index out of range");
      if (!seen.insert(i).second) throw Error(ErrorCode::InvalidArgument, "train/test indices overlap");
    }
  }
  if (train.empty()) throw Error(ErrorCode::EmptyTrainSet, "explicit split has no train lights");
  return {std::move(train), std::move(test)};
}

PixelSampleSet all_pixels(int width, int height) {
  PixelSampleSet set;
  set.indices.reserve(static_cast<std::size_t>(width) * height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) set.indices.push_back({r, c});
  }
  set.fraction = 1.0;
  return set;
}

PixelSampleSet sample_pixels(int width, int height, double fraction, const SamplingStrategy& strategy) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::FractionOutOfRange, "fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
  const std::size_t total = static_cast<std::size_t>(width) * height;

  if (const auto* grid = std::get_if<RegularGrid>(&strategy)) {
    const int s = grid->step;
    if (s < 1) throw Error(ErrorCode::InvalidArgument, "grid step must be >= 1");
    PixelSampleSet set;
    for (int r0 = 0; r0 < height; r0 += s) {
      for (int c0 = 0; c0 < width; c0 += s) {
        set.indices.push_back({std::min(r0 + s / 2, height - 1), std::min(c0 + s / 2, width - 1)});
      }
    }
    set.fraction = total ? static_cast<double>(set.indices.size()) / total : 0.0;
    return set;
  }

  if (fraction == 1.0) return all_pixels(width, height);

  const auto& uniform = std::get<UniformRandom>(strategy);
  const auto wanted = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::mt19937_64 rng(uniform.seed);
  // Partial Fisher-Yates: the first `wanted` slots are a uniform draw without replacement.
  for (std::size_t i = 0; i < wanted; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(wanted);
  std::sort(order.begin(), order.end());

  PixelSampleSet set;
  set.fraction = fraction;
  set.indices.reserve(wanted);
  for (std::uint32_t flat : order) {
    set.indices.push_back({static_cast<int>(flat / width), static_cast<int>(flat % width)});
  }
  return set;
}

PixelSampleSet sample_pixels(const Mlic& mlic, double fraction, const SamplingStrategy& strategy) {
  return sample_pixels(mlic.width, mlic.height, fraction, strategy);
}

TrainingTable gather_training_rows(const Mlic& mlic, const PixelSampleSet& samples, const SplitSpec& split) {
  const auto n_lights = static_cast<Eigen::Index>(split.train_indices.size());
  const auto n_rows = static_cast<Eigen::Index>(samples.indices.size());
  TrainingTable table;
  table.colors.resize(3 * n_lights, n_rows);
  table.lights.resize(2, n_lights);
  table.pixels = samples.indices;
  for (Eigen::Index j = 0; j < n_lights; ++j) {
    const LightDirection& l = mlic.lights.at(split.train_indices[j]);
    table.lights(0, j) = l.lx;
    table.lights(1, j) = l.ly;
  }
  for (Eigen::Index p = 0; p < n_rows; ++p) {
    const PixelIndex px = samples.indices[p];
    if (px.row < 0 || px.row >= mlic.height || px.col < 0 || px.col >= mlic.width) {
      throw Error(ErrorCode::InvalidArgument, "sampled pixel outside the image");
    }
    for (Eigen::Index j = 0; j < n_lights; ++j) {
      const Image& frame = mlic.images[split.train_indices[j]];
      for (int c = 0; c < 3; ++c) table.colors(3 * j + c, p) = frame.at(px.row, px.col, c);
    }
  }
  return table;
}

}  // namespace rti
