#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "rti/image.hpp"

namespace rti {

// Unit vector from the surface toward the light, upper hemisphere only.
struct LightDirection {
  double lx = 0.0;
  double ly = 0.0;
  double lz = 1.0;

  // Normalizes (x, y, z); throws NonHemisphericalLight for z < 0 and
  // InvalidArgument for a zero vector.
  static LightDirection from_vector(double x, double y, double z);
  static LightDirection from_angles(double elevation_deg, double azimuth_deg);
  // Completes lz from a point on the projected unit disc (clamped to the disc).
  static LightDirection from_disc(double x, double y);

  double elevation_deg() const;
  double azimuth_deg() const;
};

// A multi-light image collection: L frames of one fixed view, each lit from
// a known direction.
struct Mlic {
  int width = 0;
  int height = 0;
  std::vector<Image> images;
  std::vector<LightDirection> lights;
  std::vector<std::string> filenames;  // optional, aligned with lights

  std::size_t light_count() const noexcept { return lights.size(); }
  // Throws if frame/light counts disagree, sizes differ or values leave [0,1].
  void validate() const;
  Mlic subset(const std::vector<int>& light_indices) const;
};

struct LpEntry {
  std::string filename;
  LightDirection light;
};

// .lp format: first line is the entry count, then "filename lx ly lz" per line.
std::vector<LpEntry> read_lp(const std::filesystem::path& lp_file);
void write_lp(const std::filesystem::path& lp_file, const std::vector<LpEntry>& entries);

// Loads every frame listed in `lp_file`, resolving names against `image_dir`.
Mlic load_mlic(const std::filesystem::path& image_dir, const std::filesystem::path& lp_file);
// Writes frames as PNG plus an .lp file named `lp_name` inside `dir`.
void save_mlic(const Mlic& mlic, const std::filesystem::path& dir, const std::string& lp_name);

struct SplitSpec {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

inline constexpr double kDefaultElevationToleranceDeg = 5.0;

SplitSpec split_by_elevation(const Mlic& mlic, const std::vector<double>& test_elevations_deg,
                             double tolerance_deg = kDefaultElevationToleranceDeg);
// Explicit split; validates bounds and disjointness.
SplitSpec split_by_indices(const Mlic& mlic, std::vector<int> train, std::vector<int> test);

struct PixelIndex {
  int row = 0;
  int col = 0;
  bool operator==(const PixelIndex&) const = default;
};

struct PixelSampleSet {
  std::vector<PixelIndex> indices;
  double fraction = 1.0;
};

struct UniformRandom {
  std::uint64_t seed = 0;
};
struct RegularGrid {
  int step = 1;
};
using SamplingStrategy = std::variant<UniformRandom, RegularGrid>;

// Uniform draws are without replacement and returned in row-major order.
// A regular grid takes one pixel (the tile centre) per step x step tile.
PixelSampleSet sample_pixels(int width, int height, double fraction, const SamplingStrategy& strategy);
PixelSampleSet sample_pixels(const Mlic& mlic, double fraction, const SamplingStrategy& strategy);
PixelSampleSet all_pixels(int width, int height);

// Per-pixel training rows. Column p of `colors` holds the sampled pixel's
// RGB under every train light, interleaved by light: R0 G0 B0 R1 G1 B1 ...
// Column j of `lights` holds (lx, ly) of train light j.
struct TrainingTable {
  Eigen::MatrixXd colors;  // 3L x P
  Eigen::MatrixXd lights;  // 2 x L
  std::vector<PixelIndex> pixels;

  Eigen::Index rows() const noexcept { return colors.cols(); }
  Eigen::Index light_count() const noexcept { return lights.cols(); }
};

TrainingTable gather_training_rows(const Mlic& mlic, const PixelSampleSet& samples,
                                   const SplitSpec& split);

}  // namespace rti
