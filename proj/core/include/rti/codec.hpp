#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rti/classical.hpp"
#include "rti/image.hpp"
#include "rti/neural.hpp"
#include "rti/nn.hpp"

namespace rti::codec {

inline constexpr int kFormatVersion = 1;

// Per-feature affine byte mapping: value = offset + byte * scale.
struct QuantSpec {
  std::vector<double> offsets;
  std::vector<double> scales;
};

struct QuantizedLatent {
  int width = 0;
  int height = 0;
  int latent_dim = 0;
  QuantSpec quant;
  std::vector<ByteImage> planes;  // ceil(K/3) RGB planes, features packed 3 per plane
};

// offset = min, scale = (max - min) / 255 (1 when max == min), byte = round((v - offset) / scale).
QuantizedLatent quantize(const neural::LatentImage& latent);
neural::LatentImage dequantize(const QuantizedLatent& q);

enum class Method { DiskNeuralRti, NeuralRti, PtmLrgb, Hsh3 };
std::string_view to_string(Method m);
Method parse_method(std::string_view tag);  // SchemaViolation on unknown tags
inline bool is_neural(Method m) { return m == Method::DiskNeuralRti || m == Method::NeuralRti; }

// On disk: info.json plus plane_<i>.png (neural methods) or coefficients.bin
// (classical methods, little-endian float32, pixel-major).
struct RelightableFile {
  int format_version = kFormatVersion;
  Method method = Method::DiskNeuralRti;
  int width = 0;
  int height = 0;
  int latent_dim = 0;  // K
  int lights_trained = 0;
  nn::Network decoder;
  QuantSpec quant;
  std::vector<ByteImage> planes;
  std::vector<float> coefficients;  // classical methods only, K per pixel

  std::size_t plane_count() const { return planes.size(); }
};

RelightableFile make_neural_file(const nn::Network& decoder, const QuantizedLatent& latent, Method method,
                                 int lights_trained);
RelightableFile make_ptm_file(const classical::PtmMap& map, int lights_trained);
RelightableFile make_hsh_file(const classical::HshMap& map, int lights_trained);

void write_relightable(const std::filesystem::path& dir, const RelightableFile& file);
// Validates every header key and cross-checks counts and plane sizes.
RelightableFile read_relightable(const std::filesystem::path& dir);

// Header JSON as written to info.json (exposed for tooling and tests).
std::string header_json(const RelightableFile& file);
RelightableFile parse_header(std::string_view json_text);

// Reference CPU decode. With scale s > 1 only every s-th pixel in each axis is
// decoded and the result is upscaled with nearest-neighbour.
Image cpu_relight_file(const RelightableFile& file, const LightDirection& light, int scale = 1);
// Same, decoding into `out`; its storage is reused when the size already matches.
void cpu_relight_file(const RelightableFile& file, const LightDirection& light, Image& out, int scale = 1);

// Model checkpoint (encoder + decoder + split) for the command-line tools.
struct Checkpoint {
  neural::NeuralRtiModel model;
  Method method = Method::NeuralRti;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
  std::string mlic_dir;  // training collection, recorded for later tool stages
  std::string lp_file;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace rti::codec
