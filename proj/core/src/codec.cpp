#include "rti/codec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rti/error.hpp"

namespace rti::codec {

using nlohmann::json;

namespace {

constexpr int kPtmCoefficients = 9;  // 6 luminance + 3 chroma
constexpr int kHshOrder = 3;
constexpr int kHshCoefficients = 3 * kHshOrder * kHshOrder;
constexpr const char* kHeaderName = "info.json";
constexpr const char* kCoefficientsName = "coefficients.bin";

std::string plane_name(std::size_t i) { return "plane_" + std::to_string(i) + ".png"; }

int plane_count_for(int k) { return (k + 2) / 3; }

}  // namespace

QuantizedLatent quantize(const neural::LatentImage& latent) {
  if (!latent.codes.allFinite()) throw Error(ErrorCode::NonFiniteLatent, "latent codes contain NaN or inf");
  const int k = latent.latent_dim;
  const Eigen::Index n = latent.codes.cols();
  if (latent.codes.rows() != k || n != static_cast<Eigen::Index>(latent.width) * latent.height) {
    throw Error(ErrorCode::ShapeMismatch, "latent codes do not match declared dimensions");
  }
  QuantizedLatent q;
  q.width = latent.width;
  q.height = latent.height;
  q.latent_dim = k;
  q.quant.offsets.resize(k);
  q.quant.scales.resize(k);
  for (int f = 0; f < k; ++f) {
    const double lo = n ? latent.codes.row(f).minCoeff() : 0.0;
    const double hi = n ? latent.codes.row(f).maxCoeff() : 0.0;
    q.quant.offsets[f] = lo;
    q.quant.scales[f] = hi > lo ? (hi - lo) / 255.0 : 1.0;
  }
  const int n_planes = plane_count_for(k);
  q.planes.assign(n_planes, ByteImage{latent.width, latent.height,
                                      std::vector<unsigned char>(static_cast<std::size_t>(n) * 3, 0)});
  for (Eigen::Index p = 0; p < n; ++p) {
    for (int f = 0; f < k; ++f) {
      const double v = std::round((latent.codes(f, p) - q.quant.offsets[f]) / q.quant.scales[f]);
      q.planes[f / 3].data[static_cast<std::size_t>(3 * p + f % 3)] =
          static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
    }
  }
  return q;
}

neural::LatentImage dequantize(const QuantizedLatent& q) {
  neural::LatentImage latent;
  latent.width = q.width;
  latent.height = q.height;
  latent.latent_dim = q.latent_dim;
  const Eigen::Index n = static_cast<Eigen::Index>(q.width) * q.height;
  latent.codes.resize(q.latent_dim, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (int f = 0; f < q.latent_dim; ++f) {
      latent.codes(f, p) = q.quant.offsets[f] + q.planes[f / 3].data[static_cast<std::size_t>(3 * p + f % 3)] *
                                                    q.quant.scales[f];
    }
  }
  return latent;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::DiskNeuralRti: return "disk-neuralrti";
    case Method::NeuralRti: return "neuralrti";
    case Method::PtmLrgb: return "ptm-lrgb";
    case Method::Hsh3: return "hsh-3";
  }
  return "unknown";
}

Method parse_method(std::string_view tag) {
  for (Method m : {Method::DiskNeuralRti, Method::NeuralRti, Method::PtmLrgb, Method::Hsh3}) {
    if (tag == to_string(m)) return m;
  }
  throw Error(ErrorCode::SchemaViolation, "method: unknown tag '" + std::string(tag) + "'");
}

RelightableFile make_neural_file(const nn::Network& decoder, const QuantizedLatent& latent, Method method,
                                 int lights_trained) {
  if (!is_neural(method)) throw Error(ErrorCode::InvalidArgument, "neural file needs a neural method tag");
  if (decoder.input_dim() != latent.latent_dim + 2 || decoder.output_dim() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "decoder does not consume K + 2 inputs");
  }
  RelightableFile f;
  f.method = method;
  f.width = latent.width;
  f.height = latent.height;
  f.latent_dim = latent.latent_dim;
  f.lights_trained = lights_trained;
  f.decoder = decoder;
  f.quant = latent.quant;
  f.planes = latent.planes;
  return f;
}

RelightableFile make_ptm_file(const classical::PtmMap& map, int lights_trained) {
  RelightableFile f;
  f.method = Method::PtmLrgb;
  f.width = map.width;
  f.height = map.height;
  f.latent_dim = kPtmCoefficients;
  f.lights_trained = lights_trained;
  f.coefficients.reserve(map.pixels.size() * kPtmCoefficients);
  for (const auto& px : map.pixels) {
    for (double v : px.poly) f.coefficients.push_back(static_cast<float>(v));
    for (double v : px.chroma) f.coefficients.push_back(static_cast<float>(v));
  }
  return f;
}

RelightableFile make_hsh_file(const classical::HshMap& map, int lights_trained) {
  if (map.order != kHshOrder) throw Error(ErrorCode::OrderUnsupported, "container stores order-3 HSH only");
  RelightableFile f;
  f.method = Method::Hsh3;
  f.width = map.width;
  f.height = map.height;
  f.latent_dim = kHshCoefficients;
  f.lights_trained = lights_trained;
  f.coefficients.reserve(static_cast<std::size_t>(map.coeffs.size()));
  for (Eigen::Index p = 0; p < map.coeffs.cols(); ++p) {
    for (Eigen::Index i = 0; i < map.coeffs.rows(); ++i) f.coefficients.push_back(static_cast<float>(map.coeffs(i, p)));
  }
  return f;
}

namespace {

json network_to_json(const nn::Network& net) {
  json j;
  j["layer_sizes"] = net.layer_sizes();
  j["activation"] = "elu";
  j["weights"] = json::array();
  j["biases"] = json::array();
  for (const auto& layer : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    j["weights"].push_back(w);
    j["biases"].push_back(std::vector<double>(layer.biases.data(), layer.biases.data() + layer.biases.size()));
  }
  return j;
}

const json& require(const json& obj, const char* key, const std::string& path = "") {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::SchemaViolation, "missing key '" + path + key + "'");
  }
  return obj.at(key);
}

template <typename T>
T require_as(const json& obj, const char* key, const std::string& path = "") {
  const json& v = require(obj, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::SchemaViolation, "key '" + path + key + "' has the wrong type");
  }
}

// Hidden layers ELU, output identity: the only topology the format carries.
nn::Network network_from_json(const json& j, const std::string& path) {
  const auto sizes = require_as<std::vector<int>>(j, "layer_sizes", path);
  const auto activation = require_as<std::string>(j, "activation", path);
  const auto weights = require_as<std::vector<std::vector<double>>>(j, "weights", path);
  const auto biases = require_as<std::vector<std::vector<double>>>(j, "biases", path);
  if (activation != "elu") throw Error(ErrorCode::SchemaViolation, path + "activation must be 'elu'");
  if (sizes.size() < 2) throw Error(ErrorCode::SchemaViolation, path + "layer_sizes needs at least two entries");
  for (int s : sizes) {
    if (s < 1) throw Error(ErrorCode::SchemaViolation, path + "layer_sizes must be positive");
  }
  const std::size_t n_layers = sizes.size() - 1;
  if (weights.size() != n_layers || biases.size() != n_layers) {
    throw Error(ErrorCode::CountMismatch, path + "expected " + std::to_string(n_layers) + " weight and bias arrays");
  }
  std::vector<nn::DenseLayer> layers;
  for (std::size_t i = 0; i < n_layers; ++i) {
    const int in = sizes[i], out = sizes[i + 1];
    if (weights[i].size() != static_cast<std::size_t>(in) * out) {
      throw Error(ErrorCode::CountMismatch, path + "layer " + std::to_string(i) + " has " +
                                                std::to_string(weights[i].size()) + " weights, expected " +
                                                std::to_string(in * out));
    }
    if (biases[i].size() != static_cast<std::size_t>(out)) {
      throw Error(ErrorCode::CountMismatch, path + "layer " + std::to_string(i) + " has " +
                                                std::to_string(biases[i].size()) + " biases, expected " +
                                                std::to_string(out));
    }
    nn::DenseLayer layer;
    layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        weights[i].data(), out, in);
    layer.biases = Eigen::Map<const Eigen::VectorXd>(biases[i].data(), out);
    layer.activation = i + 1 == n_layers ? nn::Activation::Identity : nn::Activation::Elu;
    layers.push_back(std::move(layer));
  }
  try {
    return nn::Network(std::move(layers));
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, path + e.what());
  }
}

json empty_decoder_json() {
  return {{"layer_sizes", json::array()},
          {"activation", "none"},
          {"weights", json::array()},
          {"biases", json::array()}};
}

}  // namespace

std::string header_json(const RelightableFile& file) {
  json j;
  j["format_version"] = file.format_version;
  j["method"] = std::string(to_string(file.method));
  j["width"] = file.width;
  j["height"] = file.height;
  j["K"] = file.latent_dim;
  j["lights_trained"] = file.lights_trained;
  if (is_neural(file.method)) {
    j["decoder"] = network_to_json(file.decoder);
    j["quant"] = {{"offsets", file.quant.offsets}, {"scales", file.quant.scales}};
  } else {
    j["decoder"] = empty_decoder_json();
    j["quant"] = {{"offsets", json::array()}, {"scales", json::array()}};
    j["coefficients"] = kCoefficientsName;
  }
  return j.dump(1) + "\n";
}

RelightableFile parse_header(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("header is not valid JSON: ") + e.what());
  }
  RelightableFile f;
  f.format_version = require_as<int>(j, "format_version");
  if (f.format_version != kFormatVersion) {
    throw Error(ErrorCode::SchemaViolation, "format_version " + std::to_string(f.format_version) + " unsupported");
  }
  f.method = parse_method(require_as<std::string>(j, "method"));
  f.width = require_as<int>(j, "width");
  f.height = require_as<int>(j, "height");
  f.latent_dim = require_as<int>(j, "K");
  f.lights_trained = require_as<int>(j, "lights_trained");
  const json& decoder = require(j, "decoder");
  const json& quant = require(j, "quant");
  f.quant.offsets = require_as<std::vector<double>>(quant, "offsets", "quant.");
  f.quant.scales = require_as<std::vector<double>>(quant, "scales", "quant.");
  if (f.width < 1 || f.height < 1) throw Error(ErrorCode::SchemaViolation, "width/height must be positive");

  if (is_neural(f.method)) {
    f.decoder = network_from_json(decoder, "decoder.");
    if (f.latent_dim < 1 || f.decoder.input_dim() != f.latent_dim + 2 || f.decoder.output_dim() != 3) {
      throw Error(ErrorCode::CountMismatch, "decoder.layer_sizes inconsistent with K = " + std::to_string(f.latent_dim));
    }
    if (f.quant.offsets.size() != static_cast<std::size_t>(f.latent_dim) ||
        f.quant.scales.size() != static_cast<std::size_t>(f.latent_dim)) {
      throw Error(ErrorCode::CountMismatch, "quant arrays must hold K entries");
    }
    for (double s : f.quant.scales) {
      if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorCode::SchemaViolation, "quant.scales must be positive");
    }
  } else {
    require(decoder, "layer_sizes", "decoder.");
    require(decoder, "activation", "decoder.");
    require(decoder, "weights", "decoder.");
    require(decoder, "biases", "decoder.");
    require(j, "coefficients");
    const int expected = f.method == Method::PtmLrgb ? kPtmCoefficients : kHshCoefficients;
    if (f.latent_dim != expected) {
      throw Error(ErrorCode::CountMismatch, std::string(to_string(f.method)) + " stores " + std::to_string(expected) +
                                                " coefficients per pixel");
    }
  }
  return f;
}

void write_relightable(const std::filesystem::path& dir, const RelightableFile& file) {
  const std::size_t pixels = static_cast<std::size_t>(file.width) * file.height;
  if (is_neural(file.method)) {
    if (file.planes.size() != static_cast<std::size_t>(plane_count_for(file.latent_dim))) {
      throw Error(ErrorCode::ShapeMismatch, "plane count does not match K");
    }
    for (const ByteImage& plane : file.planes) {
      if (plane.width != file.width || plane.height != file.height || plane.data.size() != pixels * 3) {
        throw Error(ErrorCode::ShapeMismatch, "plane size differs from header size");
      }
    }
  } else if (file.coefficients.size() != pixels * static_cast<std::size_t>(file.latent_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "coefficient count does not match width * height * K");
  }

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / kHeaderName, std::ios::binary);
    out << header_json(file);
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + (dir / kHeaderName).string());
  }
  if (is_neural(file.method)) {
    for (std::size_t i = 0; i < file.planes.size(); ++i) write_png(dir / plane_name(i), file.planes[i]);
  } else {
    std::ofstream out(dir / kCoefficientsName, std::ios::binary);
    static_assert(std::endian::native == std::endian::little, "coefficient files are little-endian");
    out.write(reinterpret_cast<const char*>(file.coefficients.data()),
              static_cast<std::streamsize>(file.coefficients.size() * sizeof(float)));
    if (!out) throw Error(ErrorCode::IoError, "failed writing coefficients");
  }
}

RelightableFile read_relightable(const std::filesystem::path& dir) {
  const auto header_path = dir / kHeaderName;
  std::ifstream in(header_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, header_path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  RelightableFile f = parse_header(buffer.str());

  const std::size_t pixels = static_cast<std::size_t>(f.width) * f.height;
  if (is_neural(f.method)) {
    for (int i = 0; i < plane_count_for(f.latent_dim); ++i) {
      const auto path = dir / plane_name(static_cast<std::size_t>(i));
      if (!std::filesystem::exists(path)) throw Error(ErrorCode::MissingFile, path.string());
      ByteImage plane = read_png(path);
      if (plane.width != f.width || plane.height != f.height) {
        throw Error(ErrorCode::PlaneDimensionMismatch, plane_name(static_cast<std::size_t>(i)) + " is " +
                                                           std::to_string(plane.width) + "x" +
                                                           std::to_string(plane.height) + ", header says " +
                                                           std::to_string(f.width) + "x" + std::to_string(f.height));
      }
      f.planes.push_back(std::move(plane));
    }
  } else {
    const auto path = dir / kCoefficientsName;
    std::ifstream bin(path, std::ios::binary | std::ios::ate);
    if (!bin) throw Error(ErrorCode::MissingFile, path.string());
    const auto bytes = static_cast<std::size_t>(bin.tellg());
    if (bytes != pixels * f.latent_dim * sizeof(float)) {
      throw Error(ErrorCode::CountMismatch, "coefficients.bin holds " + std::to_string(bytes) + " bytes");
    }
    f.coefficients.resize(bytes / sizeof(float));
    bin.seekg(0);
    bin.read(reinterpret_cast<char*>(f.coefficients.data()), static_cast<std::streamsize>(bytes));
  }
  return f;
}

namespace {

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Float copy of the decoder, evaluated over blocks of pixels. Activations are
// row-major (one row per unit) so each layer is a single small GEMM whose
// output rows stay contiguous for the bias and activation pass.
class FloatDecoder {
 public:
  explicit FloatDecoder(const nn::Network& net) {
    for (const auto& l : net.layers()) {
      weights_.push_back(l.weights.cast<float>());
      biases_.push_back(l.biases.cast<float>());
      elu_.push_back(l.activation == nn::Activation::Elu);
    }
  }

  // input: one row per network input, one column per pixel; returns 3 rows.
  const RowMatrixXf& run(const RowMatrixXf& input) {
    const RowMatrixXf* current = &input;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      RowMatrixXf& next = buffers_[i % 2];
      next.noalias() = weights_[i] * *current;
      for (Eigen::Index r = 0; r < next.rows(); ++r) {
        auto row = next.row(r).array();
        const float b = biases_[i][r];
        if (elu_[i]) {
          row = (row + b).max(0.0f) + ((row + b).min(0.0f).exp() - 1.0f);
        } else {
          row += b;
        }
      }
      current = &next;
    }
    return *current;
  }

 private:
  std::vector<Eigen::MatrixXf> weights_;
  std::vector<Eigen::VectorXf> biases_;
  std::vector<bool> elu_;
  RowMatrixXf buffers_[2];
};

Rgb classical_pixel(const RelightableFile& f, std::size_t p, const LightDirection& light,
                    const Eigen::VectorXd& hsh) {
  const float* c = f.coefficients.data() + p * static_cast<std::size_t>(f.latent_dim);
  if (f.method == Method::PtmLrgb) {
    classical::PtmPixel px;
    for (int k = 0; k < 6; ++k) px.poly[k] = c[k];
    for (int k = 0; k < 3; ++k) px.chroma[k] = c[6 + k];
    return classical::relight_classical(px, light).display;
  }
  const int n_basis = kHshOrder * kHshOrder;
  Rgb out{};
  for (int ch = 0; ch < 3; ++ch) {
    double v = 0.0;
    for (int k = 0; k < n_basis; ++k) v += c[ch * n_basis + k] * hsh(k);
    out[ch] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

}  // namespace

void cpu_relight_file(const RelightableFile& file, const LightDirection& light, Image& out, int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidArgument, "scale must be >= 1");
  const int sw = (file.width + scale - 1) / scale;
  const int sh = (file.height + scale - 1) / scale;
  const std::size_t n = static_cast<std::size_t>(sw) * sh;
  if (out.width() != file.width || out.height() != file.height) out = Image(file.width, file.height);
  // At scale 1 decoded pixels go straight into the output; otherwise into a
  // small buffer that is expanded by nearest neighbour afterwards.
  std::vector<double> small;
  double* decoded = out.data().data();
  if (scale > 1) {
    small.resize(n * 3);
    decoded = small.data();
  }

  auto source_index = [&](std::size_t i) {
    const std::size_t r = (i / sw) * scale, c = (i % sw) * scale;
    return r * static_cast<std::size_t>(file.width) + c;
  };

  if (is_neural(file.method)) {
    const int k = file.latent_dim;
    // Dequantization and the light direction are affine in the first layer's
    // input, so they fold into its weights and bias and the raw bytes feed it.
    nn::Network folded = file.decoder;
    auto& first = folded.layers().front();
    const Eigen::MatrixXd w = first.weights;
    for (int f = 0; f < k; ++f) {
      first.biases += w.col(f) * file.quant.offsets[f];
      first.weights.col(f) = w.col(f) * file.quant.scales[f];
    }
    first.biases += w.col(k) * light.lx + w.col(k + 1) * light.ly;
    first.weights.conservativeResize(Eigen::NoChange, k);
    FloatDecoder decoder(folded);

    constexpr std::size_t kBlock = 256;
    RowMatrixXf input(k, static_cast<Eigen::Index>(kBlock));
    for (std::size_t start = 0; start < n; start += kBlock) {
      const std::size_t count = std::min(kBlock, n - start);
      if (count != kBlock) input.resize(k, static_cast<Eigen::Index>(count));
      for (std::size_t q = 0; q < file.planes.size(); ++q) {
        const unsigned char* plane = file.planes[q].data.data();
        const int channels = std::min(3, k - static_cast<int>(3 * q));
        for (int c = 0; c < channels; ++c) {
          float* row = input.row(static_cast<Eigen::Index>(3 * q) + c).data();
          if (scale == 1) {
            const unsigned char* src = plane + 3 * start + c;
            for (std::size_t i = 0; i < count; ++i) row[i] = src[3 * i];
          } else {
            for (std::size_t i = 0; i < count; ++i) row[i] = plane[3 * source_index(start + i) + c];
          }
        }
      }
      const RowMatrixXf& rgb = decoder.run(input);
      double* dst = decoded + 3 * start;
      for (std::size_t i = 0; i < count; ++i) {
        for (int c = 0; c < 3; ++c) {
          dst[3 * i + c] = std::clamp(rgb(c, static_cast<Eigen::Index>(i)), 0.0f, 1.0f);
        }
      }
    }
  } else {
    Eigen::VectorXd hsh;
    if (file.method == Method::Hsh3) hsh = classical::hsh_basis(kHshOrder, light);
    for (std::size_t i = 0; i < n; ++i) {
      const Rgb v = classical_pixel(file, source_index(i), light, hsh);
      for (int c = 0; c < 3; ++c) decoded[3 * i + c] = static_cast<float>(v[c]);
    }
  }

  if (scale > 1) {
    for (int r = 0; r < file.height; ++r) {
      for (int c = 0; c < file.width; ++c) {
        const std::size_t i = static_cast<std::size_t>(r / scale) * sw + c / scale;
        for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = small[3 * i + ch];
      }
    }
  }
}

Image cpu_relight_file(const RelightableFile& file, const LightDirection& light, int scale) {
  Image out;
  cpu_relight_file(file, light, out, scale);
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  json j;
  j["format_version"] = kFormatVersion;
  j["method"] = std::string(to_string(ck.method));
  j["encoder_spec"] = {{"hidden_layers", ck.model.encoder_spec.hidden_layers},
                       {"hidden_width", ck.model.encoder_spec.hidden_width},
                       {"latent_dim", ck.model.encoder_spec.latent_dim}};
  j["decoder_spec"] = {{"hidden_layers", ck.model.decoder_spec.hidden_layers},
                       {"hidden_width", ck.model.decoder_spec.hidden_width},
                       {"light_dim", ck.model.decoder_spec.light_dim}};
  j["encoder"] = network_to_json(ck.model.encoder);
  j["decoder"] = network_to_json(ck.model.decoder);
  j["trained"] = ck.model.trained;
  j["train_indices"] = ck.train_indices;
  j["test_indices"] = ck.test_indices;
  j["mlic_dir"] = ck.mlic_dir;
  j["lp_file"] = ck.lp_file;
  std::ofstream out(path, std::ios::binary);
  out << j.dump() << "\n";
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  ck.method = parse_method(require_as<std::string>(j, "method"));
  const json& es = require(j, "encoder_spec");
  const json& ds = require(j, "decoder_spec");
  ck.model.encoder_spec = {require_as<int>(es, "hidden_layers", "encoder_spec."),
                           require_as<int>(es, "hidden_width", "encoder_spec."),
                           require_as<int>(es, "latent_dim", "encoder_spec.")};
  ck.model.decoder_spec = {require_as<int>(ds, "hidden_layers", "decoder_spec."),
                           require_as<int>(ds, "hidden_width", "decoder_spec."),
                           require_as<int>(ds, "light_dim", "decoder_spec.")};
  ck.model.encoder = network_from_json(require(j, "encoder"), "encoder.");
  ck.model.decoder = network_from_json(require(j, "decoder"), "decoder.");
  ck.model.trained = require_as<bool>(j, "trained");
  ck.train_indices = require_as<std::vector<int>>(j, "train_indices");
  ck.test_indices = require_as<std::vector<int>>(j, "test_indices");
  ck.mlic_dir = j.value("mlic_dir", "");
  ck.lp_file = j.value("lp_file", "");
  try {
    ck.model.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
  return ck;
}

}  // namespace rti::codec
