#include "rti/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rti/error.hpp"

namespace rti::metrics {

namespace {

void require_same_size(const Image& a, const Image& b) {
  if (!a.same_size(b)) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                                  " vs " + std::to_string(b.width()) + "x" +
                                                  std::to_string(b.height()));
  }
}

std::vector<double> luminance(const Image& img) {
  std::vector<double> y(img.pixel_count());
  const auto& d = img.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.2126 * d[3 * i] + 0.7152 * d[3 * i + 1] + 0.0722 * d[3 * i + 2];
  }
  return y;
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_kernel() {
  std::array<double, kWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    k[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter keeping only windows fully inside the image.
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h) {
  static const auto k = gaussian_kernel();
  const int ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * src[static_cast<std::size_t>(r) * w + c + i];
      tmp[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int r = 0; r < oh; ++r) {
    for (int c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(r + i) * ow + c];
      out[static_cast<std::size_t>(r) * ow + c] = acc;
    }
  }
  return out;
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_size(a, b);
  if (a.empty()) throw Error(ErrorCode::DimensionMismatch, "empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  require_same_size(a, b);
  if (a.width() < kWindow || a.height() < kWindow) {
    throw Error(ErrorCode::ImageTooSmall, "SSIM needs at least 11x11 pixels");
  }
  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const int w = a.width(), h = a.height();
  const std::vector<double> x = luminance(a), y = luminance(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, w, h), my = filter_valid(y, w, h);
  const auto sxx = filter_valid(xx, w, h), syy = filter_valid(yy, w, h), sxy = filter_valid(xy, w, h);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

Lab srgb_to_lab(const Rgb& srgb) {
  const double r = srgb_to_linear(srgb[0]), g = srgb_to_linear(srgb[1]), b = srgb_to_linear(srgb[2]);
  constexpr double m[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                              {0.2126729, 0.7151522, 0.0721750},
                              {0.0193339, 0.1191920, 0.9503041}};
  // The white point is the image of sRGB white, so neutral greys get a* = b* = 0.
  constexpr double xn = m[0][0] + m[0][1] + m[0][2];
  constexpr double yn = m[1][0] + m[1][1] + m[1][2];
  constexpr double zn = m[2][0] + m[2][1] + m[2][2];
  const double fx = lab_f((m[0][0] * r + m[0][1] * g + m[0][2] * b) / xn);
  const double fy = lab_f((m[1][0] * r + m[1][1] * g + m[1][2] * b) / yn);
  const double fz = lab_f((m[2][0] * r + m[2][1] * g + m[2][2] * b) / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

double delta_e(const Image& a, const Image& b) {
  require_same_size(a, b);
  if (a.empty()) throw Error(ErrorCode::DimensionMismatch, "empty images");
  double total = 0.0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      const Lab p = srgb_to_lab(a.pixel(r, c));
      const Lab q = srgb_to_lab(b.pixel(r, c));
      total += std::sqrt((p.l - q.l) * (p.l - q.l) + (p.a - q.a) * (p.a - q.a) + (p.b - q.b) * (p.b - q.b));
    }
  }
  return total / static_cast<double>(a.pixel_count());
}

void QualityReport::add(DirectionQuality q) {
  per_direction.push_back(std::move(q));
  double p = 0, s = 0, e = 0;
  for (const auto& d : per_direction) {
    p += d.psnr_db;
    s += d.ssim;
    e += d.delta_e_mean;
  }
  const auto n = static_cast<double>(per_direction.size());
  mean_psnr_db = p / n;
  mean_ssim = s / n;
  mean_delta_e = e / n;
}

std::string QualityReport::to_csv() const {
  std::ostringstream out;
  out << "name,lx,ly,lz,psnr_db,ssim,delta_e\n" << std::setprecision(10);
  for (const auto& d : per_direction) {
    out << d.name << ',' << d.light.lx << ',' << d.light.ly << ',' << d.light.lz << ',' << d.psnr_db << ','
        << d.ssim << ',' << d.delta_e_mean << '\n';
  }
  out << "mean,,,," << mean_psnr_db << ',' << mean_ssim << ',' << mean_delta_e << '\n';
  return out.str();
}

namespace {

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string QualityReport::to_json() const {
  nlohmann::json j;
  j["delta_e_formula"] = delta_e_formula;
  j["ssim"] = {{"window", 11}, {"sigma", 1.5}, {"k1", 0.01}, {"k2", 0.03}, {"channel", "rec709-luma"}};
  j["aggregate"] = {{"psnr_db", finite_or_string(mean_psnr_db)},
                    {"ssim", mean_ssim},
                    {"delta_e_mean", mean_delta_e}};
  j["per_direction"] = nlohmann::json::array();
  for (const auto& d : per_direction) {
    j["per_direction"].push_back({{"name", d.name},
                                  {"light", {d.light.lx, d.light.ly, d.light.lz}},
                                  {"psnr_db", finite_or_string(d.psnr_db)},
                                  {"ssim", d.ssim},
                                  {"delta_e_mean", d.delta_e_mean}});
  }
  return j.dump(2);
}

QualityReport evaluate(const Mlic& ground_truth, const std::vector<int>& test_indices, const Relighter& relight) {
  QualityReport report;
  for (int idx : test_indices) {
    const Image& gt = ground_truth.images.at(idx);
    const LightDirection& light = ground_truth.lights.at(idx);
    const Image pred = relight(light).clamped();
    DirectionQuality q;
    q.name = idx < static_cast<int>(ground_truth.filenames.size()) ? ground_truth.filenames[idx]
                                                                    : std::to_string(idx);
    q.light = light;
    q.psnr_db = psnr(pred, gt);
    q.ssim = ssim(pred, gt);
    q.delta_e_mean = delta_e(pred, gt);
    report.add(std::move(q));
  }
  return report;
}

}  // namespace rti::metrics
