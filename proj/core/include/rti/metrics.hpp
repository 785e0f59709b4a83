#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rti/image.hpp"
#include "rti/mlic.hpp"

namespace rti::metrics {

// 10 log10(1 / MSE) with peak 1 and MSE over all channels; +inf when MSE is 0.
double psnr(const Image& a, const Image& b);

// Mean SSIM over valid 11x11 Gaussian (sigma 1.5) windows of Rec. 709
// luminance, K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim(const Image& a, const Image& b);

// Mean CIE76 colour difference; sRGB -> linear -> XYZ (D65) -> L*a*b*.
double delta_e(const Image& a, const Image& b);

struct Lab {
  double l, a, b;
};
Lab srgb_to_lab(const Rgb& srgb);

struct DirectionQuality {
  std::string name;
  LightDirection light;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double delta_e_mean = 0.0;
};

struct QualityReport {
  std::vector<DirectionQuality> per_direction;
  double mean_psnr_db = 0.0;
  double mean_ssim = 0.0;
  double mean_delta_e = 0.0;
  std::string delta_e_formula = "CIE76";

  void add(DirectionQuality q);  // also refreshes the aggregates
  std::string to_csv() const;
  std::string to_json() const;
};

using Relighter = std::function<Image(const LightDirection&)>;

// Scores `relight` against every ground-truth frame in `test_indices`.
// Predictions are clamped to [0,1] before scoring.
QualityReport evaluate(const Mlic& ground_truth, const std::vector<int>& test_indices, const Relighter& relight);

}  // namespace rti::metrics
