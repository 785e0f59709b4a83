#pragma once

#include <Eigen/Core>

#include <array>

#include "rti/image.hpp"
#include "rti/mlic.hpp"

namespace rti::classical {

// [lx^2, ly^2, lx*ly, lx, ly, 1]
std::array<double, 6> ptm_design_row(const LightDirection& light);

// LRGB polynomial texture map pixel: six luminance coefficients plus a
// unit-sum chroma. Relit RGB = fitted luminance * 3 * chroma.
struct PtmPixel {
  std::array<double, 6> poly{};
  Rgb chroma{1.0 / 3, 1.0 / 3, 1.0 / 3};
  bool black = false;  // zero mean luminance; chroma left neutral
};

struct PtmMap {
  int width = 0;
  int height = 0;
  std::vector<PtmPixel> pixels;  // row-major
};

// Least squares through one QR factorization of the L x 6 design matrix,
// shared by every pixel. Throws RankDeficientLights below rank 6.
PtmMap fit_ptm(const Mlic& mlic, const SplitSpec& split);

inline constexpr int kMaxHshOrder = 3;

// order^2 hemispherical harmonics (l < order, m = -l..l), orthonormal over
// the upper hemisphere under solid angle.
Eigen::VectorXd hsh_basis(int order, const LightDirection& light);

struct HshPixel {
  Eigen::MatrixXd coeffs;  // 3 x order^2
};

struct HshMap {
  int width = 0;
  int height = 0;
  int order = 0;
  Eigen::MatrixXd coeffs;  // (3 * order^2) x (H*W); rows grouped per channel

  HshPixel pixel(int row, int col) const;
};

HshMap fit_hsh(const Mlic& mlic, const SplitSpec& split, int order);

struct RelitRgb {
  Rgb raw;
  Rgb display;  // clamped to [0,1]
};

RelitRgb relight_classical(const PtmPixel& pixel, const LightDirection& light);
RelitRgb relight_classical(const HshPixel& pixel, const LightDirection& light);

Image relight_image(const PtmMap& map, const LightDirection& light, bool clamp = true);
Image relight_image(const HshMap& map, const LightDirection& light, bool clamp = true);

}  // namespace rti::classical
