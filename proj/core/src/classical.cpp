#include "rti/classical.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rti/error.hpp"

namespace rti::classical {

std::array<double, 6> ptm_design_row(const LightDirection& l) {
  return {l.lx * l.lx, l.ly * l.ly, l.lx * l.ly, l.lx, l.ly, 1.0};
}

namespace {

Eigen::ColPivHouseholderQR<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& design, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (design.rows() < design.cols() || qr.rank() < design.cols()) {
    throw Error(ErrorCode::RankDeficientLights, std::string(what) + " needs rank " + std::to_string(design.cols()) +
                                                    ", train lights give rank " + std::to_string(qr.rank()));
  }
  return qr;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Associated Legendre P_l^m(x), m >= 0, Condon-Shortley phase included.
double legendre(int l, int m, double x) {
  double pmm = 1.0;
  if (m > 0) {
    const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
    double fact = 1.0;
    for (int i = 1; i <= m; ++i) {
      pmm *= -fact * s;
      fact += 2.0;
    }
  }
  if (l == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

}  // namespace

PtmMap fit_ptm(const Mlic& mlic, const SplitSpec& split) {
  const auto n_lights = static_cast<Eigen::Index>(split.train_indices.size());
  Eigen::MatrixXd design(n_lights, 6);
  for (Eigen::Index j = 0; j < n_lights; ++j) {
    const auto row = ptm_design_row(mlic.lights.at(split.train_indices[j]));
    for (int k = 0; k < 6; ++k) design(j, k) = row[k];
  }
  const auto qr = factorize(design, "PTM");

  const auto n_pixels = static_cast<Eigen::Index>(mlic.width) * mlic.height;
  Eigen::MatrixXd luminance(n_lights, n_pixels);
  Eigen::MatrixXd mean_rgb = Eigen::MatrixXd::Zero(3, n_pixels);
  for (Eigen::Index j = 0; j < n_lights; ++j) {
    const auto& d = mlic.images[split.train_indices[j]].data();
    for (Eigen::Index p = 0; p < n_pixels; ++p) {
      const double r = d[3 * p], g = d[3 * p + 1], b = d[3 * p + 2];
      luminance(j, p) = (r + g + b) / 3.0;
      mean_rgb(0, p) += r;
      mean_rgb(1, p) += g;
      mean_rgb(2, p) += b;
    }
  }
  mean_rgb /= static_cast<double>(n_lights);
  const Eigen::MatrixXd coeffs = qr.solve(luminance);

  PtmMap map;
  map.width = mlic.width;
  map.height = mlic.height;
  map.pixels.resize(static_cast<std::size_t>(n_pixels));
  for (Eigen::Index p = 0; p < n_pixels; ++p) {
    PtmPixel& px = map.pixels[static_cast<std::size_t>(p)];
    for (int k = 0; k < 6; ++k) px.poly[k] = coeffs(k, p);
    const double lum_mean = mean_rgb.col(p).sum() / 3.0;
    if (lum_mean > 0.0) {
      for (int c = 0; c < 3; ++c) px.chroma[c] = mean_rgb(c, p) / (3.0 * lum_mean);
    } else {
      px.black = true;
    }
  }
  return map;
}

Eigen::VectorXd hsh_basis(int order, const LightDirection& light) {
  if (order < 1 || order > kMaxHshOrder) {
    throw Error(ErrorCode::OrderUnsupported, "HSH order must be 1..3, got " + std::to_string(order));
  }
  if (light.lz < 0.0) throw Error(ErrorCode::NonHemisphericalLight, "HSH is defined on the upper hemisphere");
  const double x = 2.0 * std::clamp(light.lz, 0.0, 1.0) - 1.0;  // shifted cos(theta)
  const double phi = std::atan2(light.ly, light.lx);
  Eigen::VectorXd out(order * order);
  int i = 0;
  for (int l = 0; l < order; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int am = std::abs(m);
      const double k = std::sqrt((2.0 * l + 1.0) / (2.0 * std::numbers::pi) * factorial(l - am) / factorial(l + am));
      const double p = legendre(l, am, x);
      if (m == 0) {
        out(i++) = k * p;
      } else if (m > 0) {
        out(i++) = std::numbers::sqrt2 * k * std::cos(m * phi) * p;
      } else {
        out(i++) = std::numbers::sqrt2 * k * std::sin(am * phi) * p;
      }
    }
  }
  return out;
}

HshPixel HshMap::pixel(int row, int col) const {
  const Eigen::Index n_basis = order * order;
  const Eigen::Index p = static_cast<Eigen::Index>(row) * width + col;
  HshPixel px;
  px.coeffs.resize(3, n_basis);
  for (int c = 0; c < 3; ++c) px.coeffs.row(c) = coeffs.col(p).segment(c * n_basis, n_basis).transpose();
  return px;
}

HshMap fit_hsh(const Mlic& mlic, const SplitSpec& split, int order) {
  if (order < 1 || order > kMaxHshOrder) {
    throw Error(ErrorCode::OrderUnsupported, "HSH order must be 1..3, got " + std::to_string(order));
  }
  const auto n_lights = static_cast<Eigen::Index>(split.train_indices.size());
  const Eigen::Index n_basis = order * order;
  Eigen::MatrixXd design(n_lights, n_basis);
  for (Eigen::Index j = 0; j < n_lights; ++j) {
    design.row(j) = hsh_basis(order, mlic.lights.at(split.train_indices[j])).transpose();
  }
  const auto qr = factorize(design, "HSH");

  const auto n_pixels = static_cast<Eigen::Index>(mlic.width) * mlic.height;
  // Right-hand sides: one column per (channel, pixel).
  Eigen::MatrixXd values(n_lights, 3 * n_pixels);
  for (Eigen::Index j = 0; j < n_lights; ++j) {
    const auto& d = mlic.images[split.train_indices[j]].data();
    for (Eigen::Index p = 0; p < n_pixels; ++p) {
      for (int c = 0; c < 3; ++c) values(j, c * n_pixels + p) = d[3 * p + c];
    }
  }
  const Eigen::MatrixXd solved = qr.solve(values);

  HshMap map;
  map.width = mlic.width;
  map.height = mlic.height;
  map.order = order;
  map.coeffs.resize(3 * n_basis, n_pixels);
  for (int c = 0; c < 3; ++c) {
    map.coeffs.middleRows(c * n_basis, n_basis) = solved.middleCols(c * n_pixels, n_pixels);
  }
  return map;
}

RelitRgb relight_classical(const PtmPixel& pixel, const LightDirection& light) {
  const auto row = ptm_design_row(light);
  double lum = 0.0;
  for (int k = 0; k < 6; ++k) lum += pixel.poly[k] * row[k];
  RelitRgb out;
  for (int c = 0; c < 3; ++c) {
    out.raw[c] = lum * 3.0 * pixel.chroma[c];
    out.display[c] = std::clamp(out.raw[c], 0.0, 1.0);
  }
  return out;
}

RelitRgb relight_classical(const HshPixel& pixel, const LightDirection& light) {
  const Eigen::VectorXd basis = hsh_basis(static_cast<int>(std::lround(std::sqrt(pixel.coeffs.cols()))), light);
  const Eigen::Vector3d rgb = pixel.coeffs * basis;
  RelitRgb out;
  for (int c = 0; c < 3; ++c) {
    out.raw[c] = rgb(c);
    out.display[c] = std::clamp(rgb(c), 0.0, 1.0);
  }
  return out;
}

Image relight_image(const PtmMap& map, const LightDirection& light, bool clamp) {
  Image out(map.width, map.height);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const RelitRgb px = relight_classical(map.pixels[static_cast<std::size_t>(r) * map.width + c], light);
      out.set_pixel(r, c, clamp ? px.display : px.raw);
    }
  }
  return out;
}

Image relight_image(const HshMap& map, const LightDirection& light, bool clamp) {
  const Eigen::Index n_basis = map.order * map.order;
  const Eigen::VectorXd basis = hsh_basis(map.order, light);
  Image out(map.width, map.height);
  const Eigen::Index n_pixels = map.coeffs.cols();
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd channel = map.coeffs.middleRows(c * n_basis, n_basis).transpose() * basis;
    for (Eigen::Index p = 0; p < n_pixels; ++p) {
      const double v = channel(p);
      out.data()[static_cast<std::size_t>(3 * p + c)] = clamp ? std::clamp(v, 0.0, 1.0) : v;
    }
  }
  return out;
}

}  // namespace rti::classical
