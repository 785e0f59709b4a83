#include "rti/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "rti/error.hpp"

namespace rti::synth {

DomeSpec training_dome() { return {{10, 30, 50, 70, 90}, {16, 13, 10, 9, 1}}; }

DomeSpec test_dome() { return {{20, 40, 60, 80}, {5, 5, 5, 5}}; }

std::vector<LightDirection> dome_directions(const DomeSpec& spec) {
  if (spec.ring_elevations_deg.size() != spec.ring_counts.size()) {
    throw Error(ErrorCode::InvalidArgument, "ring elevations and counts differ in length");
  }
  std::vector<LightDirection> lights;
  double previous = 0.0;
  for (std::size_t ring = 0; ring < spec.ring_counts.size(); ++ring) {
    const double el = spec.ring_elevations_deg[ring];
    const int count = spec.ring_counts[ring];
    if (count < 1 || !(el > previous) || el > 90.0) {
      throw Error(ErrorCode::InvalidArgument, "rings need positive counts and increasing elevations in (0, 90]");
    }
    previous = el;
    for (int i = 0; i < count; ++i) {
      if (el == 90.0) {
        lights.push_back({0.0, 0.0, 1.0});
      } else {
        lights.push_back(LightDirection::from_angles(el, 360.0 * i / count));
      }
    }
  }
  return lights;
}

std::vector<LightDirection> benchmark_lights() {
  std::vector<LightDirection> lights = dome_directions(training_dome());
  const std::vector<LightDirection> test = dome_directions(test_dome());
  lights.insert(lights.end(), test.begin(), test.end());
  return lights;
}

void SyntheticScene::validate() const {
  const auto n = static_cast<std::size_t>(width) * height;
  if (heightfield.size() != n || albedo.width() != width || albedo.height() != height ||
      material_id.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "heightfield, albedo and material map must share dimensions");
  }
  if (materials.empty()) throw Error(ErrorCode::InvalidArgument, "scene has no materials");
  for (const Material& m : materials) {
    if (m.diffuse_weight < 0 || m.specular_weight < 0 || !(m.shininess > 0)) {
      throw Error(ErrorCode::InvalidArgument, "material weights must be >= 0 and shininess > 0");
    }
  }
  for (std::uint8_t id : material_id) {
    if (id >= materials.size()) throw Error(ErrorCode::InvalidArgument, "material id out of range");
  }
}

SyntheticScene uniform_scene(int width, int height, const Material& material, double albedo) {
  SyntheticScene s;
  s.width = width;
  s.height = height;
  s.heightfield.assign(static_cast<std::size_t>(width) * height, 0.0);
  s.albedo = Image(width, height, albedo);
  s.materials = {material};
  s.material_id.assign(static_cast<std::size_t>(width) * height, 0);
  return s;
}

SyntheticScene flat_scene(int size, double albedo) { return uniform_scene(size, size, Material{}, albedo); }

SceneKind parse_scene_kind(std::string_view name) {
  if (name == "flat") return SceneKind::Flat;
  if (name == "bumps") return SceneKind::Bumps;
  if (name == "mixed") return SceneKind::Mixed;
  throw Error(ErrorCode::InvalidArgument, "unknown scene '" + std::string(name) + "'");
}

namespace {

// Smooth colour texture built from a few low-frequency sinusoids.
Rgb texture_color(double u, double v, const std::array<double, 6>& phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = 0.5 + 0.5 * std::sin(two_pi * (1.5 * u + 0.5 * v) + phase[0]);
  const double b = 0.5 + 0.5 * std::sin(two_pi * (0.7 * u - 1.3 * v) + phase[1]);
  const double c = 0.5 + 0.5 * std::cos(two_pi * (2.1 * v) + phase[2]);
  return {0.25 + 0.55 * a, 0.2 + 0.5 * (0.6 * b + 0.4 * c), 0.15 + 0.45 * (0.5 * a + 0.5 * c)};
}

struct Bump {
  double u, v, radius, height;
};

}  // namespace

SyntheticScene make_scene(SceneKind kind, int size, std::uint64_t seed) {
  if (size < 4) throw Error(ErrorCode::InvalidArgument, "scene size must be >= 4");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<double, 6> phase{};
  for (double& p : phase) p = 2.0 * std::numbers::pi * unit(rng);

  SyntheticScene s = uniform_scene(size, size, Material{}, 0.5);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      s.albedo.set_pixel(r, c, texture_color((c + 0.5) / size, (r + 0.5) / size, phase));
    }
  }
  if (kind == SceneKind::Flat) return s;

  // Relief: hemispherical caps plus a shallow sinusoidal groove pattern.
  std::vector<Bump> bumps;
  const int n_bumps = kind == SceneKind::Mixed ? 7 : 5;
  for (int i = 0; i < n_bumps; ++i) {
    const double radius = 0.07 + 0.07 * unit(rng);
    bumps.push_back({0.12 + 0.76 * unit(rng), 0.12 + 0.76 * unit(rng), radius, 0.5 + 0.4 * unit(rng)});
  }
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double u = (c + 0.5) / size;
      const double v = (r + 0.5) / size;
      double h = 0.0;
      for (const Bump& b : bumps) {
        const double d2 = ((u - b.u) * (u - b.u) + (v - b.v) * (v - b.v)) / (b.radius * b.radius);
        if (d2 < 1.0) h = std::max(h, b.height * b.radius * std::sqrt(1.0 - d2));
      }
      h += 0.006 * std::sin(2.0 * std::numbers::pi * 9.0 * (u + 0.3 * v));
      s.heightfield[static_cast<std::size_t>(r) * size + c] = h * size;
    }
  }
  s.shadowing = true;
  if (kind == SceneKind::Bumps) return s;

  // Mixed: the right half of the canvas and every other bump are glossy.
  s.materials = {Material{1.0, 0.0, 1.0}, Material{0.75, 0.35, 40.0}, Material{0.85, 0.2, 12.0}};
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double u = (c + 0.5) / size;
      const double v = (r + 0.5) / size;
      std::uint8_t id = u > 0.55 ? 1 : 0;
      for (std::size_t i = 0; i < bumps.size(); i += 2) {
        const Bump& b = bumps[i];
        if ((u - b.u) * (u - b.u) + (v - b.v) * (v - b.v) < b.radius * b.radius) id = 2;
      }
      s.material_id[static_cast<std::size_t>(r) * size + c] = id;
    }
  }
  return s;
}

namespace {

double sample_height_bilinear(const SyntheticScene& s, double x, double y) {
  const int c0 = std::clamp(static_cast<int>(std::floor(x)), 0, s.width - 1);
  const int r0 = std::clamp(static_cast<int>(std::floor(y)), 0, s.height - 1);
  const int c1 = std::min(c0 + 1, s.width - 1);
  const int r1 = std::min(r0 + 1, s.height - 1);
  const double fx = std::clamp(x - c0, 0.0, 1.0);
  const double fy = std::clamp(y - r0, 0.0, 1.0);
  const double top = s.height_at(r0, c0) * (1 - fx) + s.height_at(r0, c1) * fx;
  const double bottom = s.height_at(r1, c0) * (1 - fx) + s.height_at(r1, c1) * fx;
  return top * (1 - fy) + bottom * fy;
}

bool occluded(const SyntheticScene& s, int row, int col, const LightDirection& l, double max_height) {
  const double planar = std::hypot(l.lx, l.ly);
  if (planar < 1e-12) return false;
  const double dx = l.lx / planar;
  const double dy = l.ly / planar;
  const double rise = l.lz / planar;  // height gained per pixel travelled
  const double h0 = s.height_at(row, col);
  constexpr double kStep = 0.5;
  constexpr double kBias = 1e-3;
  for (double t = kStep;; t += kStep) {
    const double x = col + dx * t;
    const double y = row + dy * t;
    if (x < 0 || y < 0 || x > s.width - 1 || y > s.height - 1) return false;
    const double ray_h = h0 + rise * t;
    if (ray_h > max_height) return false;
    if (sample_height_bilinear(s, x, y) > ray_h + kBias) return true;
  }
}

}  // namespace

Image render(const SyntheticScene& s, const LightDirection& l) {
  s.validate();
  Image out(s.width, s.height);
  const double max_height = *std::max_element(s.heightfield.begin(), s.heightfield.end());
  // Blinn half vector with the fixed view (0,0,1).
  double hx = l.lx, hy = l.ly, hz = l.lz + 1.0;
  const double hn = std::sqrt(hx * hx + hy * hy + hz * hz);
  hx /= hn;
  hy /= hn;
  hz /= hn;

  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      const int cl = std::max(c - 1, 0), cr = std::min(c + 1, s.width - 1);
      const int ru = std::max(r - 1, 0), rd = std::min(r + 1, s.height - 1);
      const double dhdx = cr > cl ? (s.height_at(r, cr) - s.height_at(r, cl)) / (cr - cl) : 0.0;
      const double dhdy = rd > ru ? (s.height_at(rd, c) - s.height_at(ru, c)) / (rd - ru) : 0.0;
      const double nn = std::sqrt(dhdx * dhdx + dhdy * dhdy + 1.0);
      const double nx = -dhdx / nn, ny = -dhdy / nn, nz = 1.0 / nn;

      if (s.shadowing && occluded(s, r, c, l, max_height)) continue;  // stays black

      const Material& m = s.materials[s.material_id[static_cast<std::size_t>(r) * s.width + c]];
      const double ndotl = std::max(0.0, nx * l.lx + ny * l.ly + nz * l.lz);
      const double ndoth = std::max(0.0, nx * hx + ny * hy + nz * hz);
      const double spec = m.specular_weight > 0 ? m.specular_weight * std::pow(ndoth, m.shininess) : 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        out.at(r, c, ch) = std::clamp(s.albedo.at(r, c, ch) * m.diffuse_weight * ndotl + spec, 0.0, 1.0);
      }
    }
  }
  return out;
}

Mlic render_mlic(const SyntheticScene& scene, const std::vector<LightDirection>& lights) {
  scene.validate();
  Mlic mlic;
  mlic.width = scene.width;
  mlic.height = scene.height;
  for (std::size_t i = 0; i < lights.size(); ++i) {
    mlic.images.push_back(render(scene, lights[i]));
    mlic.lights.push_back(lights[i]);
    char name[32];
    std::snprintf(name, sizeof(name), "light_%03zu.png", i);
    mlic.filenames.emplace_back(name);
  }
  return mlic;
}

}  // namespace rti::synth
