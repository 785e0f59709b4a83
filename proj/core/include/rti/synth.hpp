#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rti/image.hpp"
#include "rti/mlic.hpp"

namespace rti::synth {

struct DomeSpec {
  std::vector<double> ring_elevations_deg;
  std::vector<int> ring_counts;
};

// 49 lights on rings at 10/30/50/70/90 degrees.
DomeSpec training_dome();
// 20 lights, five per ring at 20/40/60/80 degrees.
DomeSpec test_dome();

// Equally spaced azimuths per ring, starting at 0 degrees.
std::vector<LightDirection> dome_directions(const DomeSpec& spec);
// Training dome followed by the test dome.
std::vector<LightDirection> benchmark_lights();

struct Material {
  double diffuse_weight = 1.0;
  double specular_weight = 0.0;
  double shininess = 1.0;
};

// Heightfield (in pixel units) with albedo and a material id per pixel.
struct SyntheticScene {
  int width = 0;
  int height = 0;
  std::vector<double> heightfield;       // row-major, width * height
  Image albedo;
  std::vector<Material> materials;
  std::vector<std::uint8_t> material_id;  // row-major, indexes `materials`
  bool shadowing = false;

  double height_at(int row, int col) const { return heightfield[static_cast<std::size_t>(row) * width + col]; }
  void validate() const;
};

SyntheticScene flat_scene(int size, double albedo = 0.5);
// Uniform-albedo scene of constant material with an arbitrary heightfield.
SyntheticScene uniform_scene(int width, int height, const Material& material, double albedo);

enum class SceneKind { Flat, Bumps, Mixed };
SceneKind parse_scene_kind(std::string_view name);

// Desk-scale presets. `flat` is textured Lambertian, `bumps` adds relief and
// cast shadows, `mixed` combines relief, cast shadows and a glossy region.
SyntheticScene make_scene(SceneKind kind, int size, std::uint64_t seed = 1);

// Per pixel: albedo * kd * max(0, n.l) + ks * max(0, n.h)^shininess, with
// normals from central differences of the heightfield, view (0,0,1), and an
// optional heightfield ray-march that zeroes occluded pixels. Clamped to [0,1].
Image render(const SyntheticScene& scene, const LightDirection& light);
Mlic render_mlic(const SyntheticScene& scene, const std::vector<LightDirection>& lights);

}  // namespace rti::synth
