#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orbseg/image.hpp"
#include "orbseg/mesh_io.hpp"
#include "orbseg/taxonomy.hpp"
#include "orbseg/vec3.hpp"

namespace orbseg {

// Lighting and tone mapping. Radiometric quantities are relative, not SI.
struct SceneConfig {
  // Unit vector pointing from the scene toward the sun.
  Vec3 sun_direction = normalized(Vec3{0.6, -0.4, 0.7});
  Vec3 sun_irradiance{1.0, 1.0, 1.0};
  // Planar earthshine emitter. Corners are ordered so that the winding normal
  // faces the spacecraft; only that side emits.
  std::array<Vec3, 4> earthshine_quad{Vec3{-60, -60, -40}, Vec3{60, -60, -40}, Vec3{60, 60, -40},
                                      Vec3{-60, 60, -40}};
  Vec3 earthshine_radiance{0.08, 0.08, 0.08};
  double ambient_floor = 0.02;
  double exposure = 1.0;
  double gamma = 2.2;
  // Lambert albedo per class index; classes beyond the list use default_albedo.
  std::vector<Vec3> class_albedo;
  Vec3 default_albedo{0.8, 0.8, 0.8};
  // Image-pass samples per pixel side. 1 keeps the image ray identical to the
  // mask ray.
  int supersample = 1;

  Vec3 albedo(ClassIndex k) const { return k < class_albedo.size() ? class_albedo[k] : default_albedo; }
  Vec3 earthshine_normal() const;
  // Throws ConfigError when an invariant fails.
  void validate() const;
  std::string to_config_text() const;
};

SceneConfig parse_scene_config(std::string_view text, std::string_view source);
SceneConfig load_scene_config(const std::string& path);

enum class RangeTier : int { near = 1, mid = 2, far = 3 };

struct CameraPose {
  Vec3 position;
  Vec3 look_at;
  Vec3 up_hint{0, 0, 1};
  double vertical_fov = 0.7853981633974483;  // 45 degrees
  // 1-based position in the range-multiplier list (1 = near, 2 = mid, 3 = far
  // for the default list).
  int range_tier = 1;
  int pose_id = 0;

  void validate() const;
};

enum class PosePattern { fibonacci, uniform_random };

struct PoseSamplingConfig {
  int n_positions = 5000;
  std::vector<double> range_multipliers{1.0, 2.0, 3.0};
  double base_distance_factor = 2.5;
  double vertical_fov = 0.7853981633974483;
  // Lattice jitter as a fraction of the cell spacing; 0 gives the bare lattice.
  double jitter = 0.5;
  PosePattern pattern = PosePattern::fibonacci;
  Vec3 up_hint{0, 0, 1};
};

// n_positions directions x |multipliers| distances, ordered by (pose_id,
// tier). Every pose looks at the bounding-sphere center. Deterministic in
// (bounds, config, seed).
std::vector<CameraPose> sample_poses(const AnnotatedMesh& mesh, const PoseSamplingConfig& config,
                                     std::uint64_t seed);
std::vector<CameraPose> sample_poses(const AnnotatedMesh& mesh, int n_positions,
                                     const std::vector<double>& range_multipliers, double base_distance_factor,
                                     std::uint64_t seed);

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
};

struct Hit {
  double t = 0.0;
  std::uint32_t triangle = 0;
  // Barycentric weights of the three corners.
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
};

// Hits closer than this (meters) are ignored.
inline constexpr double kMinHitDistance = 1e-6;
// Hits within this distance of each other are ties, won by the lower id.
inline constexpr double kTieDistance = 1e-12;

// Watertight ray/triangle test. Rays crossing a shared edge hit both
// neighbours; callers resolve the tie by triangle id.
std::optional<Hit> intersect_triangle(const Ray& ray, Vec3 a, Vec3 b, Vec3 c, std::uint32_t id);

// Bounding volume hierarchy over an AnnotatedMesh (median split on the widest
// centroid axis, at most four triangles per leaf). Holds a pointer to the
// mesh, which must outlive it.
class RayCaster {
 public:
  explicit RayCaster(const AnnotatedMesh& mesh);

  const AnnotatedMesh& mesh() const { return *mesh_; }
  // Nearest hit beyond kMinHitDistance.
  std::optional<Hit> intersect(const Ray& ray) const;
  // True if anything is hit in (kMinHitDistance, max_t).
  bool occluded(const Ray& ray, double max_t) const;
  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first primitive slot; inner: right child
    std::uint32_t count = 0;  // 0 marks an inner node
  };
  std::uint32_t build(std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& centroids);

  const AnnotatedMesh* mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> prims_;
};

std::optional<Hit> intersect(const Ray& ray, const AnnotatedMesh& mesh);  // BVH-free, O(triangles)

// Pinhole camera from a pose; pixel (row, col) maps to its center.
class Camera {
 public:
  Camera(const CameraPose& pose, int width, int height);
  Ray primary_ray(int row, int col) const { return ray_through(row + 0.5, col + 0.5); }
  Ray ray_through(double row, double col) const;

 private:
  Vec3 origin_, forward_, right_, up_;
  double tan_half_ = 0.0;
  double aspect_ = 1.0;
  int width_ = 1, height_ = 1;
};

struct RenderedPair {
  RgbImage rgb;
  CategoricalMask mask;
  CameraPose pose;
  std::uint64_t seed = 0;
};

// Renders the shaded image and the class mask from the same primary rays.
// Pixels are computed independently, so the result does not depend on the
// thread count. The *_serial variant runs on the calling thread only.
RenderedPair render_pair(const RayCaster& caster, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed = 0);
RenderedPair render_pair_serial(const RayCaster& caster, const SceneConfig& scene, const CameraPose& pose,
                                int width, int height, const ClassTaxonomy& taxonomy, std::uint64_t seed = 0);
RenderedPair render_pair(const AnnotatedMesh& mesh, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed = 0);

// Linear radiance at a hit before exposure and clamping.
Vec3 shade_hit(const RayCaster& caster, const SceneConfig& scene, const Ray& ray, const Hit& hit);
// exposure, clamp to [0,1], gamma encode, quantize.
Rgb8 tone_map(const SceneConfig& scene, Vec3 radiance);

// Number of pixels where (mask != background) disagrees with whether the
// pixel's primary ray hits the mesh.
std::size_t registration_mismatches(const RayCaster& caster, const CameraPose& pose, const CategoricalMask& mask,
                                    ClassIndex background = 0);

namespace reference {
// Serial, BVH-free renderer kept as the oracle for render_pair.
RenderedPair render_pair(const AnnotatedMesh& mesh, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed = 0);
}  // namespace reference

}  // namespace orbseg
