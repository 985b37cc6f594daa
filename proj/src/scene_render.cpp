#include "orbseg/scene_render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "orbseg/config_text.hpp"
#include "orbseg/error.hpp"
#include "orbseg/util.hpp"
#include "shading.hpp"

namespace orbseg {
namespace {

constexpr double kMaxAmbientFloor = 0.05;

std::string vec_text(Vec3 v) { return format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z); }

Vec3 vec_from(const std::vector<double>& v, std::size_t offset = 0) { return {v[offset], v[offset + 1], v[offset + 2]}; }

// Per-ray constants of the watertight test: the axis permutation that makes
// the direction's largest component z, and the shear that maps it to +z.
struct RaySetup {
  int kx, ky, kz;
  double sx, sy, sz;

  explicit RaySetup(Vec3 d) {
    const double ax = std::fabs(d.x), ay = std::fabs(d.y), az = std::fabs(d.z);
    kz = ax > ay ? (ax > az ? 0 : 2) : (ay > az ? 1 : 2);
    kx = (kz + 1) % 3;
    ky = (kx + 1) % 3;
    if (d[kz] < 0.0) std::swap(kx, ky);  // preserve winding
    sx = d[kx] / d[kz];
    sy = d[ky] / d[kz];
    sz = 1.0 / d[kz];
  }
};

std::optional<Hit> watertight(const RaySetup& rs, Vec3 org, Vec3 a, Vec3 b, Vec3 c, std::uint32_t id) {
  const Vec3 A = a - org, B = b - org, C = c - org;
  const double ax = A[rs.kx] - rs.sx * A[rs.kz], ay = A[rs.ky] - rs.sy * A[rs.kz];
  const double bx = B[rs.kx] - rs.sx * B[rs.kz], by = B[rs.ky] - rs.sy * B[rs.kz];
  const double cx = C[rs.kx] - rs.sx * C[rs.kz], cy = C[rs.ky] - rs.sy * C[rs.kz];

  double u = cx * by - cy * bx;
  double v = ax * cy - ay * cx;
  double w = bx * ay - by * ax;
  if (u == 0.0 || v == 0.0 || w == 0.0) {
    // Recompute edge functions in extended precision so the sign on a shared
    // edge is decided consistently.
    using L = long double;
    u = static_cast<double>(L(cx) * L(by) - L(cy) * L(bx));
    v = static_cast<double>(L(ax) * L(cy) - L(ay) * L(cx));
    w = static_cast<double>(L(bx) * L(ay) - L(by) * L(ax));
  }
  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;

  const double az = rs.sz * A[rs.kz], bz = rs.sz * B[rs.kz], cz = rs.sz * C[rs.kz];
  const double t = (u * az + v * bz + w * cz) / det;
  if (!(t > kMinHitDistance)) return std::nullopt;
  return Hit{t, id, u / det, v / det, w / det};
}

// True if `candidate` should replace `best` under the nearest-then-lowest-id
// rule.
bool closer(const Hit& candidate, const std::optional<Hit>& best) {
  if (!best) return true;
  if (candidate.t < best->t - kTieDistance) return true;
  return std::fabs(candidate.t - best->t) <= kTieDistance && candidate.triangle < best->triangle;
}

// Slab test, conservatively widened so that rounding never culls a box the
// triangle test would hit.
bool hits_box(const Aabb& box, Vec3 org, Vec3 inv_dir, double t_max) {
  constexpr double kWiden = 1.0 + 2.0 * (3.0 * 0x1.0p-53) / (1.0 - 3.0 * 0x1.0p-53);
  double t0 = 0.0, t1 = t_max;
  for (int axis = 0; axis < 3; ++axis) {
    double t_near = (box.lo[axis] - org[axis]) * inv_dir[axis];
    double t_far = (box.hi[axis] - org[axis]) * inv_dir[axis];
    if (t_near > t_far) std::swap(t_near, t_far);
    t_far *= kWiden;
    // NaN (origin on a slab plane with a zero direction component) leaves the
    // interval untouched.
    t0 = t_near > t0 ? t_near : t0;
    t1 = t_far < t1 ? t_far : t1;
    if (t0 > t1) return false;
  }
  return true;
}

template <class Pixel>
void render_rows(int width, int height, bool parallel, Pixel&& pixel) {
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int row = 0; row < height; ++row) {
      for (int col = 0; col < width; ++col) pixel(row, col);
    }
  } else {
    for (int row = 0; row < height; ++row) {
      for (int col = 0; col < width; ++col) pixel(row, col);
    }
  }
}

RenderedPair render_impl(const RayCaster& caster, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed, bool parallel) {
  if (width < 1 || height < 1) throw PreconditionError("render size must be at least 1x1");
  pose.validate();
  const Camera camera(pose, width, height);
  const AnnotatedMesh& mesh = caster.mesh();
  const int ss = std::max(1, scene.supersample);
  const auto occluded = [&](const Ray& r, double max_t) { return caster.occluded(r, max_t); };

  RenderedPair out{RgbImage(width, height), CategoricalMask(width, height, taxonomy.background_index()), pose,
                   seed};
  render_rows(width, height, parallel, [&](int row, int col) {
    const Ray ray = camera.primary_ray(row, col);
    const std::optional<Hit> hit = caster.intersect(ray);
    if (hit) out.mask.set(row, col, mesh.face_class()[hit->triangle]);
    Vec3 radiance{};
    if (ss == 1) {
      if (hit) radiance = detail::shade(mesh, scene, ray, *hit, occluded);
    } else {
      for (int i = 0; i < ss; ++i) {
        for (int j = 0; j < ss; ++j) {
          const Ray sub = camera.ray_through(row + detail::subpixel(i, ss), col + detail::subpixel(j, ss));
          if (auto h = caster.intersect(sub)) radiance += detail::shade(mesh, scene, sub, *h, occluded);
        }
      }
      radiance = radiance / double(ss * ss);
    }
    out.rgb.set(row, col, tone_map(scene, radiance));
  });
  return out;
}

}  // namespace

Vec3 SceneConfig::earthshine_normal() const {
  const auto& q = earthshine_quad;
  return normalized(cross(q[1] - q[0], q[2] - q[0]));
}

void SceneConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("scene: " + m); };
  if (std::fabs(norm(sun_direction) - 1.0) > 1e-9) fail("sun_direction must have unit norm");
  for (Vec3 c : {sun_irradiance, earthshine_radiance, default_albedo}) {
    if (c.x < 0 || c.y < 0 || c.z < 0) fail("radiance and albedo components must be non-negative");
  }
  for (Vec3 c : class_albedo) {
    if (c.x < 0 || c.y < 0 || c.z < 0) fail("albedo components must be non-negative");
  }
  const auto& q = earthshine_quad;
  const Vec3 raw = cross(q[1] - q[0], q[2] - q[0]);
  if (norm(raw) == 0.0) fail("earthshine quad is degenerate");
  const Vec3 n = normalized(raw);
  if (std::fabs(dot(q[3] - q[0], n)) > 1e-6) fail("earthshine corners must be coplanar within 1e-6 m");
  for (int i = 0; i < 4; ++i) {
    const Vec3 e0 = q[(i + 1) % 4] - q[i];
    const Vec3 e1 = q[(i + 2) % 4] - q[(i + 1) % 4];
    if (dot(cross(e0, e1), n) <= 0.0) fail("earthshine quad must be convex");
  }
  if (!(ambient_floor >= 0.0 && ambient_floor <= kMaxAmbientFloor)) fail("ambient_floor must lie in [0, 0.05]");
  if (!(exposure > 0.0)) fail("exposure must be positive");
  if (!(gamma > 0.0)) fail("gamma must be positive");
  if (supersample < 1) fail("supersample must be >= 1");
}

std::string SceneConfig::to_config_text() const {
  std::ostringstream out;
  out << "sun_direction = " << vec_text(sun_direction) << '\n';
  out << "sun_irradiance = " << vec_text(sun_irradiance) << '\n';
  out << "earthshine_quad =";
  for (const Vec3& c : earthshine_quad) out << ' ' << vec_text(c);
  out << '\n';
  out << "earthshine_radiance = " << vec_text(earthshine_radiance) << '\n';
  out << "ambient_floor = " << format_double(ambient_floor) << '\n';
  out << "exposure = " << format_double(exposure) << '\n';
  out << "gamma = " << format_double(gamma) << '\n';
  out << "supersample = " << supersample << '\n';
  out << "default_albedo = " << vec_text(default_albedo) << '\n';
  for (std::size_t k = 0; k < class_albedo.size(); ++k) {
    out << "albedo." << k << " = " << vec_text(class_albedo[k]) << '\n';
  }
  return out.str();
}

SceneConfig parse_scene_config(std::string_view text, std::string_view source) {
  SceneConfig s;
  for (const ConfigEntry& e : parse_config_text(text, source)) {
    const std::string ctx = std::string(source) + ":" + std::to_string(e.line) + ": ";
    const std::vector<double> nums = parse_doubles(e.value, source, e.line);
    const auto need = [&](std::size_t n) {
      if (nums.size() != n) throw ConfigError(ctx + "'" + e.key + "' expects " + std::to_string(n) + " numbers");
    };
    if (e.key == "sun_direction") {
      need(3);
      const Vec3 d = vec_from(nums);
      if (norm(d) == 0.0) throw ConfigError(ctx + "sun_direction must be nonzero");
      s.sun_direction = normalized(d);
    } else if (e.key == "sun_irradiance") {
      need(3);
      s.sun_irradiance = vec_from(nums);
    } else if (e.key == "earthshine_quad") {
      need(12);
      for (int i = 0; i < 4; ++i) s.earthshine_quad[i] = vec_from(nums, 3 * i);
    } else if (e.key == "earthshine_radiance") {
      need(3);
      s.earthshine_radiance = vec_from(nums);
    } else if (e.key == "ambient_floor") {
      need(1);
      s.ambient_floor = nums[0];
    } else if (e.key == "exposure") {
      need(1);
      s.exposure = nums[0];
    } else if (e.key == "gamma") {
      need(1);
      s.gamma = nums[0];
    } else if (e.key == "supersample") {
      s.supersample = static_cast<int>(parse_int(e.value, source, e.line));
    } else if (e.key == "default_albedo") {
      need(3);
      s.default_albedo = vec_from(nums);
    } else if (e.key.rfind("albedo.", 0) == 0) {
      need(3);
      const long long k = parse_int(e.key.substr(7), source, e.line);
      if (k < 0 || k > 255) throw ConfigError(ctx + "albedo class index out of range");
      if (s.class_albedo.size() <= static_cast<std::size_t>(k)) {
        s.class_albedo.resize(static_cast<std::size_t>(k) + 1, s.default_albedo);
      }
      s.class_albedo[static_cast<std::size_t>(k)] = vec_from(nums);
    } else {
      throw ConfigError(ctx + "unknown key '" + e.key + "'");
    }
  }
  try {
    s.validate();
  } catch (const ConfigError& err) {
    throw ConfigError(std::string(source) + ": " + err.what());
  }
  return s;
}

SceneConfig load_scene_config(const std::string& path) { return parse_scene_config(read_text_file(path), path); }

void CameraPose::validate() const {
  if (position == look_at) throw PreconditionError("camera position equals look_at");
  if (!(vertical_fov > 0.0 && vertical_fov < std::numbers::pi)) {
    throw PreconditionError("vertical_fov must lie in (0, pi)");
  }
}

std::vector<CameraPose> sample_poses(const AnnotatedMesh& mesh, const PoseSamplingConfig& cfg, std::uint64_t seed) {
  if (cfg.n_positions < 1) throw PreconditionError("n_positions must be >= 1");
  if (cfg.range_multipliers.empty()) throw PreconditionError("range multipliers must be nonempty");
  for (double m : cfg.range_multipliers) {
    if (!(m >= 1.0)) throw PreconditionError("range multipliers must be >= 1");
  }
  if (!(cfg.base_distance_factor >= 1.0)) throw PreconditionError("base_distance_factor must be >= 1");
  if (!(cfg.jitter >= 0.0)) throw PreconditionError("jitter must be >= 0");

  const BoundingSphere& sphere = mesh.bounding_sphere();
  const double near_distance = cfg.base_distance_factor * sphere.radius;
  const int n = cfg.n_positions;
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const double cell = std::sqrt(4.0 * std::numbers::pi / n);
  Rng rng(derive_seed(seed, 0x706f736573ULL));

  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(n) * cfg.range_multipliers.size());
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    Vec3 dir;
    if (cfg.pattern == PosePattern::uniform_random) {
      const double z = 1.0 - 2.0 * u;
      const double phi = 2.0 * std::numbers::pi * v;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      dir = {r * std::cos(phi), r * std::sin(phi), z};
    } else {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double phi = golden_angle * i;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      dir = {r * std::cos(phi), r * std::sin(phi), z};
      if (cfg.jitter > 0.0) {
        const Vec3 helper = std::fabs(dir.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        const Vec3 t1 = normalized(cross(helper, dir));
        const Vec3 t2 = cross(dir, t1);
        dir = normalized(dir + t1 * ((u - 0.5) * cell * cfg.jitter) + t2 * ((v - 0.5) * cell * cfg.jitter));
      }
    }
    for (std::size_t m = 0; m < cfg.range_multipliers.size(); ++m) {
      CameraPose p;
      p.look_at = sphere.center;
      p.position = sphere.center + dir * (near_distance * cfg.range_multipliers[m]);
      p.up_hint = cfg.up_hint;
      p.vertical_fov = cfg.vertical_fov;
      p.range_tier = static_cast<int>(m) + 1;
      p.pose_id = i;
      poses.push_back(p);
    }
  }
  return poses;
}

std::vector<CameraPose> sample_poses(const AnnotatedMesh& mesh, int n_positions,
                                     const std::vector<double>& range_multipliers, double base_distance_factor,
                                     std::uint64_t seed) {
  PoseSamplingConfig cfg;
  cfg.n_positions = n_positions;
  cfg.range_multipliers = range_multipliers;
  cfg.base_distance_factor = base_distance_factor;
  return sample_poses(mesh, cfg, seed);
}

std::optional<Hit> intersect_triangle(const Ray& ray, Vec3 a, Vec3 b, Vec3 c, std::uint32_t id) {
  return watertight(RaySetup(ray.direction), ray.origin, a, b, c, id);
}

RayCaster::RayCaster(const AnnotatedMesh& mesh) : mesh_(&mesh) {
  const std::size_t n = mesh.triangle_count();
  std::vector<Vec3> centroids(n);
  prims_.resize(n);
  for (std::uint32_t t = 0; t < n; ++t) {
    centroids[t] = (mesh.vertex(t, 0) + mesh.vertex(t, 1) + mesh.vertex(t, 2)) / 3.0;
    prims_[t] = t;
  }
  nodes_.reserve(2 * n / 4 + 1);
  build(0, static_cast<std::uint32_t>(n), centroids);
}

std::uint32_t RayCaster::build(std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& centroids) {
  const std::uint32_t index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, centroid_box;
  for (std::uint32_t i = begin; i < end; ++i) {
    const std::uint32_t t = prims_[i];
    for (int c = 0; c < 3; ++c) box.expand(mesh_->vertex(t, c));
    centroid_box.expand(centroids[t]);
  }
  nodes_[index].box = box;

  const Vec3 ext = centroid_box.extent();
  const int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
  if (end - begin <= 4 || ext[axis] <= 0.0) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  // (centroid, id) is a total order, so the partition is reproducible.
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(prims_.begin() + begin, prims_.begin() + mid, prims_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroids[a][axis], cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  build(begin, mid, centroids);
  const std::uint32_t right = build(mid, end, centroids);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

std::optional<Hit> RayCaster::intersect(const Ray& ray) const {
  const RaySetup rs(ray.direction);
  const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
  std::optional<Hit> best;
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    const double limit = best ? best->t + kTieDistance : HUGE_VAL;
    if (!hits_box(node.box, ray.origin, inv, limit)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t t = prims_[i];
        auto h = watertight(rs, ray.origin, mesh_->vertex(t, 0), mesh_->vertex(t, 1), mesh_->vertex(t, 2), t);
        if (h && closer(*h, best)) best = h;
      }
    } else {
      const std::uint32_t self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;  // right
      stack[top++] = self + 1;    // left first
    }
  }
  return best;
}

bool RayCaster::occluded(const Ray& ray, double max_t) const {
  const RaySetup rs(ray.direction);
  const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!hits_box(node.box, ray.origin, inv, max_t)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t t = prims_[i];
        auto h = watertight(rs, ray.origin, mesh_->vertex(t, 0), mesh_->vertex(t, 1), mesh_->vertex(t, 2), t);
        if (h && h->t < max_t) return true;
      }
    } else {
      const std::uint32_t self = static_cast<std::uint32_t>(&node - nodes_.data());
      stack[top++] = node.first;
      stack[top++] = self + 1;
    }
  }
  return false;
}

std::optional<Hit> intersect(const Ray& ray, const AnnotatedMesh& mesh) {
  const RaySetup rs(ray.direction);
  std::optional<Hit> best;
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    auto h = watertight(rs, ray.origin, mesh.vertex(t, 0), mesh.vertex(t, 1), mesh.vertex(t, 2), t);
    if (h && closer(*h, best)) best = h;
  }
  return best;
}

Camera::Camera(const CameraPose& pose, int width, int height)
    : origin_(pose.position), width_(width), height_(height) {
  forward_ = normalized(pose.look_at - pose.position);
  Vec3 side = cross(forward_, pose.up_hint);
  if (norm(side) < 1e-9) side = cross(forward_, Vec3{0, 1, 0});
  if (norm(side) < 1e-9) side = cross(forward_, Vec3{1, 0, 0});
  right_ = normalized(side);
  up_ = cross(right_, forward_);
  tan_half_ = std::tan(pose.vertical_fov / 2.0);
  aspect_ = double(width) / double(height);
}

Ray Camera::ray_through(double row, double col) const {
  const double x = (2.0 * col / width_ - 1.0) * tan_half_ * aspect_;
  const double y = (1.0 - 2.0 * row / height_) * tan_half_;
  return {origin_, normalized(forward_ + right_ * x + up_ * y)};
}

Vec3 shade_hit(const RayCaster& caster, const SceneConfig& scene, const Ray& ray, const Hit& hit) {
  return detail::shade(caster.mesh(), scene, ray, hit,
                       [&](const Ray& r, double max_t) { return caster.occluded(r, max_t); });
}

Rgb8 tone_map(const SceneConfig& scene, Vec3 radiance) {
  const auto encode = [&](double v) {
    v = std::clamp(v * scene.exposure, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(std::pow(v, 1.0 / scene.gamma) * 255.0));
  };
  return {encode(radiance.x), encode(radiance.y), encode(radiance.z)};
}

RenderedPair render_pair(const RayCaster& caster, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed) {
  return render_impl(caster, scene, pose, width, height, taxonomy, seed, true);
}

RenderedPair render_pair_serial(const RayCaster& caster, const SceneConfig& scene, const CameraPose& pose,
                                int width, int height, const ClassTaxonomy& taxonomy, std::uint64_t seed) {
  return render_impl(caster, scene, pose, width, height, taxonomy, seed, false);
}

RenderedPair render_pair(const AnnotatedMesh& mesh, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed) {
  const RayCaster caster(mesh);
  return render_pair(caster, scene, pose, width, height, taxonomy, seed);
}

std::size_t registration_mismatches(const RayCaster& caster, const CameraPose& pose, const CategoricalMask& mask,
                                    ClassIndex background) {
  const Camera camera(pose, mask.width, mask.height);
  std::size_t mismatches = 0;
#pragma omp parallel for reduction(+ : mismatches) schedule(dynamic, 4)
  for (int row = 0; row < mask.height; ++row) {
    for (int col = 0; col < mask.width; ++col) {
      const bool hit = caster.intersect(camera.primary_ray(row, col)).has_value();
      if (hit != (mask.at(row, col) != background)) ++mismatches;
    }
  }
  return mismatches;
}

}  // namespace orbseg
