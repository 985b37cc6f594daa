#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orbseg/image.hpp"
#include "orbseg/taxonomy.hpp"
#include "orbseg/vec3.hpp"

namespace orbseg {

using TriangleIndices = std::array<std::uint32_t, 3>;

struct BoundingSphere {
  Vec3 center;
  double radius = 0.0;
};

// Radius floor for point-like meshes, in meters.
inline constexpr double kMinSphereRadius = 1e-6;
// Triangles with area at or below this (m^2) are dropped as degenerate.
inline constexpr double kDegenerateArea = 1e-12;

// Triangle mesh whose faces each carry a non-background class index. Shared
// read-only by the image and mask passes.
class AnnotatedMesh {
 public:
  // Validates indices and classes against `taxonomy`, drops degenerate
  // triangles (counted in dropped_degenerate()), and throws ConfigError if no
  // triangle survives.
  static AnnotatedMesh create(std::vector<Vec3> vertices, std::vector<TriangleIndices> triangles,
                              std::vector<ClassIndex> face_class, const ClassTaxonomy& taxonomy);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<TriangleIndices>& triangles() const { return triangles_; }
  const std::vector<ClassIndex>& face_class() const { return face_class_; }
  std::size_t triangle_count() const { return triangles_.size(); }
  const Aabb& bounds() const { return bounds_; }
  const BoundingSphere& bounding_sphere() const { return sphere_; }
  std::size_t dropped_degenerate() const { return dropped_; }

  Vec3 vertex(std::uint32_t tri, int corner) const { return vertices_[triangles_[tri][corner]]; }
  // Unit geometric normal from counter-clockwise winding.
  Vec3 face_normal(std::uint32_t tri) const;
  double face_area(std::uint32_t tri) const;
  double surface_area() const;

  // Fingerprint of geometry and labels, stable across runs.
  std::uint64_t content_hash() const;

 private:
  AnnotatedMesh() = default;
  std::vector<Vec3> vertices_;
  std::vector<TriangleIndices> triangles_;
  std::vector<ClassIndex> face_class_;
  Aabb bounds_;
  BoundingSphere sphere_;
  std::size_t dropped_ = 0;
};

// Maps material or group names to class indices, with an optional `*` fallback.
struct MaterialClassMap {
  std::map<std::string, ClassIndex, std::less<>> entries;
  std::optional<ClassIndex> wildcard;

  std::optional<ClassIndex> find(std::string_view name) const;
};

// One `name -> class` record per line (`=` also accepted). The right-hand side
// is a class index or a class name from the taxonomy.
MaterialClassMap parse_material_map(std::string_view text, std::string_view source, const ClassTaxonomy& taxonomy);
MaterialClassMap load_material_map(const std::string& path, const ClassTaxonomy& taxonomy);

// Parses Wavefront-style geometry (v / f records plus usemtl / g / o). Each
// face is labelled by its material if the map has it, otherwise by its group
// names, otherwise by the `*` fallback. Polygons are fan-triangulated from
// their first vertex.
AnnotatedMesh parse_annotated_mesh(std::string_view text, std::string_view source, const MaterialClassMap& map,
                                   const ClassTaxonomy& taxonomy);
AnnotatedMesh load_annotated_mesh(const std::string& path, const MaterialClassMap& map,
                                  const ClassTaxonomy& taxonomy);

// Ritter-style enclosing sphere, refined against the box-centered sphere and
// padded to contain every point exactly. Radius is at least kMinSphereRadius.
BoundingSphere compute_bounding_sphere(std::span<const Vec3> points);
inline BoundingSphere compute_bounding_sphere(const AnnotatedMesh& mesh) {
  return compute_bounding_sphere(mesh.vertices());
}

// Writes the mesh as OBJ with one material per class and the matching class
// map text (material names are the class names with spaces replaced by '_').
std::string to_obj_text(const AnnotatedMesh& mesh, const ClassTaxonomy& taxonomy);
std::string to_material_map_text(const AnnotatedMesh& mesh, const ClassTaxonomy& taxonomy);
std::string material_name_for(const ClassDef& c);

}  // namespace orbseg
