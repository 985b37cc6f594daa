#pragma once

#include <string>
#include <utility>
#include <vector>

#include "orbseg/mesh_io.hpp"

namespace orbseg {

// Accumulates labelled triangles from simple solids. All solids are emitted
// with counter-clockwise (outward) winding.
class MeshBuilder {
 public:
  // Planar grid spanning origin + [0,1]u + [0,1]v; faces along cross(u, v).
  void add_grid(Vec3 origin, Vec3 u, Vec3 v, int nu, int nv, ClassIndex cls);
  // Axis-aligned box; each face is subdivided into `subdiv` x `subdiv` cells.
  void add_box(Vec3 center, Vec3 half_extent, ClassIndex cls, int subdiv = 1);
  // Surface of revolution about `axis` through `base`. Profile points are
  // (radius, height) pairs ordered by non-increasing height; radius 0 closes a
  // pole.
  void add_revolved(const std::vector<std::pair<double, double>>& profile, Vec3 base, Vec3 axis, int segments,
                    ClassIndex cls);
  void add_uv_sphere(Vec3 center, double radius, int segments, int rings, ClassIndex cls);
  // Closed cylinder from base along axis.
  void add_cylinder(Vec3 base, Vec3 axis, double radius, double length, int segments, ClassIndex cls);
  // Closed cone with its apex at base + axis * length.
  void add_cone(Vec3 base, Vec3 axis, double radius, double length, int segments, ClassIndex cls);
  // Open paraboloid shell opening along axis.
  void add_dish(Vec3 vertex, Vec3 axis, double radius, double depth, int segments, int rings, ClassIndex cls);

  std::size_t triangle_count() const { return triangles_.size(); }
  AnnotatedMesh build(const ClassTaxonomy& taxonomy) const;

 private:
  std::uint32_t push(Vec3 v);
  void push_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, ClassIndex cls);

  std::vector<Vec3> vertices_;
  std::vector<TriangleIndices> triangles_;
  std::vector<ClassIndex> classes_;
};

// Procedural stand-ins for the spacecraft models. Labels use the default
// taxonomy's class indices. `detail` scales tessellation; detail 4 keeps
// every variant below 20k triangles.
inline constexpr int kDemoSpacecraftCount = 5;
std::string demo_spacecraft_name(int variant);
AnnotatedMesh make_demo_spacecraft(int variant, int detail, const ClassTaxonomy& taxonomy);

// Two-component scene (a box body and a flat panel) used for the learning
// check. Classes 1 and 2 of the taxonomy.
AnnotatedMesh make_toy_mesh(const ClassTaxonomy& taxonomy);

}  // namespace orbseg
