#include "orbseg/primitives.hpp"

#include <cmath>
#include <numbers>

#include "orbseg/error.hpp"

namespace orbseg {
namespace {

// Right-handed frame (e1, e2, axis).
void orthonormal_frame(Vec3 axis, Vec3& e1, Vec3& e2) {
  const Vec3 helper = std::fabs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  e1 = normalized(cross(helper, axis));
  e2 = cross(axis, e1);
}

}  // namespace

std::uint32_t MeshBuilder::push(Vec3 v) {
  vertices_.push_back(v);
  return static_cast<std::uint32_t>(vertices_.size() - 1);
}

void MeshBuilder::push_triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, ClassIndex cls) {
  triangles_.push_back({a, b, c});
  classes_.push_back(cls);
}

void MeshBuilder::add_grid(Vec3 origin, Vec3 u, Vec3 v, int nu, int nv, ClassIndex cls) {
  const std::uint32_t first = static_cast<std::uint32_t>(vertices_.size());
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) push(origin + u * (double(i) / nu) + v * (double(j) / nv));
  }
  const auto at = [&](int i, int j) { return first + static_cast<std::uint32_t>(j * (nu + 1) + i); };
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      push_triangle(at(i, j), at(i + 1, j), at(i + 1, j + 1), cls);
      push_triangle(at(i, j), at(i + 1, j + 1), at(i, j + 1), cls);
    }
  }
}

void MeshBuilder::add_box(Vec3 c, Vec3 h, ClassIndex cls, int subdiv) {
  const Vec3 X{2 * h.x, 0, 0}, Y{0, 2 * h.y, 0}, Z{0, 0, 2 * h.z};
  const Vec3 lo = c - h;
  add_grid({c.x + h.x, lo.y, lo.z}, Y, Z, subdiv, subdiv, cls);  // +x
  add_grid(lo, Z, Y, subdiv, subdiv, cls);                         // -x
  add_grid({lo.x, c.y + h.y, lo.z}, Z, X, subdiv, subdiv, cls);  // +y
  add_grid(lo, X, Z, subdiv, subdiv, cls);                         // -y
  add_grid({lo.x, lo.y, c.z + h.z}, X, Y, subdiv, subdiv, cls);  // +z
  add_grid(lo, Y, X, subdiv, subdiv, cls);                         // -z
}

void MeshBuilder::add_revolved(const std::vector<std::pair<double, double>>& profile, Vec3 base, Vec3 axis,
                               int segments, ClassIndex cls) {
  if (profile.size() < 2 || segments < 3) throw PreconditionError("revolved surface needs 2 points, 3 segments");
  axis = normalized(axis);
  Vec3 e1, e2;
  orthonormal_frame(axis, e1, e2);

  // Ring vertex ids; a pole ring holds one shared vertex.
  std::vector<std::vector<std::uint32_t>> rings;
  for (const auto& [r, hgt] : profile) {
    std::vector<std::uint32_t> ring;
    if (r == 0.0) {
      ring.assign(segments, push(base + axis * hgt));
    } else {
      for (int s = 0; s < segments; ++s) {
        const double phi = 2.0 * std::numbers::pi * s / segments;
        ring.push_back(push(base + e1 * (r * std::cos(phi)) + e2 * (r * std::sin(phi)) + axis * hgt));
      }
    }
    rings.push_back(std::move(ring));
  }
  for (std::size_t k = 0; k + 1 < rings.size(); ++k) {
    const bool a_pole = profile[k].first == 0.0;
    const bool b_pole = profile[k + 1].first == 0.0;
    if (a_pole && b_pole) continue;
    for (int s = 0; s < segments; ++s) {
      const int t = (s + 1) % segments;
      const std::uint32_t a0 = rings[k][s], a1 = rings[k][t];
      const std::uint32_t b0 = rings[k + 1][s], b1 = rings[k + 1][t];
      if (!b_pole) push_triangle(a0, b0, b1, cls);
      if (!a_pole) push_triangle(a0, b1, a1, cls);
    }
  }
}

void MeshBuilder::add_uv_sphere(Vec3 center, double radius, int segments, int rings, ClassIndex cls) {
  std::vector<std::pair<double, double>> profile;
  for (int i = 0; i <= rings; ++i) {
    const double theta = std::numbers::pi * i / rings;
    const double r = (i == 0 || i == rings) ? 0.0 : radius * std::sin(theta);
    profile.emplace_back(r, radius * std::cos(theta));
  }
  add_revolved(profile, center, {0, 0, 1}, segments, cls);
}

void MeshBuilder::add_cylinder(Vec3 base, Vec3 axis, double radius, double length, int segments, ClassIndex cls) {
  add_revolved({{0.0, length}, {radius, length}, {radius, 0.0}, {0.0, 0.0}}, base, axis, segments, cls);
}

void MeshBuilder::add_cone(Vec3 base, Vec3 axis, double radius, double length, int segments, ClassIndex cls) {
  add_revolved({{0.0, length}, {radius, 0.0}, {0.0, 0.0}}, base, axis, segments, cls);
}

void MeshBuilder::add_dish(Vec3 vertex, Vec3 axis, double radius, double depth, int segments, int rings,
                           ClassIndex cls) {
  // Rim first (highest), down to the vertex of the paraboloid.
  std::vector<std::pair<double, double>> profile;
  for (int i = rings; i >= 0; --i) {
    const double r = radius * i / rings;
    profile.emplace_back(r, depth * (r / radius) * (r / radius));
  }
  add_revolved(profile, vertex, axis, segments, cls);
}

AnnotatedMesh MeshBuilder::build(const ClassTaxonomy& taxonomy) const {
  return AnnotatedMesh::create(vertices_, triangles_, classes_, taxonomy);
}

std::string demo_spacecraft_name(int variant) {
  static const char* const kNames[kDemoSpacecraftCount] = {"observatory", "dish_probe", "drum", "octagon",
                                                           "compact"};
  if (variant < 0 || variant >= kDemoSpacecraftCount) throw PreconditionError("unknown demo spacecraft variant");
  return kNames[variant];
}

AnnotatedMesh make_demo_spacecraft(int variant, int detail, const ClassTaxonomy& taxonomy) {
  if (detail < 1) throw PreconditionError("detail must be >= 1");
  if (taxonomy.size() < 11) throw PreconditionError("demo spacecraft need the 11-class taxonomy");
  constexpr ClassIndex kMain = 1, kPanel = 2, kSensor = 3, kThruster = 4, kReflector = 5, kAdapter = 6,
                       kAntenna = 7, kRadiator = 8, kBoom = 9;
  const int seg = 12 * detail;
  const int grid = 4 * detail;
  MeshBuilder b;
  switch (variant) {
    case 0:  // long cylindrical body with a pair of wings
      b.add_cylinder({0, 0, -2.0}, {0, 0, 1}, 0.6, 4.0, seg, kMain);
      b.add_box({0, 0, 2.15}, {0.35, 0.35, 0.15}, kSensor, detail);
      b.add_grid({0.6, -0.05, -1.0}, {2.5, 0, 0}, {0, 0, 1.4}, grid, grid, kPanel);
      b.add_grid({0.6, 0.05, -1.0}, {0, 0, 1.4}, {2.5, 0, 0}, grid, grid, kPanel);
      b.add_grid({-3.1, -0.05, -1.0}, {2.5, 0, 0}, {0, 0, 1.4}, grid, grid, kPanel);
      b.add_grid({-3.1, 0.05, -1.0}, {0, 0, 1.4}, {2.5, 0, 0}, grid, grid, kPanel);
      for (int i = 0; i < 4; ++i) {
        const double a = std::numbers::pi / 2 * i + std::numbers::pi / 4;
        b.add_cone({0.4 * std::cos(a), 0.4 * std::sin(a), -2.0}, {0, 0, -1}, 0.12, 0.3, seg / 2, kThruster);
      }
      b.add_cylinder({0, 0, -2.35}, {0, 0, 1}, 0.35, 0.35, seg, kAdapter);
      b.add_box({0, 0.75, 0.5}, {0.3, 0.15, 0.8}, kRadiator, detail);
      break;
    case 1:  // box bus with a high-gain dish
      b.add_box({0, 0, 0}, {0.8, 0.8, 0.6}, kMain, 2 * detail);
      b.add_dish({0, 0, 0.65}, {0, 0, 1}, 1.0, 0.3, seg, 3 * detail, kReflector);
      b.add_cylinder({0, 0, 0.6}, {0, 0, 1}, 0.08, 0.5, seg / 2, kBoom);
      for (int i = 0; i < 4; ++i) {
        const double a = std::numbers::pi / 2 * i;
        const Vec3 dir{std::cos(a), std::sin(a), 0};
        const Vec3 side{-dir.y, dir.x, 0};
        b.add_grid(dir * 0.8 + Vec3{0, 0, -0.5} - side * 0.6, dir * 1.6, side * 1.2, grid, grid, kPanel);
      }
      b.add_cone({0, 0, -0.6}, {0, 0, -1}, 0.2, 0.35, seg / 2, kThruster);
      b.add_box({0.5, 0.5, -0.75}, {0.1, 0.1, 0.15}, kSensor, detail);
      break;
    case 2:  // spin-stabilized drum with booms
      b.add_cylinder({0, 0, -0.6}, {0, 0, 1}, 1.2, 1.2, 2 * seg, kPanel);
      b.add_cylinder({0, 0, 0.6}, {0, 0, 1}, 0.5, 0.3, seg, kMain);
      for (int i = 0; i < 4; ++i) {
        const double a = std::numbers::pi / 2 * i;
        b.add_cylinder({1.2 * std::cos(a), 1.2 * std::sin(a), 0}, {std::cos(a), std::sin(a), 0}, 0.03, 1.8, 8,
                       kBoom);
      }
      b.add_cylinder({0, 0, 0.9}, {0, 0, 1}, 0.05, 0.9, 8, kAntenna);
      b.add_cylinder({0, 0, -0.9}, {0, 0, 1}, 0.6, 0.3, seg, kAdapter);
      b.add_box({0.0, 0.0, -1.0}, {0.15, 0.15, 0.1}, kThruster, detail);
      break;
    case 3:  // flat octagonal prism with a top panel
      b.add_cylinder({0, 0, -0.5}, {0, 0, 1}, 1.1, 0.8, 8, kMain);
      b.add_cylinder({0, 0, 0.3}, {0, 0, 1}, 1.0, 0.05, 8 * detail, kPanel);
      b.add_cylinder({0, 0, 0.35}, {0, 0, 1}, 0.25, 0.4, seg, kSensor);
      b.add_cylinder({0, 0, -0.8}, {0, 0, 1}, 0.45, 0.3, seg, kAdapter);
      for (int i = 0; i < 3; ++i) {
        const double a = 2 * std::numbers::pi / 3 * i;
        b.add_cone({0.8 * std::cos(a), 0.8 * std::sin(a), -0.5}, {0, 0, -1}, 0.1, 0.25, seg / 2, kThruster);
      }
      b.add_uv_sphere({0.9, 0.0, 0.45}, 0.12, seg, seg / 2, kAntenna);
      break;
    case 4:  // compact box with a side dish, held out in demos
      b.add_box({0, 0, 0}, {0.5, 0.7, 0.9}, kMain, 2 * detail);
      b.add_grid({0.5, -0.05, -0.6}, {2.0, 0, 0}, {0, 0, 1.2}, grid, grid, kPanel);
      b.add_grid({0.5, 0.05, -0.6}, {0, 0, 1.2}, {2.0, 0, 0}, grid, grid, kPanel);
      b.add_dish({0, 0.75, 0.2}, {0, 1, 0}, 0.5, 0.15, seg, 2 * detail, kReflector);
      b.add_cylinder({0, 0, 0.9}, {0, 0, 1}, 0.15, 0.3, seg, kSensor);
      b.add_cone({0, 0, -0.9}, {0, 0, -1}, 0.15, 0.3, seg / 2, kThruster);
      b.add_cylinder({0, 0, -1.2}, {0, 0, 1}, 0.3, 0.2, seg, kAdapter);
      break;
    default:
      throw PreconditionError("unknown demo spacecraft variant");
  }
  return b.build(taxonomy);
}

AnnotatedMesh make_toy_mesh(const ClassTaxonomy& taxonomy) {
  MeshBuilder b;
  b.add_box({0, 0, 0}, {0.6, 0.6, 0.6}, 1);
  b.add_grid({0.6, -0.03, -0.4}, {1.6, 0, 0}, {0, 0, 0.8}, 1, 1, 2);
  b.add_grid({0.6, 0.03, -0.4}, {0, 0, 0.8}, {1.6, 0, 0}, 1, 1, 2);
  return b.build(taxonomy);
}

}  // namespace orbseg
