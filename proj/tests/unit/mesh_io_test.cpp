#include "orbseg/mesh_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "orbseg/error.hpp"
#include "orbseg/primitives.hpp"
#include "orbseg/taxonomy.hpp"

namespace orbseg {
namespace {

// Unit cube [0,1]^3 as six outward quads, all in one material.
const char* kCubeObj = R"(# unit cube
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
usemtl hull
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
)";

MaterialClassMap map_of(const std::string& text) { return parse_material_map(text, "map", default_taxonomy()); }

TEST(LoadMesh, UnitCubeHasTwelveTrianglesOfOneClass) {
  const ClassTaxonomy t = default_taxonomy();
  const AnnotatedMesh mesh = parse_annotated_mesh(kCubeObj, "cube.obj", map_of("hull -> 3\n"), t);
  EXPECT_EQ(mesh.triangle_count(), 12u);
  for (ClassIndex c : mesh.face_class()) EXPECT_EQ(c, 3);
  EXPECT_NEAR(mesh.bounding_sphere().radius, std::sqrt(3.0) / 2.0, 1e-9);
  EXPECT_NEAR(mesh.surface_area(), 6.0, 1e-12);
}

TEST(LoadMesh, CubeNormalsPointOutward) {
  const AnnotatedMesh mesh = parse_annotated_mesh(kCubeObj, "cube.obj", map_of("hull -> 3\n"), default_taxonomy());
  const Vec3 center{0.5, 0.5, 0.5};
  for (std::uint32_t i = 0; i < mesh.triangle_count(); ++i) {
    const Vec3 centroid = (mesh.vertex(i, 0) + mesh.vertex(i, 1) + mesh.vertex(i, 2)) / 3.0;
    EXPECT_GT(dot(mesh.face_normal(i), centroid - center), 0.0) << "triangle " << i;
  }
}

TEST(LoadMesh, UnmappedMaterialErrorNamesIt) {
  const std::string obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nusemtl antenna_v2\nf 1 2 3\n";
  try {
    parse_annotated_mesh(obj, "m.obj", map_of("hull -> 3\n"), default_taxonomy());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("antenna_v2"), std::string::npos) << e.what();
  }
}

TEST(LoadMesh, QuadBecomesTwoTrianglesOfItsClass) {
  const std::string obj = "v 0 0 0\nv 2 0 0\nv 2 1 0\nv 0 1 0\nusemtl panel\nf 1 2 3 4\n";
  const AnnotatedMesh mesh = parse_annotated_mesh(obj, "q.obj", map_of("panel -> 2\n"), default_taxonomy());
  ASSERT_EQ(mesh.triangle_count(), 2u);
  EXPECT_EQ(mesh.face_class()[0], 2);
  EXPECT_EQ(mesh.face_class()[1], 2);
  EXPECT_NEAR(mesh.surface_area(), 2.0, 1e-12);
}

TEST(LoadMesh, FanTriangulationPreservesPlanarPolygonArea) {
  // Regular hexagon of circumradius 1 in a tilted plane.
  std::string obj;
  const Vec3 u = normalized(Vec3{1, 1, 0}), v = normalized(Vec3{-1, 1, 2});
  for (int i = 0; i < 6; ++i) {
    const double a = i * std::acos(-1.0) / 3.0;
    const Vec3 p = u * std::cos(a) + v * std::sin(a) + Vec3{3, -2, 1};
    obj += "v " + std::to_string(p.x) + " " + std::to_string(p.y) + " " + std::to_string(p.z) + "\n";
  }
  obj += "g panel\nf 1 2 3 4 5 6\n";
  const AnnotatedMesh mesh = parse_annotated_mesh(obj, "hex.obj", map_of("panel = 2\n"), default_taxonomy());
  EXPECT_EQ(mesh.triangle_count(), 4u);
  // Area of the polygon through the (rounded) vertices, by the shoelace sum.
  Vec3 twice_area{0, 0, 0};
  for (std::size_t i = 0; i < mesh.vertices().size(); ++i) {
    twice_area += cross(mesh.vertices()[i], mesh.vertices()[(i + 1) % mesh.vertices().size()]);
  }
  EXPECT_NEAR(mesh.surface_area(), norm(twice_area) / 2.0, 1e-9 * mesh.surface_area());
}

TEST(LoadMesh, ResolvesMaterialThenGroupThenWildcard) {
  const std::string obj =
      "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
      "g boom_arm\nusemtl steel\nf 1 2 3\n"   // material wins
      "usemtl unknown\nf 1 2 4\n"            // falls to group
      "g other\nf 1 3 4\n";                  // falls to wildcard
  const AnnotatedMesh mesh =
      parse_annotated_mesh(obj, "m.obj", map_of("steel -> 1\nboom_arm -> boom\n* -> 10\n"), default_taxonomy());
  ASSERT_EQ(mesh.triangle_count(), 3u);
  EXPECT_EQ(mesh.face_class()[0], 1);
  EXPECT_EQ(mesh.face_class()[1], 9);
  EXPECT_EQ(mesh.face_class()[2], 10);
}

TEST(LoadMesh, HandlesSlashFormsAndNegativeIndices) {
  const std::string obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nusemtl a\nf -3/1/1 -2/1/1 -1/1/1\nf 1//1 2//1 3//1\n";
  const AnnotatedMesh mesh = parse_annotated_mesh(obj, "m.obj", map_of("a -> 1\n"), default_taxonomy());
  EXPECT_EQ(mesh.triangle_count(), 2u);
}

TEST(LoadMesh, DropsDegenerateTrianglesAndCountsThem) {
  const std::string obj = "v 0 0 0\nv 1 0 0\nv 2 0 0\nv 0 1 0\nusemtl a\nf 1 2 3\nf 1 2 4\n";
  const AnnotatedMesh mesh = parse_annotated_mesh(obj, "m.obj", map_of("a -> 1\n"), default_taxonomy());
  EXPECT_EQ(mesh.triangle_count(), 1u);
  EXPECT_EQ(mesh.dropped_degenerate(), 1u);
}

TEST(LoadMesh, RejectsEmptyAndInvalidInput) {
  const ClassTaxonomy t = default_taxonomy();
  const MaterialClassMap map = map_of("a -> 1\n");
  EXPECT_THROW(parse_annotated_mesh("v 0 0 0\n", "m.obj", map, t), ConfigError);
  EXPECT_THROW(parse_annotated_mesh("v 0 0 0\nv 1 0 0\nv 2 0 0\nusemtl a\nf 1 2 3\n", "m.obj", map, t), ConfigError);
  EXPECT_THROW(parse_annotated_mesh("v 0 0 0\nv 1 0 0\nv 0 1 0\nusemtl a\nf 1 2 7\n", "m.obj", map, t), ConfigError);
  EXPECT_THROW(parse_annotated_mesh("v 0 0 nan\nv 1 0 0\nv 0 1 0\nusemtl a\nf 1 2 3\n", "m.obj", map, t),
               ConfigError);
}

TEST(MaterialMap, RejectsBackgroundAndUnknownClasses) {
  const ClassTaxonomy t = default_taxonomy();
  EXPECT_THROW(parse_material_map("a -> 0\n", "map", t), ConfigError);
  EXPECT_THROW(parse_material_map("a -> background\n", "map", t), ConfigError);
  EXPECT_THROW(parse_material_map("a -> 11\n", "map", t), ConfigError);
  EXPECT_THROW(parse_material_map("a -> wing\n", "map", t), ConfigError);
  const MaterialClassMap m = parse_material_map("a -> solar panel\n* -> 1\n", "map", t);
  EXPECT_EQ(m.find("a"), ClassIndex{2});
  EXPECT_EQ(m.find("zzz"), std::nullopt);
  EXPECT_EQ(m.wildcard, ClassIndex{1});
}

TEST(AnnotatedMesh, RejectsBackgroundFaces) {
  EXPECT_THROW(AnnotatedMesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}, {0}, default_taxonomy()),
               ConfigError);
}

TEST(BoundingSphere, SinglePointGetsRadiusFloor) {
  const std::vector<Vec3> pts{{0, 0, 0}};
  const BoundingSphere s = compute_bounding_sphere(pts);
  EXPECT_EQ(s.center, (Vec3{0, 0, 0}));
  EXPECT_EQ(s.radius, kMinSphereRadius);
}

TEST(BoundingSphere, TwoPointsAreCenteredBetweenThem) {
  const std::vector<Vec3> pts{{-1, 0, 0}, {1, 0, 0}};
  const BoundingSphere s = compute_bounding_sphere(pts);
  EXPECT_NEAR(norm(s.center), 0.0, 1e-12);
  EXPECT_NEAR(s.radius, 1.0, 0.1);
}

TEST(BoundingSphere, UnitCubeWithinTenPercentOfMinimal) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  const BoundingSphere s = compute_bounding_sphere(pts);
  EXPECT_GE(s.radius, std::sqrt(3.0) / 2.0);
  EXPECT_LE(s.radius, 1.1 * std::sqrt(3.0) / 2.0);
}

TEST(BoundingSphere, ContainsEveryPointOfRandomClouds) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts(1 + trial * 7);
    for (Vec3& p : pts) p = {nd(gen), nd(gen) * 0.2, nd(gen) + 5.0};
    const BoundingSphere s = compute_bounding_sphere(pts);
    for (const Vec3& p : pts) EXPECT_LE(norm(p - s.center), s.radius);
  }
}

TEST(ObjExport, RoundTripsThroughTheLoader) {
  const ClassTaxonomy t = default_taxonomy();
  for (int v = 0; v < kDemoSpacecraftCount; ++v) {
    const AnnotatedMesh mesh = make_demo_spacecraft(v, 1, t);
    const MaterialClassMap map = parse_material_map(to_material_map_text(mesh, t), "map", t);
    const AnnotatedMesh back = parse_annotated_mesh(to_obj_text(mesh, t), "rt.obj", map, t);
    EXPECT_EQ(back.triangle_count(), mesh.triangle_count());
    EXPECT_EQ(back.face_class(), mesh.face_class());
    EXPECT_EQ(back.content_hash(), mesh.content_hash()) << demo_spacecraft_name(v);
  }
}

TEST(DemoSpacecraft, StaysUnderTwentyThousandTrianglesAtDetailFour) {
  const ClassTaxonomy t = default_taxonomy();
  for (int v = 0; v < kDemoSpacecraftCount; ++v) {
    const AnnotatedMesh mesh = make_demo_spacecraft(v, 4, t);
    EXPECT_LT(mesh.triangle_count(), 20000u) << demo_spacecraft_name(v);
    EXPECT_EQ(mesh.dropped_degenerate(), 0u) << demo_spacecraft_name(v);
  }
}

}  // namespace
}  // namespace orbseg
