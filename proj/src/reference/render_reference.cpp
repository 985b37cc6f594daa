#include <algorithm>

#include "../shading.hpp"
#include "orbseg/error.hpp"
#include "orbseg/scene_render.hpp"

namespace orbseg::reference {
namespace {

bool occluded_brute(const AnnotatedMesh& mesh, const Ray& ray, double max_t) {
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) {
    auto h = intersect_triangle(ray, mesh.vertex(t, 0), mesh.vertex(t, 1), mesh.vertex(t, 2), t);
    if (h && h->t < max_t) return true;
  }
  return false;
}

}  // namespace

RenderedPair render_pair(const AnnotatedMesh& mesh, const SceneConfig& scene, const CameraPose& pose, int width,
                         int height, const ClassTaxonomy& taxonomy, std::uint64_t seed) {
  if (width < 1 || height < 1) throw PreconditionError("render size must be at least 1x1");
  pose.validate();
  const Camera camera(pose, width, height);
  const int ss = std::max(1, scene.supersample);
  const auto occluded = [&](const Ray& r, double max_t) { return occluded_brute(mesh, r, max_t); };

  RenderedPair out{RgbImage(width, height), CategoricalMask(width, height, taxonomy.background_index()), pose,
                   seed};
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const Ray ray = camera.primary_ray(row, col);
      const std::optional<Hit> hit = intersect(ray, mesh);
      if (hit) out.mask.set(row, col, mesh.face_class()[hit->triangle]);
      Vec3 radiance{};
      for (int i = 0; i < ss; ++i) {
        for (int j = 0; j < ss; ++j) {
          const Ray sub = ss == 1 ? ray
                                  : camera.ray_through(row + detail::subpixel(i, ss), col + detail::subpixel(j, ss));
          const std::optional<Hit> h = ss == 1 ? hit : intersect(sub, mesh);
          if (h) radiance += detail::shade(mesh, scene, sub, *h, occluded);
        }
      }
      if (ss > 1) radiance = radiance / double(ss * ss);
      out.rgb.set(row, col, tone_map(scene, radiance));
    }
  }
  return out;
}

}  // namespace orbseg::reference
