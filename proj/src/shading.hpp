#pragma once

// Shared by the BVH renderer and the brute-force reference so both shade a
// hit with identical arithmetic.

#include <algorithm>
#include <cmath>

#include "orbseg/scene_render.hpp"

namespace orbseg::detail {

// Distance the shadow-ray origin is pushed off the surface.
inline double shadow_offset(const AnnotatedMesh& mesh) {
  return 1e-5 * std::max(1.0, mesh.bounding_sphere().radius);
}

template <class Occluded>
Vec3 shade(const AnnotatedMesh& mesh, const SceneConfig& scene, const Ray& ray, const Hit& hit,
           Occluded&& occluded) {
  const Vec3 p = ray.origin + ray.direction * hit.t;
  Vec3 n = mesh.face_normal(hit.triangle);
  if (dot(n, ray.direction) > 0.0) n = -n;  // two-sided surfaces
  const Vec3 albedo = scene.albedo(mesh.face_class()[hit.triangle]);

  Vec3 radiance = albedo * scene.ambient_floor;

  const double cos_sun = dot(n, scene.sun_direction);
  if (cos_sun > 0.0) {
    const Ray shadow{p + n * shadow_offset(mesh), scene.sun_direction};
    if (!occluded(shadow, HUGE_VAL)) radiance += hadamard(albedo, scene.sun_irradiance) * cos_sun;
  }

  // Earthshine: centroid plus four corners, averaged, unshadowed.
  const auto& q = scene.earthshine_quad;
  const Vec3 qn = scene.earthshine_normal();
  const Vec3 samples[5] = {(q[0] + q[1] + q[2] + q[3]) * 0.25, q[0], q[1], q[2], q[3]};
  double geometry = 0.0;
  for (const Vec3& s : samples) {
    const Vec3 l = normalized(s - p);
    const double c_surface = dot(n, l);
    const double c_emitter = -dot(qn, l);
    if (c_surface > 0.0 && c_emitter > 0.0) geometry += c_surface * c_emitter;
  }
  radiance += hadamard(albedo, scene.earthshine_radiance) * (geometry / 5.0);
  return radiance;
}

// Subpixel offsets for the image pass; a single sample sits at the center.
inline double subpixel(int index, int count) { return (index + 0.5) / count; }

}  // namespace orbseg::detail
