#include "orbseg/mesh_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "orbseg/config_text.hpp"
#include "orbseg/error.hpp"
#include "orbseg/util.hpp"

namespace orbseg {
namespace {

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

// Resolves an OBJ vertex reference ("7", "7/2", "7//3", "-1/...") to a
// zero-based index.
std::uint32_t resolve_vertex(std::string_view ref, std::size_t vertex_count, const std::string& ctx) {
  const std::string_view head = ref.substr(0, ref.find('/'));
  long long v = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), v);
  if (ec != std::errc() || ptr != head.data() + head.size() || v == 0) {
    throw ConfigError(ctx + "bad vertex reference '" + std::string(ref) + "'");
  }
  const long long idx = v > 0 ? v - 1 : static_cast<long long>(vertex_count) + v;
  if (idx < 0 || idx >= static_cast<long long>(vertex_count)) {
    throw ConfigError(ctx + "vertex reference " + std::to_string(v) + " out of range");
  }
  return static_cast<std::uint32_t>(idx);
}

}  // namespace

AnnotatedMesh AnnotatedMesh::create(std::vector<Vec3> vertices, std::vector<TriangleIndices> triangles,
                                    std::vector<ClassIndex> face_class, const ClassTaxonomy& taxonomy) {
  if (triangles.size() != face_class.size()) {
    throw PreconditionError("triangle and face-class counts differ");
  }
  for (const Vec3& v : vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
      throw ConfigError("mesh has a non-finite vertex coordinate");
    }
  }
  AnnotatedMesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.triangles_.reserve(triangles.size());
  mesh.face_class_.reserve(triangles.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const TriangleIndices& tri = triangles[t];
    for (std::uint32_t i : tri) {
      if (i >= mesh.vertices_.size()) {
        throw ConfigError("triangle " + std::to_string(t) + " references vertex " + std::to_string(i) +
                          " but only " + std::to_string(mesh.vertices_.size()) + " exist");
      }
    }
    const ClassIndex c = face_class[t];
    if (!taxonomy.contains(c)) {
      throw ConfigError("triangle " + std::to_string(t) + " has class " + std::to_string(c) +
                        " outside the taxonomy");
    }
    if (c == taxonomy.background_index()) {
      throw ConfigError("triangle " + std::to_string(t) + " is labelled background");
    }
    const Vec3 a = mesh.vertices_[tri[0]];
    const Vec3 b = mesh.vertices_[tri[1]];
    const Vec3 d = mesh.vertices_[tri[2]];
    if (0.5 * norm(cross(b - a, d - a)) <= kDegenerateArea) {
      ++mesh.dropped_;
      continue;
    }
    mesh.triangles_.push_back(tri);
    mesh.face_class_.push_back(c);
  }
  if (mesh.triangles_.empty()) throw ConfigError("mesh has no non-degenerate triangles");

  for (const Vec3& v : mesh.vertices_) mesh.bounds_.expand(v);
  mesh.sphere_ = compute_bounding_sphere(mesh.vertices_);
  return mesh;
}

Vec3 AnnotatedMesh::face_normal(std::uint32_t tri) const {
  const Vec3 a = vertex(tri, 0);
  return normalized(cross(vertex(tri, 1) - a, vertex(tri, 2) - a));
}

double AnnotatedMesh::face_area(std::uint32_t tri) const {
  const Vec3 a = vertex(tri, 0);
  return 0.5 * norm(cross(vertex(tri, 1) - a, vertex(tri, 2) - a));
}

double AnnotatedMesh::surface_area() const {
  double total = 0.0;
  for (std::uint32_t t = 0; t < triangles_.size(); ++t) total += face_area(t);
  return total;
}

std::uint64_t AnnotatedMesh::content_hash() const {
  Fnv1a h;
  h.update(vertices_.data(), vertices_.size() * sizeof(Vec3));
  h.update(triangles_.data(), triangles_.size() * sizeof(TriangleIndices));
  h.update(face_class_.data(), face_class_.size());
  return h.digest();
}

std::optional<ClassIndex> MaterialClassMap::find(std::string_view name) const {
  if (auto it = entries.find(name); it != entries.end()) return it->second;
  return std::nullopt;
}

MaterialClassMap parse_material_map(std::string_view text, std::string_view source, const ClassTaxonomy& taxonomy) {
  MaterialClassMap map;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string ctx = std::string(source) + ":" + std::to_string(line_no) + ": ";

    std::size_t sep = line.find("->");
    std::size_t sep_len = 2;
    if (sep == std::string_view::npos) {
      sep = line.find('=');
      sep_len = 1;
    }
    if (sep == std::string_view::npos) throw ConfigError(ctx + "expected 'material -> class'");
    const std::string name(trim(line.substr(0, sep)));
    const std::string_view rhs = trim(line.substr(sep + sep_len));
    if (name.empty() || rhs.empty()) throw ConfigError(ctx + "expected 'material -> class'");

    ClassIndex cls = 0;
    long long idx = 0;
    auto [ptr, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), idx);
    if (ec == std::errc() && ptr == rhs.data() + rhs.size()) {
      if (idx < 0 || idx >= static_cast<long long>(taxonomy.size())) {
        throw ConfigError(ctx + "class index " + std::to_string(idx) + " outside the taxonomy");
      }
      cls = static_cast<ClassIndex>(idx);
    } else {
      try {
        cls = taxonomy.index_of(rhs);
      } catch (const ConfigError& e) {
        throw ConfigError(ctx + e.what());
      }
    }
    if (cls == taxonomy.background_index()) {
      throw ConfigError(ctx + "material '" + name + "' maps to background; geometry is never background");
    }
    if (name == "*") {
      map.wildcard = cls;
    } else if (!map.entries.emplace(name, cls).second) {
      throw ConfigError(ctx + "duplicate material '" + name + "'");
    }
  }
  return map;
}

MaterialClassMap load_material_map(const std::string& path, const ClassTaxonomy& taxonomy) {
  return parse_material_map(read_text_file(path), path, taxonomy);
}

AnnotatedMesh parse_annotated_mesh(std::string_view text, std::string_view source, const MaterialClassMap& map,
                                   const ClassTaxonomy& taxonomy) {
  std::vector<Vec3> vertices;
  std::vector<TriangleIndices> triangles;
  std::vector<ClassIndex> classes;

  std::string material;
  std::vector<std::string> groups;
  std::optional<ClassIndex> current;  // resolved lazily on the first face
  bool resolved = false;

  const auto resolve = [&](const std::string& ctx) -> ClassIndex {
    if (!resolved) {
      current.reset();
      if (!material.empty()) current = map.find(material);
      for (std::size_t i = 0; !current && i < groups.size(); ++i) current = map.find(groups[i]);
      if (!current) current = map.wildcard;
      resolved = true;
    }
    if (!current) {
      std::string name = material;
      if (name.empty() && !groups.empty()) name = groups.front();
      throw ConfigError(ctx + "unmapped material '" + name + "'");
    }
    return *current;
  };

  int line_no = 0;
  std::vector<std::uint32_t> poly;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::vector<std::string_view> tok = tokens(trim(line));
    if (tok.empty()) continue;
    const std::string ctx = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const std::string_view kind = tok[0];

    if (kind == "v") {
      if (tok.size() < 4) throw ConfigError(ctx + "vertex needs three coordinates");
      vertices.push_back({parse_double(tok[1], source, line_no), parse_double(tok[2], source, line_no),
                          parse_double(tok[3], source, line_no)});
    } else if (kind == "f") {
      if (tok.size() < 4) throw ConfigError(ctx + "face needs at least three vertices");
      poly.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) poly.push_back(resolve_vertex(tok[i], vertices.size(), ctx));
      const ClassIndex cls = resolve(ctx);
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        triangles.push_back({poly[0], poly[i], poly[i + 1]});
        classes.push_back(cls);
      }
    } else if (kind == "usemtl") {
      material = tok.size() > 1 ? std::string(tok[1]) : std::string();
      resolved = false;
    } else if (kind == "g" || kind == "o") {
      groups.clear();
      for (std::size_t i = 1; i < tok.size(); ++i) groups.emplace_back(tok[i]);
      resolved = false;
    }
    // vn, vt, s, mtllib, l and anything else carry nothing the labelled mesh
    // needs; normals are recomputed from winding.
  }
  if (triangles.empty()) throw ConfigError(std::string(source) + ": mesh is empty");
  try {
    return AnnotatedMesh::create(std::move(vertices), std::move(triangles), std::move(classes), taxonomy);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
}

AnnotatedMesh load_annotated_mesh(const std::string& path, const MaterialClassMap& map,
                                  const ClassTaxonomy& taxonomy) {
  return parse_annotated_mesh(read_text_file(path), path, map, taxonomy);
}

BoundingSphere compute_bounding_sphere(std::span<const Vec3> points) {
  if (points.empty()) throw PreconditionError("bounding sphere of an empty point set");

  // Ritter: seed with the farthest pair found from an arbitrary start, then
  // grow to absorb stragglers.
  const auto farthest_from = [&](Vec3 p) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = dot(points[i] - p, points[i] - p);
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    return points[best];
  };
  const Vec3 a = farthest_from(points[0]);
  const Vec3 b = farthest_from(a);
  Vec3 center = (a + b) * 0.5;
  double radius = 0.5 * norm(b - a);
  for (const Vec3& p : points) {
    const double d = norm(p - center);
    if (d > radius) {
      const double grown = 0.5 * (radius + d);
      center = center + (p - center) * ((grown - radius) / d);
      radius = grown;
    }
  }

  // The box-centered sphere is sometimes tighter (e.g. boxes whose Ritter seed
  // lands on a face diagonal).
  Aabb box;
  for (const Vec3& p : points) box.expand(p);
  const Vec3 box_center = box.center();
  double box_radius = 0.0;
  for (const Vec3& p : points) box_radius = std::max(box_radius, norm(p - box_center));
  if (box_radius < radius) {
    center = box_center;
    radius = box_radius;
  }

  // Final pass makes containment exact under rounding.
  for (const Vec3& p : points) radius = std::max(radius, norm(p - center));
  return {center, std::max(radius, kMinSphereRadius)};
}

std::string material_name_for(const ClassDef& c) {
  std::string name = c.name;
  std::replace(name.begin(), name.end(), ' ', '_');
  return name;
}

std::string to_obj_text(const AnnotatedMesh& mesh, const ClassTaxonomy& taxonomy) {
  std::ostringstream out;
  out << "# " << mesh.vertices().size() << " vertices, " << mesh.triangle_count() << " triangles\n";
  for (const Vec3& v : mesh.vertices()) {
    out << "v " << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z) << '\n';
  }
  int current = -1;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const ClassIndex c = mesh.face_class()[t];
    if (c != current) {
      out << "usemtl " << material_name_for(taxonomy.at(c)) << '\n';
      current = c;
    }
    const TriangleIndices& tri = mesh.triangles()[t];
    out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
  return out.str();
}

std::string to_material_map_text(const AnnotatedMesh& mesh, const ClassTaxonomy& taxonomy) {
  std::set<ClassIndex> used(mesh.face_class().begin(), mesh.face_class().end());
  std::ostringstream out;
  out << "# material -> class index\n";
  for (ClassIndex c : used) out << material_name_for(taxonomy.at(c)) << " -> " << int(c) << '\n';
  return out.str();
}

}  // namespace orbseg
