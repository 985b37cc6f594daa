#include "orbseg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "orbseg/config_text.hpp"
#include "orbseg/error.hpp"
#include "orbseg/mask_codec.hpp"
#include "orbseg/util.hpp"

namespace fs = std::filesystem;

namespace orbseg {
namespace {

constexpr const char* kManifestFormat = "orbseg-manifest-v1";
constexpr const char* kColumns = "id\tspacecraft\tpose_id\trange_tier\trgb_path\tmask_path\tsplit";

bool valid_name(std::string_view name) {
  if (name.empty() || name == "." || name == "..") return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

std::string generation_text(const GenerationConfig& g) {
  std::ostringstream out;
  out << "n_positions=" << g.poses.n_positions << "\nranges=";
  for (double m : g.poses.range_multipliers) out << format_double(m) << ',';
  out << "\nbase_distance_factor=" << format_double(g.poses.base_distance_factor)
      << "\nvertical_fov=" << format_double(g.poses.vertical_fov) << "\njitter=" << format_double(g.poses.jitter)
      << "\npattern=" << (g.poses.pattern == PosePattern::fibonacci ? "fibonacci" : "uniform_random")
      << "\nup=" << format_double(g.poses.up_hint.x) << ',' << format_double(g.poses.up_hint.y) << ','
      << format_double(g.poses.up_hint.z) << "\nsize=" << g.width << 'x' << g.height << '\n';
  return out.str();
}

// Pixel permutation shared by the image and the mask. Returns the source
// coordinate for an output coordinate, or false when it falls outside.
struct PixelMap {
  int out_w = 0, out_h = 0;
  virtual ~PixelMap() = default;
  virtual bool source(int row, int col, int& src_row, int& src_col) const = 0;
};

template <class CopyPixel>
void remap(const PixelMap& map, CopyPixel&& copy) {
  for (int r = 0; r < map.out_h; ++r) {
    for (int c = 0; c < map.out_w; ++c) {
      int sr = 0, sc = 0;
      const bool inside = map.source(r, c, sr, sc);
      copy(r, c, inside, sr, sc);
    }
  }
}

void apply(const PixelMap& map, RgbImage& rgb, CategoricalMask& mask) {
  RgbImage out_rgb(map.out_w, map.out_h);
  CategoricalMask out_mask(map.out_w, map.out_h, 0);
  remap(map, [&](int r, int c, bool inside, int sr, int sc) {
    if (!inside) return;
    out_rgb.set(r, c, rgb.at(sr, sc));
    out_mask.set(r, c, mask.at(sr, sc));
  });
  rgb = std::move(out_rgb);
  mask = std::move(out_mask);
}

struct FlipMap : PixelMap {
  bool source(int r, int c, int& sr, int& sc) const override {
    sr = r;
    sc = out_w - 1 - c;
    return true;
  }
};

struct TransposeMap : PixelMap {
  bool source(int r, int c, int& sr, int& sc) const override {
    sr = c;
    sc = r;
    return true;
  }
};

// Counter-clockwise quarter turns of an in_h x in_w image.
struct QuarterTurnMap : PixelMap {
  int turns = 1, in_w = 0, in_h = 0;
  bool source(int r, int c, int& sr, int& sc) const override {
    switch (turns) {
      case 1: sr = c; sc = in_w - 1 - r; break;
      case 2: sr = in_h - 1 - r; sc = in_w - 1 - c; break;
      default: sr = in_h - 1 - c; sc = r; break;
    }
    return true;
  }
};

struct AngleMap : PixelMap {
  double cos_a = 1.0, sin_a = 0.0;
  bool source(int r, int c, int& sr, int& sc) const override {
    const double cy = (out_h - 1) / 2.0, cx = (out_w - 1) / 2.0;
    const double y = r - cy, x = c - cx;
    // Inverse rotation of the output coordinate.
    const double sx = cos_a * x - sin_a * y + cx;
    const double sy = sin_a * x + cos_a * y + cy;
    sr = static_cast<int>(std::lround(sy));
    sc = static_cast<int>(std::lround(sx));
    return sr >= 0 && sr < out_h && sc >= 0 && sc < out_w;
  }
};

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unknown_target: return "unknown_target";
  }
  return "train";
}

Split split_from_string(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  if (text == "unknown_target") return Split::unknown_target;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

std::string DatasetManifest::resolve(const std::string& relative) const {
  if (base_dir.empty()) return relative;
  return (fs::path(base_dir) / relative).string();
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [&](const FrameRecord& r) { return r.split == split; }));
}

std::string to_manifest_text(const DatasetManifest& m) {
  std::ostringstream out;
  out << "# format = " << kManifestFormat << '\n';
  out << "# seed = " << m.seed << '\n';
  out << "# config_hash = " << m.config_hash << '\n';
  out << "# taxonomy_hash = " << m.taxonomy_hash << '\n';
  out << "# records = " << m.records.size() << '\n';
  out << "# columns = " << kColumns << '\n';
  for (const FrameRecord& r : m.records) {
    out << r.id << '\t' << r.spacecraft << '\t' << r.pose_id << '\t' << r.range_tier << '\t' << r.rgb_path << '\t'
        << r.mask_path << '\t' << to_string(r.split) << '\n';
  }
  return out.str();
}

DatasetManifest parse_manifest(std::string_view text, std::string_view source) {
  DatasetManifest m;
  int line_no = 0;
  bool saw_format = false;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    const std::string ctx = std::string(source) + ":" + std::to_string(line_no) + ": ";
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view value = trim(body.substr(eq + 1));
      if (key == "format") {
        if (value != kManifestFormat) throw ConfigError(ctx + "unsupported manifest format '" + std::string(value) + "'");
        saw_format = true;
      } else if (key == "seed") {
        m.seed = static_cast<std::uint64_t>(std::stoull(std::string(value)));
      } else if (key == "config_hash") {
        m.config_hash = std::string(value);
      } else if (key == "taxonomy_hash") {
        m.taxonomy_hash = std::string(value);
      }
      continue;
    }
    const std::vector<std::string> f = split(line, '\t');
    if (f.size() != 7) throw ConfigError(ctx + "expected 7 tab-separated fields, found " + std::to_string(f.size()));
    FrameRecord r;
    r.id = f[0];
    r.spacecraft = f[1];
    r.pose_id = static_cast<int>(parse_int(f[2], source, line_no));
    r.range_tier = static_cast<int>(parse_int(f[3], source, line_no));
    r.rgb_path = f[4];
    r.mask_path = f[5];
    try {
      r.split = split_from_string(f[6]);
    } catch (const ConfigError& e) {
      throw ConfigError(ctx + e.what());
    }
    m.records.push_back(std::move(r));
  }
  if (!saw_format) throw ConfigError(std::string(source) + ": missing '# format = " + kManifestFormat + "' header");
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  write_text_file(path, to_manifest_text(manifest));
}

DatasetManifest read_manifest(const std::string& path) {
  DatasetManifest m = parse_manifest(read_text_file(path), path);
  m.base_dir = fs::path(path).parent_path().string();
  return m;
}

std::string taxonomy_hash(const ClassTaxonomy& taxonomy) {
  Fnv1a h;
  h.update(taxonomy.to_config_text());
  return h.hex();
}

GenerationPlan plan_dataset(const std::vector<SpacecraftInput>& spacecraft, const SceneConfig& scene,
                            const GenerationConfig& config, const ClassTaxonomy& taxonomy, std::uint64_t seed) {
  if (spacecraft.empty()) throw PreconditionError("dataset generation needs at least one mesh");
  if (config.width < 1 || config.height < 1) throw PreconditionError("frame size must be at least 1x1");
  scene.validate();
  std::set<std::string> names;
  for (const SpacecraftInput& s : spacecraft) {
    if (!s.mesh) throw PreconditionError("spacecraft '" + s.name + "' has no mesh");
    if (!valid_name(s.name)) throw PreconditionError("spacecraft name '" + s.name + "' must match [A-Za-z0-9_.-]+");
    if (!names.insert(s.name).second) throw PreconditionError("duplicate spacecraft name '" + s.name + "'");
  }

  Fnv1a config_hash;
  config_hash.update(generation_text(config));
  config_hash.update(scene.to_config_text());
  config_hash.update(taxonomy.to_config_text());

  GenerationPlan plan;
  for (std::size_t s = 0; s < spacecraft.size(); ++s) {
    const SpacecraftInput& in = spacecraft[s];
    const std::uint64_t mesh_hash = in.mesh->content_hash();
    config_hash.update(in.name);
    config_hash.update(&mesh_hash, sizeof mesh_hash);
    config_hash.update(in.held_out ? "1" : "0");

    const std::uint64_t mesh_seed = derive_seed(seed, fnv1a(in.name));
    const std::vector<CameraPose> poses = sample_poses(*in.mesh, config.poses, mesh_seed);
    for (std::size_t p = 0; p < poses.size(); ++p) {
      PlannedFrame f;
      f.pose = poses[p];
      f.spacecraft = s;
      f.seed = derive_seed(mesh_seed, p);
      const std::string stem = std::to_string(f.pose.pose_id) + "_" + std::to_string(f.pose.range_tier);
      f.record.id = in.name + "/" + stem;
      f.record.spacecraft = in.name;
      f.record.pose_id = f.pose.pose_id;
      f.record.range_tier = f.pose.range_tier;
      f.record.rgb_path = in.name + "/rgb/" + stem + ".png";
      f.record.mask_path = in.name + "/mask/" + stem + ".png";
      f.record.split = in.held_out ? Split::unknown_target : Split::train;
      plan.frames.push_back(std::move(f));
    }
  }
  std::stable_sort(plan.frames.begin(), plan.frames.end(), [](const PlannedFrame& a, const PlannedFrame& b) {
    if (a.record.spacecraft != b.record.spacecraft) return a.record.spacecraft < b.record.spacecraft;
    if (a.record.pose_id != b.record.pose_id) return a.record.pose_id < b.record.pose_id;
    return a.record.range_tier < b.record.range_tier;
  });

  plan.manifest.seed = seed;
  plan.manifest.config_hash = config_hash.hex();
  plan.manifest.taxonomy_hash = taxonomy_hash(taxonomy);
  for (const PlannedFrame& f : plan.frames) plan.manifest.records.push_back(f.record);
  return plan;
}

DatasetManifest generate_dataset(const std::vector<SpacecraftInput>& spacecraft, const SceneConfig& scene,
                                 const GenerationConfig& config, const ClassTaxonomy& taxonomy, std::uint64_t seed,
                                 const std::string& out_dir) {
  GenerationPlan plan = plan_dataset(spacecraft, scene, config, taxonomy, seed);
  try {
    for (const SpacecraftInput& s : spacecraft) {
      fs::create_directories(fs::path(out_dir) / s.name / "rgb");
      fs::create_directories(fs::path(out_dir) / s.name / "mask");
    }
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("cannot create output directories: ") + e.what());
  }

  std::vector<RayCaster> casters;
  casters.reserve(spacecraft.size());
  for (const SpacecraftInput& s : spacecraft) casters.emplace_back(*s.mesh);

  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(plan.frames.size());
  std::vector<std::string> errors(plan.frames.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const PlannedFrame& f = plan.frames[static_cast<std::size_t>(i)];
    try {
      const RenderedPair pair = render_pair_serial(casters[f.spacecraft], scene, f.pose, config.width, config.height,
                                                   taxonomy, f.seed);
      write_rgb_png(pair.rgb, (fs::path(out_dir) / f.record.rgb_path).string());
      encode_mask(pair.mask, taxonomy, (fs::path(out_dir) / f.record.mask_path).string());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  std::size_t failed = 0;
  const std::string* first = nullptr;
  for (const std::string& e : errors) {
    if (e.empty()) continue;
    if (!first) first = &e;
    ++failed;
  }
  if (failed > 0) {
    throw IoError("generation incomplete: " + std::to_string(plan.frames.size() - failed) + " of " +
                  std::to_string(plan.frames.size()) + " frames written; first failure: " + *first);
  }

  plan.manifest.base_dir = out_dir;
  write_manifest(plan.manifest, (fs::path(out_dir) / kManifestFileName).string());
  return plan.manifest;
}

DatasetManifest split_manifest(const DatasetManifest& manifest, const SplitFractions& fr, std::uint64_t seed) {
  if (manifest.records.empty()) throw PreconditionError("cannot split an empty manifest");
  if (!(fr.train > 0.0 && fr.val > 0.0 && fr.test > 0.0)) throw PreconditionError("split fractions must be positive");
  if (fr.train + fr.val + fr.test > 1.0 + 1e-9) {
    throw PreconditionError("split fractions sum to " + format_double(fr.train + fr.val + fr.test) + ", above 1");
  }

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (manifest.records[i].split != Split::unknown_target) pool.push_back(i);
  }
  // Shuffle a canonical (id-sorted) order so the assignment depends on the
  // record set, not on line order.
  std::sort(pool.begin(), pool.end(),
            [&](std::size_t a, std::size_t b) { return manifest.records[a].id < manifest.records[b].id; });
  Rng rng(derive_seed(seed, 0x73706c6974ULL));
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);

  const std::size_t n = pool.size();
  const auto n_val = static_cast<std::size_t>(std::floor(double(n) * fr.val));
  const auto n_test = static_cast<std::size_t>(std::floor(double(n) * fr.test));
  const std::size_t n_train = n - n_val - n_test;

  DatasetManifest out = manifest;
  for (std::size_t j = 0; j < n; ++j) {
    Split s = Split::train;
    if (j >= n_train) s = j < n_train + n_val ? Split::val : Split::test;
    out.records[pool[j]].split = s;
  }
  return out;
}

void AugmentationPolicy::validate() const {
  for (double p : {p_flip, p_transpose, p_rotate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("augmentation probabilities must lie in [0, 1]");
  }
}

AugmentedPair augment_pair(const RgbImage& rgb, const CategoricalMask& mask, const AugmentationPolicy& policy,
                           std::uint64_t seed) {
  policy.validate();
  if (rgb.width != mask.width || rgb.height != mask.height) {
    throw PreconditionError("image and mask dimensions differ");
  }
  // Fixed draw order: flip, transpose, rotate, rotation amount.
  Rng rng(seed);
  const double u_flip = rng.uniform();
  const double u_transpose = rng.uniform();
  const double u_rotate = rng.uniform();
  const std::uint64_t turns = 1 + rng.below(3);
  const double u_angle = rng.uniform();

  AugmentedPair out{rgb, mask, {}};
  if (u_flip < policy.p_flip) {
    FlipMap m;
    m.out_w = out.rgb.width;
    m.out_h = out.rgb.height;
    apply(m, out.rgb, out.mask);
    out.applied.flipped = true;
  }
  if (u_transpose < policy.p_transpose) {
    TransposeMap m;
    m.out_w = out.rgb.height;
    m.out_h = out.rgb.width;
    apply(m, out.rgb, out.mask);
    out.applied.transposed = true;
  }
  if (u_rotate < policy.p_rotate) {
    out.applied.rotated = true;
    if (policy.rotate_mode == RotateMode::quarter_turns) {
      QuarterTurnMap m;
      m.turns = static_cast<int>(turns);
      m.in_w = out.rgb.width;
      m.in_h = out.rgb.height;
      m.out_w = turns % 2 ? m.in_h : m.in_w;
      m.out_h = turns % 2 ? m.in_w : m.in_h;
      apply(m, out.rgb, out.mask);
      out.applied.quarter_turns = static_cast<int>(turns);
      out.applied.angle_degrees = 90.0 * turns;
    } else {
      const double angle = (u_angle * 2.0 - 1.0) * std::numbers::pi;
      AngleMap m;
      m.out_w = out.rgb.width;
      m.out_h = out.rgb.height;
      m.cos_a = std::cos(angle);
      m.sin_a = std::sin(angle);
      apply(m, out.rgb, out.mask);
      out.applied.angle_degrees = angle * 180.0 / std::numbers::pi;
    }
  }
  return out;
}

std::string ValidationReport::to_text(const ClassTaxonomy& taxonomy) const {
  std::ostringstream out;
  out << "frames checked: " << frames_checked << "\nfailures: " << failures.size() << '\n';
  for (const ValidationFailure& f : failures) out << "  " << f.kind << '\t' << f.record_id << '\t' << f.detail << '\n';
  out << "class\tpixels\tpixel_share\tframes\tframe_share\n";
  char buf[64];
  for (std::size_t k = 0; k < class_pixels.size(); ++k) {
    out << taxonomy.at(static_cast<ClassIndex>(k)).name << '\t' << class_pixels[k] << '\t';
    std::snprintf(buf, sizeof buf, "%.6f", total_pixels ? double(class_pixels[k]) / double(total_pixels) : 0.0);
    out << buf << '\t' << class_frames[k] << '\t';
    std::snprintf(buf, sizeof buf, "%.6f", frames_checked ? double(class_frames[k]) / double(frames_checked) : 0.0);
    out << buf << '\n';
  }
  out << "total\t" << total_pixels << '\n';
  return out.str();
}

ValidationReport validate_manifest(const DatasetManifest& manifest, const ClassTaxonomy& taxonomy) {
  const std::size_t k = taxonomy.size();
  const std::size_t n = manifest.records.size();
  ValidationReport report;
  report.class_pixels.assign(k, 0);
  report.class_frames.assign(k, 0);

  std::map<std::string, int> seen;
  for (const FrameRecord& r : manifest.records) {
    if (++seen[r.id] == 2) report.failures.push_back({r.id, "duplicate-id", "record id appears more than once"});
  }

  struct Outcome {
    std::vector<ValidationFailure> failures;
    std::vector<std::uint64_t> pixels;
    bool decoded = false;
  };
  std::vector<Outcome> outcomes(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const FrameRecord& r = manifest.records[static_cast<std::size_t>(i)];
    Outcome& o = outcomes[static_cast<std::size_t>(i)];
    const std::string rgb_path = manifest.resolve(r.rgb_path);
    const std::string mask_path = manifest.resolve(r.mask_path);
    if (!fs::exists(rgb_path)) o.failures.push_back({r.id, "missing-file", rgb_path});
    if (!fs::exists(mask_path)) {
      o.failures.push_back({r.id, "missing-file", mask_path});
      continue;
    }
    try {
      const CategoricalMask mask = decode_mask(mask_path, taxonomy);
      o.pixels.assign(k, 0);
      for (ClassIndex v : mask.data) ++o.pixels[v];
      o.decoded = true;
    } catch (const std::exception& e) {
      o.failures.push_back({r.id, "decode-error", e.what()});
    }
  }
  for (Outcome& o : outcomes) {
    for (ValidationFailure& f : o.failures) report.failures.push_back(std::move(f));
    if (!o.decoded) continue;
    ++report.frames_checked;
    for (std::size_t c = 0; c < k; ++c) {
      report.class_pixels[c] += o.pixels[c];
      report.total_pixels += o.pixels[c];
      report.class_frames[c] += o.pixels[c] > 0;
    }
  }
  return report;
}

std::vector<LabeledFrame> load_frames(const DatasetManifest& manifest, const ClassTaxonomy& taxonomy,
                                      std::optional<Split> split) {
  std::vector<const FrameRecord*> wanted;
  for (const FrameRecord& r : manifest.records) {
    if (!split || r.split == *split) wanted.push_back(&r);
  }
  std::vector<LabeledFrame> frames(wanted.size());
  std::vector<std::string> errors(wanted.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(wanted.size()); ++i) {
    const FrameRecord& r = *wanted[static_cast<std::size_t>(i)];
    LabeledFrame& f = frames[static_cast<std::size_t>(i)];
    try {
      f.id = r.id;
      f.rgb = read_rgb_png(manifest.resolve(r.rgb_path));
      f.mask = decode_mask(manifest.resolve(r.mask_path), taxonomy);
      if (f.rgb.width != f.mask.width || f.rgb.height != f.mask.height) {
        errors[static_cast<std::size_t>(i)] = "frame '" + r.id + "': image and mask sizes differ";
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  return frames;
}

}  // namespace orbseg
