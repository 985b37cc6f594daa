#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orbseg/baseline.hpp"
#include "orbseg/image.hpp"
#include "orbseg/mesh_io.hpp"
#include "orbseg/scene_render.hpp"
#include "orbseg/taxonomy.hpp"

namespace orbseg {

enum class Split { train, val, test, unknown_target };
std::string_view to_string(Split split);
Split split_from_string(std::string_view text);  // throws ConfigError

struct FrameRecord {
  std::string id;  // "<spacecraft>/<pose_id>_<tier>"
  std::string spacecraft;
  int pose_id = 0;
  int range_tier = 1;
  std::string rgb_path;   // relative to the manifest directory
  std::string mask_path;  // relative to the manifest directory
  Split split = Split::train;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct DatasetManifest {
  std::vector<FrameRecord> records;
  std::string taxonomy_hash;
  std::string config_hash;
  std::uint64_t seed = 0;
  // Directory record paths are resolved against. Not serialized.
  std::string base_dir;

  std::string resolve(const std::string& relative) const;
  std::size_t count(Split split) const;
};

// Text form: a `# key = value` header block (format, seed, config_hash,
// taxonomy_hash, columns) followed by one tab-separated record per line in
// column order id, spacecraft, pose_id, range_tier, rgb_path, mask_path, split.
std::string to_manifest_text(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text, std::string_view source);
void write_manifest(const DatasetManifest& manifest, const std::string& path);
// Sets base_dir to the manifest's directory.
DatasetManifest read_manifest(const std::string& path);

std::string taxonomy_hash(const ClassTaxonomy& taxonomy);

struct SpacecraftInput {
  std::string name;  // [A-Za-z0-9_.-]+, unique
  const AnnotatedMesh* mesh = nullptr;
  // Frames of held-out spacecraft go to the unknown_target split.
  bool held_out = false;
};

struct GenerationConfig {
  PoseSamplingConfig poses;
  int width = 256;
  int height = 256;
};

// Records and poses without rendering; what --dry-run prints.
struct PlannedFrame {
  FrameRecord record;
  CameraPose pose;
  std::size_t spacecraft = 0;  // index into the inputs
  std::uint64_t seed = 0;
};
struct GenerationPlan {
  DatasetManifest manifest;
  std::vector<PlannedFrame> frames;  // same order as manifest.records
};

GenerationPlan plan_dataset(const std::vector<SpacecraftInput>& spacecraft, const SceneConfig& scene,
                            const GenerationConfig& config, const ClassTaxonomy& taxonomy, std::uint64_t seed);

// Renders every planned frame, writes out_dir/<spacecraft>/{rgb,mask}/
// <pose_id>_<tier>.png and out_dir/manifest.tsv. Frames render in parallel;
// outputs are identical for any thread count. On I/O failure throws IoError
// reporting how many frames were written.
DatasetManifest generate_dataset(const std::vector<SpacecraftInput>& spacecraft, const SceneConfig& scene,
                                 const GenerationConfig& config, const ClassTaxonomy& taxonomy, std::uint64_t seed,
                                 const std::string& out_dir);

inline constexpr const char* kManifestFileName = "manifest.tsv";

// Defaults are proportional to a 49,864 / 5,306 / 6,000 split, normalized so
// the fractions sum to 1.
struct SplitFractions {
  double train = 49864.0 / 61170.0;
  double val = 5306.0 / 61170.0;
  double test = 6000.0 / 61170.0;
};

// Seeded shuffle of the non-held-out record ids, then val = floor(n * val),
// test = floor(n * test), and the remainder to train. unknown_target records
// are untouched.
DatasetManifest split_manifest(const DatasetManifest& manifest, const SplitFractions& fractions, std::uint64_t seed);

enum class RotateMode { quarter_turns, arbitrary_nearest };

struct AugmentationPolicy {
  double p_flip = 0.5;
  double p_transpose = 0.5;
  double p_rotate = 0.4;
  // arbitrary_nearest resamples at any angle with nearest-neighbour lookup and
  // fills uncovered pixels with background; it does not preserve class counts.
  RotateMode rotate_mode = RotateMode::quarter_turns;

  void validate() const;
};

struct AppliedAugmentation {
  bool flipped = false;
  bool transposed = false;
  bool rotated = false;
  int quarter_turns = 0;  // counter-clockwise, 1..3 when rotated in quarter-turn mode
  double angle_degrees = 0.0;
};

struct AugmentedPair {
  RgbImage rgb;
  CategoricalMask mask;
  AppliedAugmentation applied;
};

// Horizontal flip, then transpose, then rotation, each drawn independently
// from a stream seeded by `seed`. The same pixel permutation is applied to
// both images.
AugmentedPair augment_pair(const RgbImage& rgb, const CategoricalMask& mask, const AugmentationPolicy& policy,
                           std::uint64_t seed);

struct ValidationFailure {
  std::string record_id;
  std::string kind;  // missing-file, decode-error, duplicate-id, size-mismatch
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationFailure> failures;
  std::vector<std::uint64_t> class_pixels;  // per class
  std::vector<std::uint64_t> class_frames;  // frames containing the class
  std::uint64_t total_pixels = 0;
  std::size_t frames_checked = 0;

  std::string to_text(const ClassTaxonomy& taxonomy) const;
};

ValidationReport validate_manifest(const DatasetManifest& manifest, const ClassTaxonomy& taxonomy);

// Decodes the frames of one split (or all splits when empty).
std::vector<LabeledFrame> load_frames(const DatasetManifest& manifest, const ClassTaxonomy& taxonomy,
                                      std::optional<Split> split);

}  // namespace orbseg
