#include "orbseg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>

#include "orbseg/baseline.hpp"
#include "orbseg/config_text.hpp"
#include "orbseg/dataset.hpp"
#include "orbseg/error.hpp"
#include "orbseg/mask_codec.hpp"
#include "orbseg/metrics.hpp"
#include "orbseg/parallel.hpp"
#include "orbseg/primitives.hpp"
#include "orbseg/util.hpp"

namespace fs = std::filesystem;

namespace orbseg {
namespace {

// Raised for invalid flag values so they exit with the usage code.
struct UsageError : Error {
  using Error::Error;
};

struct CommonOptions {
  std::string taxonomy_path;
  int threads = 0;
};

struct GenerateOptions {
  std::vector<std::string> meshes;
  std::string map_path;
  std::vector<std::string> unknown_targets;
  std::string scene_path;
  std::string out_dir;
  int n_positions = 5000;
  std::string ranges = "1,2,3";
  int width = 256;
  int height = 256;
  double base_distance = 2.5;
  double fov_deg = 45.0;
  double jitter = 0.5;
  std::string pattern = "fibonacci";
  std::uint64_t seed = 0;
  bool dry_run = false;
};

struct SplitOptions {
  std::string manifest;
  std::string out;
  double train = SplitFractions{}.train;
  double val = SplitFractions{}.val;
  double test = SplitFractions{}.test;
  std::uint64_t seed = 0;
};

struct AugmentOptions {
  std::string manifest;
  std::string out_dir;
  std::string split = "train";
  int copies = 1;
  double p_flip = 0.5;
  double p_transpose = 0.5;
  double p_rotate = 0.4;
  std::string rotate_mode = "quarter";
  std::uint64_t seed = 0;
};

struct EvalOptions {
  std::string pred_dir;
  std::string truth_dir;
  std::string policy = "exclude";
  std::string aggregation = "micro";
  std::string format = "text";
};

struct TrainOptions {
  std::string manifest;
  std::string model_path;
  std::string log_path;
  std::string loss = "cce";
  double gamma = 2.0;
  double alpha = 1.0;
  double epsilon = 1e-7;
  std::string mix = "additive";
  std::string dice_classes = "target";
  double learning_rate = 0.5;
  int epochs = 5;
  int batch = 8;
  int patience = 0;
  int window = 3;
  std::uint64_t seed = 0;
  std::string train_split = "train";
  std::string val_split = "val";
};

struct ReportOptions {
  std::string manifest;
  std::string model_path;
  std::vector<std::string> splits{"test", "unknown_target"};
  std::string policy = "exclude";
  std::string aggregation = "micro";
  std::string format = "text";
};

struct MeshDemoOptions {
  std::string out_dir;
  int detail = 2;
  std::vector<int> variants{0, 1, 2, 3};
  bool toy = false;
};

ClassTaxonomy load_taxonomy_or_default(const CommonOptions& common) {
  return common.taxonomy_path.empty() ? default_taxonomy() : load_taxonomy(common.taxonomy_path);
}

AbsentPolicy policy_from_string(const std::string& s) {
  if (s == "exclude") return AbsentPolicy::exclude;
  if (s == "score-one" || s == "score_one") return AbsentPolicy::score_one;
  throw UsageError("unknown absent-class policy '" + s + "' (expected exclude or score-one)");
}

DiceAggregation aggregation_from_string(const std::string& s) {
  if (s == "micro") return DiceAggregation::micro;
  if (s == "per-image" || s == "per_image") return DiceAggregation::per_image;
  throw UsageError("unknown aggregation '" + s + "' (expected micro or per-image)");
}

TableFormat format_from_string(const std::string& s) {
  if (s == "text") return TableFormat::text;
  if (s == "csv") return TableFormat::csv;
  if (s == "tsv") return TableFormat::tsv;
  throw UsageError("unknown table format '" + s + "' (expected text, csv or tsv)");
}

void run_generate(const GenerateOptions& o, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  const SceneConfig scene = o.scene_path.empty() ? SceneConfig{} : load_scene_config(o.scene_path);
  if (o.meshes.empty()) throw UsageError("generate needs at least one --mesh");
  if (o.map_path.empty()) throw UsageError("generate needs --map");
  if (o.out_dir.empty() && !o.dry_run) throw UsageError("generate needs --out");

  GenerationConfig config;
  config.poses.n_positions = o.n_positions;
  config.poses.range_multipliers = parse_doubles(o.ranges, "--ranges", 0);
  config.poses.base_distance_factor = o.base_distance;
  config.poses.vertical_fov = o.fov_deg * std::numbers::pi / 180.0;
  config.poses.jitter = o.jitter;
  if (o.pattern == "fibonacci") {
    config.poses.pattern = PosePattern::fibonacci;
  } else if (o.pattern == "uniform") {
    config.poses.pattern = PosePattern::uniform_random;
  } else {
    throw UsageError("unknown pose pattern '" + o.pattern + "' (expected fibonacci or uniform)");
  }
  config.width = o.width;
  config.height = o.height;

  const MaterialClassMap map = load_material_map(o.map_path, taxonomy);
  std::vector<AnnotatedMesh> meshes;
  meshes.reserve(o.meshes.size());
  std::vector<SpacecraftInput> inputs;
  for (const std::string& path : o.meshes) {
    meshes.push_back(load_annotated_mesh(path, map, taxonomy));
    inputs.push_back({fs::path(path).stem().string(), nullptr, false});
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) inputs[i].mesh = &meshes[i];
  for (const std::string& name : o.unknown_targets) {
    auto it = std::find_if(inputs.begin(), inputs.end(), [&](const SpacecraftInput& s) { return s.name == name; });
    if (it == inputs.end()) throw UsageError("--unknown-target '" + name + "' does not name a --mesh");
    it->held_out = true;
  }

  if (o.dry_run) {
    const GenerationPlan plan = plan_dataset(inputs, scene, config, taxonomy, o.seed);
    out << "# planned frames: " << plan.frames.size() << '\n';
    out << "id\tsplit\tposition\tlook_at\n";
    for (const PlannedFrame& f : plan.frames) {
      const Vec3 p = f.pose.position, c = f.pose.look_at;
      out << f.record.id << '\t' << to_string(f.record.split) << '\t' << format_double(p.x) << ','
          << format_double(p.y) << ',' << format_double(p.z) << '\t' << format_double(c.x) << ','
          << format_double(c.y) << ',' << format_double(c.z) << '\n';
    }
    return;
  }
  const DatasetManifest manifest = generate_dataset(inputs, scene, config, taxonomy, o.seed, o.out_dir);
  out << "wrote " << manifest.records.size() << " frame pairs to " << o.out_dir << '\n';
}

void run_split(const SplitOptions& o, std::ostream& out) {
  const DatasetManifest in = read_manifest(o.manifest);
  const DatasetManifest result = split_manifest(in, {o.train, o.val, o.test}, o.seed);
  const std::string target = o.out.empty() ? o.manifest : o.out;
  if (fs::absolute(fs::path(target).parent_path()) != fs::absolute(fs::path(o.manifest).parent_path())) {
    throw UsageError("--out must be in the same directory as --manifest so record paths stay valid");
  }
  write_manifest(result, target);
  out << "train " << result.count(Split::train) << ", val " << result.count(Split::val) << ", test "
      << result.count(Split::test) << ", unknown_target " << result.count(Split::unknown_target) << '\n';
}

int run_validate(const std::string& manifest_path, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  const DatasetManifest manifest = read_manifest(manifest_path);
  if (manifest.taxonomy_hash != taxonomy_hash(taxonomy)) {
    throw Error("manifest taxonomy hash " + manifest.taxonomy_hash + " does not match the taxonomy in use (" +
                taxonomy_hash(taxonomy) + ")");
  }
  const ValidationReport report = validate_manifest(manifest, taxonomy);
  out << report.to_text(taxonomy);
  if (!report.failures.empty()) {
    throw Error(std::to_string(report.failures.size()) + " validation failure(s); first: " +
                report.failures.front().kind + " " + report.failures.front().record_id);
  }
  return 0;
}

void run_augment(const AugmentOptions& o, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  AugmentationPolicy policy{o.p_flip, o.p_transpose, o.p_rotate, RotateMode::quarter_turns};
  if (o.rotate_mode == "arbitrary") {
    policy.rotate_mode = RotateMode::arbitrary_nearest;
  } else if (o.rotate_mode != "quarter") {
    throw UsageError("unknown rotate mode '" + o.rotate_mode + "' (expected quarter or arbitrary)");
  }
  if (o.copies < 1) throw UsageError("--copies must be at least 1");
  const DatasetManifest manifest = read_manifest(o.manifest);
  const Split split = split_from_string(o.split);
  const std::vector<LabeledFrame> frames = load_frames(manifest, taxonomy, split);

  std::vector<const FrameRecord*> records;
  for (const FrameRecord& r : manifest.records) {
    if (r.split == split) records.push_back(&r);
  }
  DatasetManifest result;
  result.seed = o.seed;
  result.config_hash = manifest.config_hash;
  result.taxonomy_hash = manifest.taxonomy_hash;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameRecord& src = *records[i];
    fs::create_directories(fs::path(o.out_dir) / src.spacecraft / "rgb");
    fs::create_directories(fs::path(o.out_dir) / src.spacecraft / "mask");
    for (int c = 0; c < o.copies; ++c) {
      const std::uint64_t seed = derive_seed(derive_seed(o.seed, fnv1a(src.id)), static_cast<std::uint64_t>(c));
      const AugmentedPair pair = augment_pair(frames[i].rgb, frames[i].mask, policy, seed);
      FrameRecord r = src;
      const std::string stem =
          std::to_string(src.pose_id) + "_" + std::to_string(src.range_tier) + "_aug" + std::to_string(c);
      r.id = src.spacecraft + "/" + stem;
      r.rgb_path = src.spacecraft + "/rgb/" + stem + ".png";
      r.mask_path = src.spacecraft + "/mask/" + stem + ".png";
      write_rgb_png(pair.rgb, (fs::path(o.out_dir) / r.rgb_path).string());
      encode_mask(pair.mask, taxonomy, (fs::path(o.out_dir) / r.mask_path).string());
      result.records.push_back(std::move(r));
    }
  }
  write_manifest(result, (fs::path(o.out_dir) / kManifestFileName).string());
  out << "wrote " << result.records.size() << " augmented pairs to " << o.out_dir << '\n';
}

std::vector<std::string> png_files_under(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir + "' is not a directory");
  std::vector<std::string> rel;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      rel.push_back(fs::relative(entry.path(), dir).generic_string());
    }
  }
  std::sort(rel.begin(), rel.end());
  return rel;
}

void run_eval(const EvalOptions& o, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  const AbsentPolicy policy = policy_from_string(o.policy);
  const DiceAggregation aggregation = aggregation_from_string(o.aggregation);
  const TableFormat format = format_from_string(o.format);
  const std::vector<std::string> files = png_files_under(o.truth_dir);
  if (files.empty()) throw Error("no mask files under '" + o.truth_dir + "'");

  std::vector<ConfusionTally> per_frame(files.size());
  std::vector<std::string> errors(files.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(files.size()); ++i) {
    const std::string& rel = files[static_cast<std::size_t>(i)];
    try {
      const CategoricalMask truth = decode_mask((fs::path(o.truth_dir) / rel).string(), taxonomy);
      const CategoricalMask pred = decode_mask((fs::path(o.pred_dir) / rel).string(), taxonomy);
      if (pred.width != truth.width || pred.height != truth.height) throw Error(rel + ": mask sizes differ");
      per_frame[static_cast<std::size_t>(i)] = reference::tally(pred, truth, taxonomy.size());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  ConfusionTally total(taxonomy.size());
  std::vector<std::uint64_t> frames_present(taxonomy.size(), 0);
  for (const ConfusionTally& t : per_frame) {
    total.merge(t);
    for (std::size_t k = 0; k < taxonomy.size(); ++k) frames_present[k] += (t.tp[k] + t.fn[k]) > 0;
  }
  DiceReport report = dice_scores(total, policy);
  report.frames_present = frames_present;
  if (aggregation == DiceAggregation::per_image) report.macro_average = per_image_macro_dice(per_frame, policy);
  out << report_table({{"dice", report}}, taxonomy, format);
}

LossParams loss_params_from(const TrainOptions& o) {
  LossParams p;
  p.gamma = o.gamma;
  p.alpha = o.alpha;
  p.epsilon = o.epsilon;
  if (o.mix == "additive") {
    p.mix = MixMode::additive;
  } else if (o.mix == "convex") {
    p.mix = MixMode::convex;
  } else {
    throw UsageError("unknown mix '" + o.mix + "' (expected additive or convex)");
  }
  if (o.dice_classes == "target") {
    p.dice_classes = DiceClassSet::target_present;
  } else if (o.dice_classes == "target-or-pred") {
    p.dice_classes = DiceClassSet::target_or_pred_present;
  } else {
    throw UsageError("unknown dice class set '" + o.dice_classes + "' (expected target or target-or-pred)");
  }
  p.validate();
  return p;
}

void run_train(const TrainOptions& o, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  const DatasetManifest manifest = read_manifest(o.manifest);
  TrainConfig config;
  config.loss = loss_from_string(o.loss);
  config.loss_params = loss_params_from(o);
  config.learning_rate = o.learning_rate;
  config.epochs = o.epochs;
  config.batch_frames = o.batch;
  config.seed = o.seed;
  config.patience = o.patience;
  config.featurizer.window = o.window;
  config.validate();

  const std::vector<LabeledFrame> train_frames = load_frames(manifest, taxonomy, split_from_string(o.train_split));
  if (train_frames.empty()) throw Error("manifest has no '" + o.train_split + "' frames");
  const std::vector<LabeledFrame> val_frames = load_frames(manifest, taxonomy, split_from_string(o.val_split));

  const TrainResult result = train(train_frames, val_frames, config, taxonomy);
  const std::string log = training_log_text(result.log);
  if (!o.log_path.empty()) write_text_file(o.log_path, log);
  out << log;
  if (!o.model_path.empty()) {
    result.model.save(o.model_path);
    out << "saved model to " << o.model_path << '\n';
  }
}

void run_report(const ReportOptions& o, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  const AbsentPolicy policy = policy_from_string(o.policy);
  const DiceAggregation aggregation = aggregation_from_string(o.aggregation);
  const TableFormat format = format_from_string(o.format);
  const DatasetManifest manifest = read_manifest(o.manifest);
  const LinearSegmenter model = LinearSegmenter::load(o.model_path);
  if (static_cast<std::size_t>(model.num_classes()) != taxonomy.size()) {
    throw Error("model has " + std::to_string(model.num_classes()) + " classes but the taxonomy has " +
                std::to_string(taxonomy.size()));
  }
  std::vector<ReportGroup> groups;
  for (const std::string& name : o.splits) {
    const std::vector<LabeledFrame> frames = load_frames(manifest, taxonomy, split_from_string(name));
    if (frames.empty()) continue;
    groups.push_back({name, evaluate(model, frames, taxonomy, policy, aggregation)});
  }
  if (groups.empty()) throw Error("none of the requested splits has frames");
  out << report_table(groups, taxonomy, format);
}

void run_mesh_demo(const MeshDemoOptions& o, const CommonOptions& common, std::ostream& out) {
  const ClassTaxonomy taxonomy = load_taxonomy_or_default(common);
  fs::create_directories(o.out_dir);
  auto emit = [&](const std::string& name, const AnnotatedMesh& mesh) {
    write_text_file((fs::path(o.out_dir) / (name + ".obj")).string(), to_obj_text(mesh, taxonomy));
    out << name << ".obj\t" << mesh.triangle_count() << " triangles\n";
  };
  if (o.toy) {
    emit("toy", make_toy_mesh(taxonomy));
  } else {
    for (int v : o.variants) {
      if (v < 0 || v >= kDemoSpacecraftCount) throw UsageError("--variants entries must lie in [0, 4]");
      emit(demo_spacecraft_name(v), make_demo_spacecraft(v, o.detail, taxonomy));
    }
  }
  // Material names are derived from class names, so one map covers every mesh.
  std::string map;
  for (const ClassDef& c : taxonomy.classes()) {
    if (c.index == taxonomy.background_index()) continue;
    map += material_name_for(c) + " -> " + std::to_string(c.index) + '\n';
  }
  write_text_file((fs::path(o.out_dir) / "classes.map").string(), map);
}

int default_threads() {
  const char* env = std::getenv(kThreadsEnv);
  if (!env || !*env) return 0;
  try {
    return static_cast<int>(parse_int(env, kThreadsEnv, 0));
  } catch (const ConfigError&) {
    return 0;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic spacecraft segmentation data: generation, splitting, evaluation and a baseline trainer.",
               "orbseg"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "INI/TOML file with option defaults; flags on the command line win");
  app.set_version_flag("--version", "orbseg 1.0");

  CommonOptions common;
  common.threads = default_threads();
  auto add_common = [&](CLI::App* sub, bool threads) {
    sub->add_option("--taxonomy", common.taxonomy_path, "Class taxonomy file (default: built-in 11 classes)")
        ->check(CLI::ExistingFile);
    if (threads) {
      sub->add_option("--threads", common.threads,
                      std::string("Worker threads; 0 uses all cores. Default from ") + kThreadsEnv)
          ->capture_default_str();
    }
  };

  GenerateOptions gen;
  CLI::App* generate = app.add_subcommand("generate", "Render image/mask pairs for every mesh and pose");
  generate->add_option("--mesh", gen.meshes, "OBJ mesh (repeatable); the file stem names the spacecraft")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--map", gen.map_path, "Material/group to class map")->required()->check(CLI::ExistingFile);
  generate->add_option("--unknown-target", gen.unknown_targets,
                       "Spacecraft name whose frames form the held-out unknown-target split (repeatable)");
  generate->add_option("--scene", gen.scene_path, "Lighting config (default: built-in scene)")
      ->check(CLI::ExistingFile);
  generate->add_option("--out", gen.out_dir, "Output directory");
  generate->add_option("--n-positions", gen.n_positions, "Viewing directions per mesh")->capture_default_str();
  generate->add_option("--ranges", gen.ranges, "Range multipliers (near, 2.0x, 3.0x of the base distance)")
      ->capture_default_str();
  generate->add_option("--width", gen.width, "Frame width in pixels")->capture_default_str();
  generate->add_option("--height", gen.height, "Frame height in pixels")->capture_default_str();
  generate->add_option("--base-distance", gen.base_distance, "Base distance in bounding-sphere radii")
      ->capture_default_str();
  generate->add_option("--fov-deg", gen.fov_deg, "Vertical field of view in degrees")->capture_default_str();
  generate->add_option("--jitter", gen.jitter, "Lattice jitter as a fraction of cell spacing")->capture_default_str();
  generate->add_option("--pattern", gen.pattern, "Direction pattern: fibonacci or uniform")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Seed for every stochastic choice")->capture_default_str();
  generate->add_flag("--dry-run", gen.dry_run, "Print the pose/record plan without rendering");
  add_common(generate, true);

  SplitOptions sp;
  CLI::App* split_cmd = app.add_subcommand("split", "Assign train/val/test splits in a manifest");
  split_cmd->add_option("--manifest", sp.manifest, "Manifest to split")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--out", sp.out, "Output manifest path (default: overwrite --manifest)");
  split_cmd->add_option("--train", sp.train, "Train fraction")->capture_default_str();
  split_cmd->add_option("--val", sp.val, "Validation fraction")->capture_default_str();
  split_cmd->add_option("--test", sp.test, "Test fraction")->capture_default_str();
  split_cmd->add_option("--seed", sp.seed, "Shuffle seed")->capture_default_str();

  std::string validate_manifest_path;
  CLI::App* validate = app.add_subcommand("validate", "Check that every manifest record decodes; print class stats");
  validate->add_option("--manifest", validate_manifest_path, "Manifest to check")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(validate, true);

  AugmentOptions aug;
  CLI::App* augment = app.add_subcommand("augment", "Write flipped/transposed/rotated copies of a split");
  augment->add_option("--manifest", aug.manifest, "Source manifest")->required()->check(CLI::ExistingFile);
  augment->add_option("--out", aug.out_dir, "Output directory")->required();
  augment->add_option("--split", aug.split, "Split to augment")->capture_default_str();
  augment->add_option("--copies", aug.copies, "Augmented copies per frame")->capture_default_str();
  augment->add_option("--p-flip", aug.p_flip, "Horizontal flip probability")->capture_default_str();
  augment->add_option("--p-transpose", aug.p_transpose, "Transpose probability")->capture_default_str();
  augment->add_option("--p-rotate", aug.p_rotate, "Rotation probability")->capture_default_str();
  augment->add_option("--rotate-mode", aug.rotate_mode, "quarter (exact) or arbitrary (nearest-neighbour)")
      ->capture_default_str();
  augment->add_option("--seed", aug.seed, "Seed")->capture_default_str();
  add_common(augment, true);

  EvalOptions ev;
  CLI::App* eval = app.add_subcommand("eval", "Score predicted masks against ground-truth masks");
  eval->add_option("--pred", ev.pred_dir, "Directory of predicted mask PNGs")->required();
  eval->add_option("--truth", ev.truth_dir, "Directory of ground-truth mask PNGs (same relative paths)")->required();
  eval->add_option("--absent", ev.policy, "Absent-class policy: exclude or score-one")->capture_default_str();
  eval->add_option("--aggregation", ev.aggregation, "micro or per-image")->capture_default_str();
  eval->add_option("--format", ev.format, "text, csv or tsv")->capture_default_str();
  add_common(eval, true);

  TrainOptions tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the linear softmax baseline");
  train_cmd->add_option("--manifest", tr.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model", tr.model_path, "Checkpoint output path");
  train_cmd->add_option("--log", tr.log_path, "Training log (TSV) output path");
  train_cmd->add_option("--loss", tr.loss, "cce, dice, focal or dice_focal")->capture_default_str();
  train_cmd->add_option("--gamma", tr.gamma, "Focal exponent")->capture_default_str();
  train_cmd->add_option("--alpha", tr.alpha, "Focal weight in dice_focal")->capture_default_str();
  train_cmd->add_option("--epsilon", tr.epsilon, "Probability clamp and Dice smoothing")->capture_default_str();
  train_cmd->add_option("--mix", tr.mix, "dice_focal mixing: additive or convex")->capture_default_str();
  train_cmd->add_option("--dice-classes", tr.dice_classes, "Dice loss classes: target or target-or-pred")
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.learning_rate, "Learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Frames per batch")->capture_default_str();
  train_cmd->add_option("--patience", tr.patience, "Early-stopping patience in epochs; 0 disables")
      ->capture_default_str();
  train_cmd->add_option("--window", tr.window, "Local-mean window (odd)")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Shuffle seed")->capture_default_str();
  train_cmd->add_option("--train-split", tr.train_split, "Split trained on")->capture_default_str();
  train_cmd->add_option("--val-split", tr.val_split, "Split scored after each epoch")->capture_default_str();
  add_common(train_cmd, true);

  ReportOptions rep;
  CLI::App* report = app.add_subcommand("report", "Per-class Dice table of a model over manifest splits");
  report->add_option("--manifest", rep.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  report->add_option("--model", rep.model_path, "Checkpoint")->required()->check(CLI::ExistingFile);
  report->add_option("--splits", rep.splits, "Splits to report, one column each")->capture_default_str();
  report->add_option("--absent", rep.policy, "Absent-class policy: exclude or score-one")->capture_default_str();
  report->add_option("--aggregation", rep.aggregation, "micro or per-image")->capture_default_str();
  report->add_option("--format", rep.format, "text, csv or tsv")->capture_default_str();
  add_common(report, true);

  MeshDemoOptions demo;
  CLI::App* mesh_demo = app.add_subcommand("mesh-demo", "Write procedural spacecraft OBJ files and their class map");
  mesh_demo->add_option("--out", demo.out_dir, "Output directory")->required();
  mesh_demo->add_option("--detail", demo.detail, "Tessellation level")->capture_default_str();
  mesh_demo->add_option("--variants", demo.variants, "Variant numbers 0-4")->capture_default_str();
  mesh_demo->add_flag("--toy", demo.toy, "Write the two-component toy mesh instead");
  add_common(mesh_demo, false);

  std::vector<std::string> argv_storage{"orbseg"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    set_thread_count(common.threads);
    if (generate->parsed()) run_generate(gen, common, out);
    if (split_cmd->parsed()) run_split(sp, out);
    if (validate->parsed()) run_validate(validate_manifest_path, common, out);
    if (augment->parsed()) run_augment(aug, common, out);
    if (eval->parsed()) run_eval(ev, common, out);
    if (train_cmd->parsed()) run_train(tr, common, out);
    if (report->parsed()) run_report(rep, common, out);
    if (mesh_demo->parsed()) run_mesh_demo(demo, common, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}

}  // namespace orbseg
