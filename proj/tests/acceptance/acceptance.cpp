// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "orbseg/baseline.hpp"
#include "orbseg/cli.hpp"
#include "orbseg/config_text.hpp"
#include "orbseg/dataset.hpp"
#include "orbseg/error.hpp"
#include "orbseg/losses.hpp"
#include "orbseg/mask_codec.hpp"
#include "orbseg/mesh_io.hpp"
#include "orbseg/metrics.hpp"
#include "orbseg/parallel.hpp"
#include "orbseg/primitives.hpp"
#include "orbseg/scene_render.hpp"
#include "orbseg/taxonomy.hpp"
#include "orbseg/util.hpp"
#include "random_fields.hpp"
#include "temp_dir.hpp"
#include "toy_scene.hpp"

namespace {

namespace fs = std::filesystem;
using namespace orbseg;
using orbseg::testing::TempDir;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (code != 0) throw Error("orbseg " + args.front() + " failed: " + err.str());
  return code;
}

// --- 1. analytic loss gradients against central differences ---------------

Verdict gradient_correctness() {
  const auto start = Clock::now();
  struct Family {
    std::string name;
    LossKind kind;
    double gamma;
  };
  const std::vector<Family> families{{"cce", LossKind::cce, 2.0},         {"dice", LossKind::dice, 2.0},
                                     {"focal(g=0)", LossKind::focal, 0.0}, {"focal(g=1)", LossKind::focal, 1.0},
                                     {"focal(g=2)", LossKind::focal, 2.0}, {"dice_focal", LossKind::dice_focal, 2.0}};
  Rng rng(101);
  double worst = 0.0;
  std::string worst_family;
  for (const Family& f : families) {
    LossParams params;
    params.gamma = f.gamma;
    for (int i = 0; i < 100; ++i) {
      const int h = 1 + static_cast<int>(rng.below(8));
      const int w = 1 + static_cast<int>(rng.below(8));
      const int k = 2 + static_cast<int>(rng.below(10));
      const ProbField p = orbseg::testing::random_probs(rng, h, w, k);
      const TargetField t = orbseg::testing::random_target(rng, h, w, k);
      const double err = orbseg::testing::max_gradient_error(
          p, t, [&](const ProbField& pr, const TargetField& tg) { return compute_loss(f.kind, pr, tg, params); });
      if (err > worst) {
        worst = err;
        worst_family = f.name;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-4 && elapsed < 60.0, "600 instances, worst relative error " + fmt("%.2e", worst) + " (" +
                                               worst_family + "), " + fmt("%.1f s", elapsed)};
}

// --- 2. focal loss with gamma 0 reduces to cross-entropy -------------------

Verdict focal_cce_identity() {
  Rng rng(202);
  LossParams params;
  params.gamma = 0.0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int h = 1 + static_cast<int>(rng.below(8));
    const int w = 1 + static_cast<int>(rng.below(8));
    const int k = 2 + static_cast<int>(rng.below(10));
    const ProbField p = orbseg::testing::random_probs(rng, h, w, k);
    const TargetField t = orbseg::testing::random_target(rng, h, w, k);
    const LossResult focal = focal_loss(p, t, params);
    const LossResult cce = cce_loss(p, t, params);
    worst = std::max(worst, std::fabs(focal.value - cce.value));
    for (std::size_t j = 0; j < focal.grad.size(); ++j) worst = std::max(worst, std::fabs(focal.grad[j] - cce.grad[j]));
  }
  return {worst <= 1e-12, "100 instances, max |focal - cce| over values and gradients " + fmt("%.2e", worst)};
}

// --- 3. Dice metric against a set-counting oracle -------------------------

Verdict dice_metric_oracle() {
  Rng rng(303);
  int mismatches = 0;
  int absent_seen = 0;
  for (int i = 0; i < 1000; ++i) {
    const int h = 1 + static_cast<int>(rng.below(16));
    const int w = 1 + static_cast<int>(rng.below(16));
    const int k = 1 + static_cast<int>(rng.below(5));
    // Draw labels from a random subset of the classes so some are absent.
    const int used = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    CategoricalMask pred = orbseg::testing::random_mask(rng, h, w, used);
    CategoricalMask truth = orbseg::testing::random_mask(rng, h, w, used);
    const ConfusionTally counts = tally(pred, truth, static_cast<std::size_t>(k));

    for (AbsentPolicy policy : {AbsentPolicy::exclude, AbsentPolicy::score_one}) {
      const DiceReport report = dice_scores(counts, policy);
      double sum = 0.0;
      std::size_t included = 0;
      for (int c = 0; c < k; ++c) {
        std::set<std::size_t> p_set, t_set, both;
        for (std::size_t px = 0; px < pred.data.size(); ++px) {
          if (pred.data[px] == c) p_set.insert(px);
          if (truth.data[px] == c) t_set.insert(px);
        }
        std::set_intersection(p_set.begin(), p_set.end(), t_set.begin(), t_set.end(),
                              std::inserter(both, both.begin()));
        std::optional<double> expected;
        if (p_set.empty() && t_set.empty()) {
          ++absent_seen;
          if (policy == AbsentPolicy::score_one) expected = 1.0;
        } else {
          expected = 2.0 * double(both.size()) / double(p_set.size() + t_set.size());
        }
        if (report.per_class[c] != expected) ++mismatches;
        if (expected) {
          sum += *expected;
          ++included;
        }
      }
      const double macro = included > 0 ? sum / double(included) : 0.0;
      if (report.macro_average != macro || report.included != included) ++mismatches;
    }
  }
  return {mismatches == 0 && absent_seen > 0, "1000 pairs x 2 policies, " + std::to_string(mismatches) +
                                                  " mismatches, " + std::to_string(absent_seen) +
                                                  " absent-class cases exercised"};
}

// --- shared scaled generation run (criteria 4 and 8) ----------------------

struct ScaledRun {
  TempDir dir;
  std::string meshes, out;
  double seconds = 0.0;
  int threads = 0;
  std::string error;
};

ScaledRun& scaled_run() {
  static ScaledRun r;
  static bool done = false;
  if (!done) {
    done = true;
    r.meshes = r.dir.file("meshes");
    r.out = r.dir.file("dataset");
    try {
      cli({"mesh-demo", "--out", r.meshes, "--detail", "8", "--variants", "0", "1"});
      const auto start = Clock::now();
      cli({"generate", "--mesh", r.meshes + "/observatory.obj", "--mesh", r.meshes + "/dish_probe.obj", "--map",
           r.meshes + "/classes.map", "--out", r.out, "--n-positions", "50", "--width", "256", "--height", "256",
           "--seed", "8"});
      r.seconds = seconds_since(start);
      r.threads = thread_count();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }
  return r;
}

// --- 4. mask foreground equals primary-ray hits ---------------------------

Verdict registration_invariant() {
  ScaledRun& r = scaled_run();
  if (!r.error.empty()) return {false, r.error};
  const ClassTaxonomy taxonomy = default_taxonomy();
  const DatasetManifest manifest = read_manifest(r.out + "/" + kManifestFileName);

  // Recover every frame's pose by re-planning with the same inputs.
  const MaterialClassMap map = load_material_map(r.meshes + "/classes.map", taxonomy);
  std::vector<AnnotatedMesh> meshes;
  for (const char* name : {"observatory", "dish_probe"}) {
    meshes.push_back(load_annotated_mesh(r.meshes + "/" + name + ".obj", map, taxonomy));
  }
  const std::vector<SpacecraftInput> inputs{{"observatory", &meshes[0], false}, {"dish_probe", &meshes[1], false}};
  GenerationConfig config;
  config.poses.n_positions = 50;
  const GenerationPlan plan = plan_dataset(inputs, SceneConfig{}, config, taxonomy, 8);
  if (plan.manifest.records != manifest.records) return {false, "re-planned frames differ from the manifest"};

  std::vector<RayCaster> casters;
  for (const AnnotatedMesh& m : meshes) casters.emplace_back(m);
  std::size_t bad_frames = 0, bad_pixels = 0, oracle_pixels = 0, oracle_bad = 0;
  for (std::size_t i = 0; i < plan.frames.size(); ++i) {
    const PlannedFrame& f = plan.frames[i];
    const CategoricalMask mask = decode_mask(manifest.resolve(f.record.mask_path), taxonomy);
    const std::size_t bad = registration_mismatches(casters[f.spacecraft], f.pose, mask);
    bad_pixels += bad;
    bad_frames += bad > 0;
    // Cross-check the BVH against exhaustive triangle tests on a pixel lattice.
    if (i % 50 == 0) {
      const Camera camera(f.pose, mask.width, mask.height);
      for (int row = 0; row < mask.height; row += 4) {
        for (int col = 0; col < mask.width; col += 4) {
          const bool hit = intersect(camera.primary_ray(row, col), meshes[f.spacecraft]).has_value();
          oracle_bad += hit != (mask.at(row, col) != 0);
          ++oracle_pixels;
        }
      }
    }
  }
  return {plan.frames.size() >= 300 && bad_frames == 0 && oracle_bad == 0,
          std::to_string(plan.frames.size()) + " frames, " + std::to_string(bad_frames) + " frames / " +
              std::to_string(bad_pixels) + " pixels mismatched; exhaustive-intersection cross-check " +
              std::to_string(oracle_bad) + " of " + std::to_string(oracle_pixels) + " pixels mismatched"};
}

// --- 5. palette-indexed mask round trip -----------------------------------

Verdict palette_round_trip() {
  TempDir dir;
  const ClassTaxonomy taxonomy = default_taxonomy();
  const int k = static_cast<int>(taxonomy.size());
  Rng rng(505);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const int h = 1 + static_cast<int>(rng.below(40));
    const int w = 1 + static_cast<int>(rng.below(40));
    const CategoricalMask mask = orbseg::testing::random_mask(rng, h, w, k);
    const std::string path = dir.file("m" + std::to_string(i % 8) + ".png");
    encode_mask(mask, taxonomy, path);
    failures += !(decode_mask(path, taxonomy) == mask);
  }

  // A file written under one palette must not decode under another.
  std::vector<ClassDef> specs = taxonomy.classes();
  specs.back().display_color = Rgb8{1, 2, 3};
  const ClassTaxonomy other = ClassTaxonomy::create(specs);
  const std::string path = dir.file("other.png");
  encode_mask(CategoricalMask(8, 8, 1), other, path);
  bool rejected = false;
  try {
    decode_mask(path, taxonomy);
  } catch (const FormatError&) {
    rejected = true;
  }
  // So must a plain RGB image.
  write_rgb_png(RgbImage(8, 8), dir.file("rgb.png"));
  bool rgb_rejected = false;
  try {
    decode_mask(dir.file("rgb.png"), taxonomy);
  } catch (const FormatError&) {
    rgb_rejected = true;
  }
  return {failures == 0 && rejected && rgb_rejected,
          "1000 masks, " + std::to_string(failures) + " round-trip failures; mismatched palette " +
              (rejected ? "rejected" : "ACCEPTED") + "; RGB file " + (rgb_rejected ? "rejected" : "ACCEPTED")};
}

// --- 6. pose arithmetic ---------------------------------------------------

Verdict pose_arithmetic() {
  const ClassTaxonomy taxonomy = default_taxonomy();
  double worst_ratio = 0.0, worst_sin = 0.0;
  std::vector<std::size_t> counts;
  bool grouped = true;
  for (int variant : {0, 1}) {
    const AnnotatedMesh mesh = make_demo_spacecraft(variant, 2, taxonomy);
    const std::vector<CameraPose> poses = sample_poses(mesh, 5000, {1, 2, 3}, 2.5, 606 + variant);
    counts.push_back(poses.size());
    std::map<int, std::map<int, Vec3>> by_direction;
    for (const CameraPose& p : poses) by_direction[p.pose_id][p.range_tier] = p.position - p.look_at;
    grouped = grouped && by_direction.size() == 5000;
    for (const auto& [id, tiers] : by_direction) {
      if (tiers.size() != 3 || !tiers.count(1) || !tiers.count(2) || !tiers.count(3)) {
        grouped = false;
        continue;
      }
      const Vec3 base = tiers.at(1);
      for (int tier : {2, 3}) {
        const Vec3 v = tiers.at(tier);
        worst_ratio = std::max(worst_ratio, std::fabs(norm(v) / norm(base) - tier));
        worst_sin = std::max(worst_sin, norm(cross(v, base)) / (norm(v) * norm(base)));
      }
    }
  }
  const bool pass = counts == std::vector<std::size_t>{15000, 15000} && grouped && worst_ratio <= 1e-9 &&
                    worst_sin <= 1e-9;
  return {pass, "poses per mesh " + std::to_string(counts[0]) + ", " + std::to_string(counts[1]) +
                    "; max ratio error " + fmt("%.1e", worst_ratio) + ", max sin(angle) " + fmt("%.1e", worst_sin)};
}

// --- 7. byte-identical regeneration ---------------------------------------

std::map<std::string, std::string> tree_contents(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_text_file(e.path().string());
  }
  return files;
}

Verdict determinism() {
  TempDir dir;
  cli({"mesh-demo", "--out", dir.file("meshes"), "--detail", "3", "--variants", "0", "2"});
  auto generate = [&](const std::string& out, const std::string& threads) {
    cli({"generate", "--mesh", dir.file("meshes/observatory.obj"), "--mesh", dir.file("meshes/drum.obj"), "--map",
         dir.file("meshes/classes.map"), "--unknown-target", "drum", "--out", dir.file(out), "--n-positions", "12",
         "--width", "96", "--height", "96", "--seed", "77", "--threads", threads});
    return tree_contents(dir.file(out));
  };
  const auto a = generate("a", "1");
  const auto b = generate("b", "1");
  const auto c = generate("c", "4");
  return {!a.empty() && a == b && a == c,
          std::to_string(a.size()) + " files; repeat run " + (a == b ? "identical" : "DIFFERS") + ", 4-thread run " +
              (a == c ? "identical" : "DIFFERS")};
}

// --- 8. scaled generation throughput --------------------------------------

Verdict throughput() {
  ScaledRun& r = scaled_run();
  if (!r.error.empty()) return {false, r.error};
  const ClassTaxonomy taxonomy = default_taxonomy();
  const MaterialClassMap map = load_material_map(r.meshes + "/classes.map", taxonomy);
  std::size_t max_triangles = 0;
  for (const char* name : {"observatory", "dish_probe"}) {
    max_triangles = std::max(max_triangles, load_annotated_mesh(r.meshes + "/" + name + ".obj", map, taxonomy).triangle_count());
  }
  const DatasetManifest manifest = read_manifest(r.out + "/" + kManifestFileName);
  std::size_t written = 0;
  for (const FrameRecord& rec : manifest.records) {
    written += fs::exists(manifest.resolve(rec.rgb_path)) && fs::exists(manifest.resolve(rec.mask_path));
  }
  const bool pass = written == 300 && max_triangles <= 20000 && r.seconds < 300.0;
  return {pass, std::to_string(written) + " pairs at 256x256 from meshes of up to " + std::to_string(max_triangles) +
                    " triangles in " + fmt("%.1f s", r.seconds) + " with " + std::to_string(r.threads) +
                    " thread(s) on " + std::to_string(std::thread::hardware_concurrency()) + " core(s)"};
}

// --- 9. end-to-end learning on the toy scene ------------------------------

Verdict toy_learning() {
  const ClassTaxonomy taxonomy = orbseg::testing::toy_taxonomy();
  const AnnotatedMesh mesh = make_toy_mesh(taxonomy);
  const std::vector<LabeledFrame> train_frames = orbseg::testing::toy_frames(mesh, taxonomy, 50, 48, 9001);
  const std::vector<LabeledFrame> held_out = orbseg::testing::toy_frames(mesh, taxonomy, 20, 48, 9002);
  std::string detail;
  bool pass = true;
  for (LossKind kind : {LossKind::cce, LossKind::dice, LossKind::dice_focal}) {
    TrainConfig cfg;
    cfg.loss = kind;
    cfg.epochs = 20;
    cfg.seed = 9;
    const TrainResult result = train(train_frames, {}, cfg, taxonomy);
    const double dice = evaluate(result.model, held_out, taxonomy).macro_average;
    pass = pass && dice >= 0.90;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(kind)) + " " + fmt("%.4f", dice);
  }
  return {pass, "held-out macro Dice after 20 epochs: " + detail};
}

// --- 10. augmentation soundness -------------------------------------------

Verdict augmentation_soundness() {
  Rng rng(1010);
  const AugmentationPolicy policy;
  int histogram_failures = 0, flips = 0, transposes = 0, rotations = 0;
  const int trials = 10000;
  using Key = std::tuple<std::uint8_t, std::uint8_t, std::uint8_t, ClassIndex>;
  auto histogram = [](const RgbImage& rgb, const CategoricalMask& mask) {
    std::map<Key, int> h;
    for (int r = 0; r < mask.height; ++r) {
      for (int c = 0; c < mask.width; ++c) {
        const Rgb8 px = rgb.at(r, c);
        ++h[{px.r, px.g, px.b, mask.at(r, c)}];
      }
    }
    return h;
  };
  for (int i = 0; i < trials; ++i) {
    const int h = 1 + static_cast<int>(rng.below(12));
    const int w = 1 + static_cast<int>(rng.below(12));
    const CategoricalMask mask = orbseg::testing::random_mask(rng, h, w, 4);
    RgbImage rgb(w, h);
    for (std::uint8_t& v : rgb.data) v = static_cast<std::uint8_t>(rng.below(256));
    const AugmentedPair out = augment_pair(rgb, mask, policy, derive_seed(1010, static_cast<std::uint64_t>(i)));
    histogram_failures += histogram(rgb, mask) != histogram(out.rgb, out.mask);
    flips += out.applied.flipped;
    transposes += out.applied.transposed;
    rotations += out.applied.rotated;
  }
  const double f = double(flips) / trials, t = double(transposes) / trials, r = double(rotations) / trials;
  const bool pass = histogram_failures == 0 && std::fabs(f - policy.p_flip) <= 0.02 &&
                    std::fabs(t - policy.p_transpose) <= 0.02 && std::fabs(r - policy.p_rotate) <= 0.02;
  return {pass, std::to_string(trials) + " augmentations, " + std::to_string(histogram_failures) +
                    " histogram changes; frequencies flip " + fmt("%.4f", f) + ", transpose " + fmt("%.4f", t) +
                    ", rotate " + fmt("%.4f", r)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"focal/cce identity", focal_cce_identity},
      {"dice metric oracle", dice_metric_oracle},
      {"registration invariant", registration_invariant},
      {"palette round trip", palette_round_trip},
      {"pose arithmetic", pose_arithmetic},
      {"determinism", determinism},
      {"scaled throughput", throughput},
      {"toy learning", toy_learning},
      {"augmentation soundness", augmentation_soundness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << v.detail
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
