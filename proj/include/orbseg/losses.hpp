#pragma once

#include <string_view>
#include <vector>

#include "orbseg/image.hpp"

namespace orbseg {

// H x W x K probabilities, pixel-major: values[pixel * K + k].
struct ProbField {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<double> values;

  ProbField() = default;
  ProbField(int h, int w, int k, double fill = 0.0)
      : height(h), width(w), num_classes(k), values(static_cast<std::size_t>(h) * w * k, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  double& at(std::size_t pixel, int k) { return values[pixel * num_classes + k]; }
  double at(std::size_t pixel, int k) const { return values[pixel * num_classes + k]; }
  // Every pixel nonnegative and summing to 1 within `tolerance`.
  bool is_simplex(double tolerance = 1e-6) const;
};

// H x W class indices; one-hot semantics for the losses.
struct TargetField {
  int height = 0;
  int width = 0;
  std::vector<ClassIndex> labels;

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  static TargetField from_mask(const CategoricalMask& mask) { return {mask.height, mask.width, mask.data}; }
};

// Which classes enter the Dice average. The default counts classes present in
// the target. target_or_pred_present also counts classes with predicted mass,
// which matches the metric's exclude policy on hard predictions.
enum class DiceClassSet { target_present, target_or_pred_present };

// additive: dice + alpha * focal. convex: (1 - alpha) * dice + alpha * focal,
// alpha in [0, 1].
enum class MixMode { additive, convex };

struct LossParams {
  double gamma = 2.0;
  double alpha = 1.0;
  double epsilon = 1e-7;
  DiceClassSet dice_classes = DiceClassSet::target_present;
  MixMode mix = MixMode::additive;

  void validate() const;
};

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // same layout as ProbField::values
};

enum class LossKind { cce, dice, focal, dice_focal };
std::string_view to_string(LossKind kind);
LossKind loss_from_string(std::string_view text);  // throws ConfigError

// mean over pixels of -log(clamp(p_true, eps, 1)).
LossResult cce_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});
// 1 - mean over included classes of (2 sum(p t) + eps) / (sum p + sum t + eps).
LossResult dice_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});
// mean over pixels of (1 - q)^gamma * -log(q), q = clamp(p_true, eps, 1).
LossResult focal_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});
LossResult dice_focal_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});

LossResult compute_loss(LossKind kind, const ProbField& probs, const TargetField& target,
                        const LossParams& params = {});

namespace reference {
// Straight serial loops, kept as the oracle for the parallel kernels.
LossResult cce_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});
LossResult dice_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});
LossResult focal_loss(const ProbField& probs, const TargetField& target, const LossParams& params = {});
}  // namespace reference

}  // namespace orbseg
