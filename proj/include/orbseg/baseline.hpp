#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orbseg/image.hpp"
#include "orbseg/losses.hpp"
#include "orbseg/metrics.hpp"
#include "orbseg/taxonomy.hpp"

namespace orbseg {

struct LabeledFrame {
  std::string id;
  RgbImage rgb;
  CategoricalMask mask;
};

struct FeaturizerConfig {
  bool use_rgb = true;
  bool use_coords = true;
  bool use_window_mean = true;
  int window = 3;  // odd side length of the local-mean window

  int feature_count() const { return (use_rgb ? 3 : 0) + (use_coords ? 2 : 0) + (use_window_mean ? 3 : 0); }
  void validate() const;
  friend bool operator==(const FeaturizerConfig&, const FeaturizerConfig&) = default;
};

// Per-channel statistics applied to RGB values scaled to [0, 1].
struct Normalization {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

// Pixel-channel statistics over a set of frames. A channel with zero variance
// gets stddev 1.
Normalization compute_normalization(const std::vector<LabeledFrame>& frames);

struct FeatureField {
  int height = 0;
  int width = 0;
  int num_features = 0;
  std::vector<double> values;  // pixel-major

  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
  const double* pixel(std::size_t i) const { return values.data() + i * num_features; }
};

// Features per pixel, in order: normalized RGB, (row, col) scaled to [0, 1],
// normalized window-mean RGB (window clipped at the border).
FeatureField featurize(const RgbImage& rgb, const FeaturizerConfig& config, const Normalization& norm);

// Per-pixel softmax(W x + b).
class LinearSegmenter {
 public:
  LinearSegmenter() = default;
  LinearSegmenter(int num_classes, FeaturizerConfig config, Normalization norm);

  int num_classes() const { return num_classes_; }
  int num_features() const { return num_features_; }
  const FeaturizerConfig& featurizer() const { return config_; }
  const Normalization& normalization() const { return norm_; }
  // Row-major K x F.
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }
  std::uint64_t featurizer_hash() const;

  ProbField predict(const FeatureField& features) const;
  ProbField predict(const RgbImage& rgb) const { return predict(featurize(rgb, config_, norm_)); }
  CategoricalMask predict_mask(const RgbImage& rgb) const;

  // Little-endian binary checkpoint: magic "OSLS", u32 version, u32 K, u32 F,
  // u8 use_rgb, u8 use_coords, u8 use_window_mean, u8 pad, i32 window,
  // f64 mean[3], f64 stddev[3], f64 weights[K*F], f64 bias[K].
  void save(const std::string& path) const;
  static LinearSegmenter load(const std::string& path);

  friend bool operator==(const LinearSegmenter&, const LinearSegmenter&) = default;

 private:
  int num_classes_ = 0;
  int num_features_ = 0;
  FeaturizerConfig config_;
  Normalization norm_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

ProbField softmax_probs(const LinearSegmenter& model, const FeatureField& features);

struct TrainConfig {
  LossKind loss = LossKind::cce;
  LossParams loss_params;
  double learning_rate = 0.5;
  int epochs = 5;
  int batch_frames = 8;
  std::uint64_t seed = 0;
  FeaturizerConfig featurizer;
  // When set, used instead of statistics computed from the training frames.
  std::optional<Normalization> normalization;
  // Stop after this many epochs without validation-Dice improvement; 0 is off.
  int patience = 0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // full training set, after the epoch's updates
  std::optional<double> val_macro_dice;
};

struct TrainResult {
  LinearSegmenter model;
  std::vector<EpochLog> log;
};

// Mini-batch gradient descent. Each batch is treated as one field for the loss
// (so Dice sums span the batch); gradients reach the weights through the
// softmax Jacobian. Deterministic in config.seed.
TrainResult train(const std::vector<LabeledFrame>& frames, const std::vector<LabeledFrame>& validation,
                  const TrainConfig& config, const ClassTaxonomy& taxonomy);

// Loss of the composed objective (softmax + loss) and its gradient in the
// model parameters, laid out as weights followed by bias. Exposed for
// gradient checks.
struct ParameterGradient {
  double value = 0.0;
  std::vector<double> grad;
};
ParameterGradient objective_gradient(const LinearSegmenter& model, const std::vector<const FeatureField*>& features,
                                     const std::vector<const CategoricalMask*>& masks, LossKind loss,
                                     const LossParams& params);

enum class DiceAggregation { micro, per_image };

// Argmax masks scored against truth. micro sums tallies over frames before
// scoring; per_image keeps the micro per-class scores but replaces the macro
// with the mean of per-frame macros.
DiceReport evaluate(const LinearSegmenter& model, const std::vector<LabeledFrame>& frames,
                    const ClassTaxonomy& taxonomy, AbsentPolicy policy = AbsentPolicy::exclude,
                    DiceAggregation aggregation = DiceAggregation::micro);

// Argmax over classes, lowest index on ties.
CategoricalMask argmax_mask(const ProbField& probs);

std::string training_log_text(const std::vector<EpochLog>& log);

}  // namespace orbseg
