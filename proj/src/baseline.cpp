#include "orbseg/baseline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "orbseg/error.hpp"
#include "orbseg/parallel.hpp"
#include "orbseg/util.hpp"

namespace orbseg {
namespace {

constexpr char kMagic[4] = {'O', 'S', 'L', 'S'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class ByteReader {
 public:
  ByteReader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<std::uint8_t>(bytes_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("'" + path_ + "': truncated checkpoint");
  }
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

// Concatenation of several frames into one (N x 1) field.
struct Batch {
  std::vector<const FeatureField*> features;
  std::vector<const CategoricalMask*> masks;
  std::size_t pixels = 0;
};

}  // namespace

void FeaturizerConfig::validate() const {
  if (window < 1 || window % 2 == 0) throw PreconditionError("feature window must be odd and >= 1");
  if (feature_count() == 0) throw PreconditionError("featurizer has no features enabled");
}

Normalization compute_normalization(const std::vector<LabeledFrame>& frames) {
  // Integer sums keep this exact and order-independent.
  std::array<std::uint64_t, 3> sum{}, sum_sq{};
  std::uint64_t count = 0;
  for (const LabeledFrame& f : frames) {
    for (std::size_t i = 0; i < f.rgb.pixel_count(); ++i) {
      for (int c = 0; c < 3; ++c) {
        const std::uint64_t v = f.rgb.data[i * 3 + c];
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    }
    count += f.rgb.pixel_count();
  }
  Normalization n;
  if (count == 0) return n;
  for (int c = 0; c < 3; ++c) {
    const double mean = double(sum[c]) / double(count);
    const double var = std::max(0.0, double(sum_sq[c]) / double(count) - mean * mean);
    n.mean[c] = mean / 255.0;
    n.stddev[c] = var > 0.0 ? std::sqrt(var) / 255.0 : 1.0;
  }
  return n;
}

FeatureField featurize(const RgbImage& rgb, const FeaturizerConfig& config, const Normalization& norm) {
  config.validate();
  if (rgb.width < 1 || rgb.height < 1) throw PreconditionError("cannot featurize an empty image");
  const int w = rgb.width, h = rgb.height;
  FeatureField out{h, w, config.feature_count(), {}};
  out.values.resize(out.pixel_count() * out.num_features);

  // Summed-area table, (h+1) x (w+1) x 3, for the window means.
  std::vector<std::uint64_t> sat;
  if (config.use_window_mean) {
    sat.assign(static_cast<std::size_t>(h + 1) * (w + 1) * 3, 0);
    const auto idx = [&](int r, int c, int ch) { return (static_cast<std::size_t>(r) * (w + 1) + c) * 3 + ch; };
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        for (int ch = 0; ch < 3; ++ch) {
          sat[idx(r + 1, c + 1, ch)] = rgb.data[(static_cast<std::size_t>(r) * w + c) * 3 + ch] + sat[idx(r, c + 1, ch)] +
                                       sat[idx(r + 1, c, ch)] - sat[idx(r, c, ch)];
        }
      }
    }
  }
  const int half = config.window / 2;

#pragma omp parallel for schedule(static)
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double* f = out.values.data() + (static_cast<std::size_t>(r) * w + c) * out.num_features;
      const std::size_t px = (static_cast<std::size_t>(r) * w + c) * 3;
      if (config.use_rgb) {
        for (int ch = 0; ch < 3; ++ch) *f++ = (rgb.data[px + ch] / 255.0 - norm.mean[ch]) / norm.stddev[ch];
      }
      if (config.use_coords) {
        *f++ = h > 1 ? double(r) / (h - 1) : 0.0;
        *f++ = w > 1 ? double(c) / (w - 1) : 0.0;
      }
      if (config.use_window_mean) {
        const int r0 = std::max(0, r - half), r1 = std::min(h, r + half + 1);
        const int c0 = std::max(0, c - half), c1 = std::min(w, c + half + 1);
        const double area = double(r1 - r0) * double(c1 - c0);
        for (int ch = 0; ch < 3; ++ch) {
          const auto at = [&](int rr, int cc) { return sat[(static_cast<std::size_t>(rr) * (w + 1) + cc) * 3 + ch]; };
          const std::uint64_t s = at(r1, c1) - at(r0, c1) - at(r1, c0) + at(r0, c0);
          *f++ = (double(s) / area / 255.0 - norm.mean[ch]) / norm.stddev[ch];
        }
      }
    }
  }
  return out;
}

LinearSegmenter::LinearSegmenter(int num_classes, FeaturizerConfig config, Normalization norm)
    : num_classes_(num_classes),
      num_features_(config.feature_count()),
      config_(config),
      norm_(norm),
      weights_(static_cast<std::size_t>(num_classes) * config.feature_count(), 0.0),
      bias_(static_cast<std::size_t>(num_classes), 0.0) {
  config_.validate();
  if (num_classes < 2) throw PreconditionError("segmenter needs at least 2 classes");
}

std::uint64_t LinearSegmenter::featurizer_hash() const {
  Fnv1a h;
  const std::uint8_t flags[3] = {config_.use_rgb, config_.use_coords, config_.use_window_mean};
  h.update(flags, 3);
  h.update(&config_.window, sizeof config_.window);
  h.update(norm_.mean.data(), sizeof norm_.mean);
  h.update(norm_.stddev.data(), sizeof norm_.stddev);
  return h.digest();
}

ProbField softmax_probs(const LinearSegmenter& model, const FeatureField& features) {
  if (features.num_features != model.num_features()) {
    throw PreconditionError("feature count " + std::to_string(features.num_features) + " does not match model (" +
                            std::to_string(model.num_features()) + ")");
  }
  const int k_count = model.num_classes();
  const int f_count = model.num_features();
  ProbField probs(features.height, features.width, k_count);
  const std::size_t n = features.pixel_count();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const double* x = features.pixel(static_cast<std::size_t>(i));
    double* p = probs.values.data() + static_cast<std::size_t>(i) * k_count;
    double top = -HUGE_VAL;
    for (int k = 0; k < k_count; ++k) {
      const double* wk = model.weights().data() + static_cast<std::size_t>(k) * f_count;
      double z = model.bias()[k];
      for (int f = 0; f < f_count; ++f) z += wk[f] * x[f];
      p[k] = z;
      top = std::max(top, z);
    }
    double total = 0.0;
    for (int k = 0; k < k_count; ++k) {
      p[k] = std::exp(p[k] - top);
      total += p[k];
    }
    for (int k = 0; k < k_count; ++k) p[k] /= total;
  }
  return probs;
}

ProbField LinearSegmenter::predict(const FeatureField& features) const { return softmax_probs(*this, features); }

CategoricalMask LinearSegmenter::predict_mask(const RgbImage& rgb) const { return argmax_mask(predict(rgb)); }

void LinearSegmenter::save(const std::string& path) const {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(num_classes_));
  put_u32(out, static_cast<std::uint32_t>(num_features_));
  out.push_back(static_cast<char>(config_.use_rgb));
  out.push_back(static_cast<char>(config_.use_coords));
  out.push_back(static_cast<char>(config_.use_window_mean));
  out.push_back(0);
  put_u32(out, static_cast<std::uint32_t>(config_.window));
  for (double v : norm_.mean) put_f64(out, v);
  for (double v : norm_.stddev) put_f64(out, v);
  for (double v : weights_) put_f64(out, v);
  for (double v : bias_) put_f64(out, v);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for '" + path + "'");
}

LinearSegmenter LinearSegmenter::load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << file.rdbuf();
  ByteReader in(ss.str(), path);
  char magic[4];
  for (char& c : magic) c = static_cast<char>(in.u8());
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("'" + path + "' is not a segmenter checkpoint");
  if (const std::uint32_t v = in.u32(); v != kCheckpointVersion) {
    throw FormatError("'" + path + "': unsupported checkpoint version " + std::to_string(v));
  }
  const std::uint32_t k = in.u32();
  const std::uint32_t f = in.u32();
  FeaturizerConfig config;
  config.use_rgb = in.u8() != 0;
  config.use_coords = in.u8() != 0;
  config.use_window_mean = in.u8() != 0;
  in.u8();
  config.window = static_cast<int>(in.u32());
  Normalization norm;
  for (double& v : norm.mean) v = in.f64();
  for (double& v : norm.stddev) v = in.f64();
  if (k < 2 || k > 256 || static_cast<int>(f) != config.feature_count()) {
    throw FormatError("'" + path + "': inconsistent checkpoint dimensions");
  }
  LinearSegmenter model(static_cast<int>(k), config, norm);
  for (double& v : model.weights_) v = in.f64();
  for (double& v : model.bias_) v = in.f64();
  if (!in.done()) throw FormatError("'" + path + "': trailing bytes in checkpoint");
  return model;
}

CategoricalMask argmax_mask(const ProbField& probs) {
  CategoricalMask mask(probs.width, probs.height);
  for (std::size_t i = 0; i < probs.pixel_count(); ++i) {
    int best = 0;
    for (int k = 1; k < probs.num_classes; ++k) {
      if (probs.at(i, k) > probs.at(i, best)) best = k;
    }
    mask.data[i] = static_cast<ClassIndex>(best);
  }
  return mask;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw PreconditionError("learning rate must be positive");
  if (epochs < 1) throw PreconditionError("epochs must be >= 1");
  if (batch_frames < 1) throw PreconditionError("batch size must be >= 1");
  if (patience < 0) throw PreconditionError("patience must be >= 0");
  loss_params.validate();
  featurizer.validate();
}

ParameterGradient objective_gradient(const LinearSegmenter& model, const std::vector<const FeatureField*>& features,
                                     const std::vector<const CategoricalMask*>& masks, LossKind loss,
                                     const LossParams& params) {
  if (features.size() != masks.size() || features.empty()) throw PreconditionError("features and masks must pair up");
  const int k_count = model.num_classes();
  const int f_count = model.num_features();

  // Stack the frames into one N x 1 field so batch-level Dice sums are exact.
  std::size_t n = 0;
  for (std::size_t b = 0; b < features.size(); ++b) {
    if (features[b]->pixel_count() != masks[b]->pixel_count()) throw PreconditionError("feature/mask size mismatch");
    n += features[b]->pixel_count();
  }
  FeatureField stacked{static_cast<int>(n), 1, f_count, {}};
  stacked.values.reserve(n * f_count);
  TargetField target{static_cast<int>(n), 1, {}};
  target.labels.reserve(n);
  for (std::size_t b = 0; b < features.size(); ++b) {
    stacked.values.insert(stacked.values.end(), features[b]->values.begin(), features[b]->values.end());
    target.labels.insert(target.labels.end(), masks[b]->data.begin(), masks[b]->data.end());
  }

  const ProbField probs = softmax_probs(model, stacked);
  const LossResult l = compute_loss(loss, probs, target, params);

  // Softmax Jacobian: dL/dz_k = p_k (g_k - sum_j p_j g_j). Parameter gradients
  // are summed per fixed block and merged in block order.
  const std::size_t stride = static_cast<std::size_t>(k_count) * (f_count + 1);
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks * stride, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    double* acc = partial.data() + static_cast<std::size_t>(b) * stride;
    std::vector<double> dz(k_count);
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = std::min(n, begin + kReductionBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const double* p = probs.values.data() + i * k_count;
      const double* g = l.grad.data() + i * k_count;
      double pg = 0.0;
      for (int k = 0; k < k_count; ++k) pg += p[k] * g[k];
      for (int k = 0; k < k_count; ++k) dz[k] = p[k] * (g[k] - pg);
      const double* x = stacked.pixel(i);
      for (int k = 0; k < k_count; ++k) {
        double* wk = acc + static_cast<std::size_t>(k) * f_count;
        for (int f = 0; f < f_count; ++f) wk[f] += dz[k] * x[f];
        acc[static_cast<std::size_t>(k_count) * f_count + k] += dz[k];
      }
    }
  }
  ParameterGradient out;
  out.value = l.value;
  out.grad.assign(stride, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    const double* acc = partial.data() + b * stride;
    for (std::size_t j = 0; j < stride; ++j) out.grad[j] += acc[j];
  }
  return out;
}

TrainResult train(const std::vector<LabeledFrame>& frames, const std::vector<LabeledFrame>& validation,
                  const TrainConfig& config, const ClassTaxonomy& taxonomy) {
  config.validate();
  if (frames.empty()) throw PreconditionError("training needs at least one frame");
  const int k_count = static_cast<int>(taxonomy.size());
  for (const LabeledFrame& f : frames) {
    if (f.rgb.width != f.mask.width || f.rgb.height != f.mask.height) {
      throw PreconditionError("frame '" + f.id + "': image and mask sizes differ");
    }
    for (ClassIndex v : f.mask.data) {
      if (v >= k_count) throw PreconditionError("frame '" + f.id + "': mask value outside the taxonomy");
    }
  }

  const Normalization norm = config.normalization ? *config.normalization : compute_normalization(frames);
  TrainResult result{LinearSegmenter(k_count, config.featurizer, norm), {}};
  LinearSegmenter& model = result.model;

  std::vector<FeatureField> features;
  features.reserve(frames.size());
  for (const LabeledFrame& f : frames) features.push_back(featurize(f.rgb, config.featurizer, norm));
  std::vector<const FeatureField*> all_features;
  std::vector<const CategoricalMask*> all_masks;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    all_features.push_back(&features[i]);
    all_masks.push_back(&frames[i].mask);
  }

  const std::size_t n_weights = model.weights().size();
  std::vector<std::size_t> order(frames.size());
  double best_dice = -1.0;
  int stale = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t start = 0; start < order.size(); start += config.batch_frames) {
      Batch batch;
      for (std::size_t j = start; j < std::min(order.size(), start + config.batch_frames); ++j) {
        batch.features.push_back(&features[order[j]]);
        batch.masks.push_back(&frames[order[j]].mask);
      }
      const ParameterGradient g =
          objective_gradient(model, batch.features, batch.masks, config.loss, config.loss_params);
      if (!std::isfinite(g.value)) {
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(start / config.batch_frames) + " (try a smaller learning rate)");
      }
      for (std::size_t j = 0; j < n_weights; ++j) model.weights()[j] -= config.learning_rate * g.grad[j];
      for (int k = 0; k < k_count; ++k) model.bias()[k] -= config.learning_rate * g.grad[n_weights + k];
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = objective_gradient(model, all_features, all_masks, config.loss, config.loss_params).value;
    if (!std::isfinite(entry.train_loss)) {
      throw Error("training diverged: non-finite training loss after epoch " + std::to_string(epoch));
    }
    if (!validation.empty()) entry.val_macro_dice = evaluate(model, validation, taxonomy).macro_average;
    result.log.push_back(entry);

    if (config.patience > 0 && entry.val_macro_dice) {
      if (*entry.val_macro_dice > best_dice) {
        best_dice = *entry.val_macro_dice;
        stale = 0;
      } else if (++stale >= config.patience) {
        break;
      }
    }
  }
  return result;
}

DiceReport evaluate(const LinearSegmenter& model, const std::vector<LabeledFrame>& frames,
                    const ClassTaxonomy& taxonomy, AbsentPolicy policy, DiceAggregation aggregation) {
  const std::size_t k = taxonomy.size();
  ConfusionTally total(k);
  std::vector<ConfusionTally> per_frame;
  std::vector<std::uint64_t> frames_present(k, 0);
  for (const LabeledFrame& f : frames) {
    const ConfusionTally t = tally(model.predict_mask(f.rgb), f.mask, k);
    total.merge(t);
    for (std::size_t c = 0; c < k; ++c) frames_present[c] += (t.tp[c] + t.fn[c]) > 0;
    if (aggregation == DiceAggregation::per_image) per_frame.push_back(t);
  }
  DiceReport report = dice_scores(total, policy);
  report.frames_present = std::move(frames_present);
  if (aggregation == DiceAggregation::per_image) report.macro_average = per_image_macro_dice(per_frame, policy);
  return report;
}

std::string training_log_text(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch\ttrain_loss\tval_macro_dice\n";
  for (const EpochLog& e : log) {
    out << e.epoch << '\t' << format_double(e.train_loss) << '\t'
        << (e.val_macro_dice ? format_double(*e.val_macro_dice) : std::string()) << '\n';
  }
  return out.str();
}

}  // namespace orbseg
