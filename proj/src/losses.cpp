#include "orbseg/losses.hpp"

#include <cmath>

#include "orbseg/error.hpp"
#include "orbseg/parallel.hpp"

namespace orbseg {
namespace {

void check_shapes(const ProbField& probs, const TargetField& target) {
  if (probs.height != target.height || probs.width != target.width) {
    throw PreconditionError("probability and target fields differ in size");
  }
  if (probs.num_classes < 1 || probs.values.size() != probs.pixel_count() * probs.num_classes) {
    throw PreconditionError("probability field has an inconsistent layout");
  }
  if (target.labels.size() != target.pixel_count()) throw PreconditionError("target field has an inconsistent layout");
  if (probs.pixel_count() == 0) throw PreconditionError("fields are empty");
  for (ClassIndex t : target.labels) {
    if (t >= probs.num_classes) throw PreconditionError("target label outside the class range");
  }
}

struct Clamped {
  double q;      // clamp(p, eps, 1)
  double slope;  // dq/dp
};

Clamped clamp_prob(double p, double eps) {
  if (p < eps) return {eps, 0.0};
  if (p > 1.0) return {1.0, 0.0};
  return {p, 1.0};
}

// Focal term and its derivative in q. The (1-q)^(gamma-1) factor is dropped
// when gamma == 0 or q == 1, where its product with log q tends to zero.
double focal_value(double q, double gamma) { return std::pow(1.0 - q, gamma) * -std::log(q); }

double focal_slope(double q, double gamma) {
  const double decay = gamma == 0.0 || q >= 1.0 ? 0.0 : gamma * std::pow(1.0 - q, gamma - 1.0) * std::log(q);
  return decay - std::pow(1.0 - q, gamma) / q;
}

// Per-class soft-Dice sums: intersection, prediction mass, target count.
struct DiceSums {
  std::vector<double> inter, pred, truth;
};

DiceSums dice_sums_parallel(const ProbField& probs, const TargetField& target) {
  const int k_count = probs.num_classes;
  const std::size_t n = probs.pixel_count();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks * 3 * k_count, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    double* acc = partial.data() + static_cast<std::size_t>(b) * 3 * k_count;
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = std::min(n, begin + kReductionBlock);
    for (std::size_t i = begin; i < end; ++i) {
      const int t = target.labels[i];
      for (int k = 0; k < k_count; ++k) acc[k_count + k] += probs.at(i, k);
      acc[t] += probs.at(i, t);
      acc[2 * k_count + t] += 1.0;
    }
  }
  DiceSums s{std::vector<double>(k_count, 0.0), std::vector<double>(k_count, 0.0), std::vector<double>(k_count, 0.0)};
  for (std::size_t b = 0; b < blocks; ++b) {
    const double* acc = partial.data() + b * 3 * k_count;
    for (int k = 0; k < k_count; ++k) {
      s.inter[k] += acc[k];
      s.pred[k] += acc[k_count + k];
      s.truth[k] += acc[2 * k_count + k];
    }
  }
  return s;
}

std::vector<bool> included_classes(const DiceSums& s, DiceClassSet set) {
  std::vector<bool> inc(s.truth.size());
  for (std::size_t k = 0; k < inc.size(); ++k) {
    inc[k] = s.truth[k] > 0.0 || (set == DiceClassSet::target_or_pred_present && s.pred[k] > 0.0);
  }
  return inc;
}

}  // namespace

bool ProbField::is_simplex(double tolerance) const {
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    double sum = 0.0;
    for (int k = 0; k < num_classes; ++k) {
      if (at(i, k) < 0.0) return false;
      sum += at(i, k);
    }
    if (std::fabs(sum - 1.0) > tolerance) return false;
  }
  return true;
}

void LossParams::validate() const {
  if (!(gamma >= 0.0)) throw PreconditionError("gamma must be >= 0");
  if (!(alpha >= 0.0)) throw PreconditionError("alpha must be >= 0");
  if (mix == MixMode::convex && alpha > 1.0) throw PreconditionError("convex mixing needs alpha in [0, 1]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0, 1)");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cce: return "cce";
    case LossKind::dice: return "dice";
    case LossKind::focal: return "focal";
    case LossKind::dice_focal: return "dice_focal";
  }
  return "cce";
}

LossKind loss_from_string(std::string_view text) {
  if (text == "cce") return LossKind::cce;
  if (text == "dice") return LossKind::dice;
  if (text == "focal") return LossKind::focal;
  if (text == "dice_focal" || text == "dice+focal") return LossKind::dice_focal;
  throw ConfigError("unknown loss '" + std::string(text) + "' (expected cce, dice, focal or dice_focal)");
}

LossResult cce_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  check_shapes(probs, target);
  params.validate();
  const std::size_t n = probs.pixel_count();
  const double inv_n = 1.0 / double(n);
  LossResult r;
  r.grad.assign(probs.values.size(), 0.0);
  r.value = ordered_block_sum(n, [&](std::size_t i) {
              const int t = target.labels[i];
              const Clamped c = clamp_prob(probs.at(i, t), params.epsilon);
              r.grad[i * probs.num_classes + t] = c.slope * -(1.0 / c.q) * inv_n;
              return -std::log(c.q);
            }) *
            inv_n;
  return r;
}

LossResult focal_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  check_shapes(probs, target);
  params.validate();
  const std::size_t n = probs.pixel_count();
  const double inv_n = 1.0 / double(n);
  LossResult r;
  r.grad.assign(probs.values.size(), 0.0);
  r.value = ordered_block_sum(n, [&](std::size_t i) {
              const int t = target.labels[i];
              const Clamped c = clamp_prob(probs.at(i, t), params.epsilon);
              r.grad[i * probs.num_classes + t] = c.slope * focal_slope(c.q, params.gamma) * inv_n;
              return focal_value(c.q, params.gamma);
            }) *
            inv_n;
  return r;
}

LossResult dice_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  check_shapes(probs, target);
  params.validate();
  const int k_count = probs.num_classes;
  const double eps = params.epsilon;
  const DiceSums s = dice_sums_parallel(probs, target);
  const std::vector<bool> inc = included_classes(s, params.dice_classes);

  std::size_t included = 0;
  double dice_sum = 0.0;
  std::vector<double> num(k_count), den(k_count);
  for (int k = 0; k < k_count; ++k) {
    num[k] = 2.0 * s.inter[k] + eps;
    den[k] = s.pred[k] + s.truth[k] + eps;
    if (inc[k]) {
      dice_sum += num[k] / den[k];
      ++included;
    }
  }
  LossResult r;
  r.value = 1.0 - dice_sum / double(included);
  r.grad.assign(probs.values.size(), 0.0);
  const double scale = -1.0 / double(included);
  const std::size_t n = probs.pixel_count();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const int t = target.labels[static_cast<std::size_t>(i)];
    for (int k = 0; k < k_count; ++k) {
      if (!inc[k]) continue;
      const double tk = k == t ? 1.0 : 0.0;
      r.grad[static_cast<std::size_t>(i) * k_count + k] = scale * (2.0 * tk * den[k] - num[k]) / (den[k] * den[k]);
    }
  }
  return r;
}

LossResult dice_focal_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  params.validate();
  const double w_dice = params.mix == MixMode::convex ? 1.0 - params.alpha : 1.0;
  const double w_focal = params.alpha;
  LossResult d = dice_loss(probs, target, params);
  const LossResult f = focal_loss(probs, target, params);
  d.value = w_dice * d.value + w_focal * f.value;
  for (std::size_t i = 0; i < d.grad.size(); ++i) d.grad[i] = w_dice * d.grad[i] + w_focal * f.grad[i];
  return d;
}

LossResult compute_loss(LossKind kind, const ProbField& probs, const TargetField& target, const LossParams& params) {
  switch (kind) {
    case LossKind::cce: return cce_loss(probs, target, params);
    case LossKind::dice: return dice_loss(probs, target, params);
    case LossKind::focal: return focal_loss(probs, target, params);
    case LossKind::dice_focal: return dice_focal_loss(probs, target, params);
  }
  throw PreconditionError("unknown loss kind");
}

namespace reference {

LossResult cce_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  check_shapes(probs, target);
  const std::size_t n = probs.pixel_count();
  LossResult r;
  r.grad.assign(probs.values.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = target.labels[i];
    const double p = probs.at(i, t);
    const double q = std::min(1.0, std::max(params.epsilon, p));
    sum += -std::log(q);
    if (p >= params.epsilon && p <= 1.0) r.grad[i * probs.num_classes + t] = -1.0 / (q * double(n));
  }
  r.value = sum / double(n);
  return r;
}

LossResult focal_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  check_shapes(probs, target);
  const std::size_t n = probs.pixel_count();
  const double g = params.gamma;
  LossResult r;
  r.grad.assign(probs.values.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int t = target.labels[i];
    const double p = probs.at(i, t);
    const double q = std::min(1.0, std::max(params.epsilon, p));
    const double ce = -std::log(q);
    sum += std::pow(1.0 - q, g) * ce;
    if (p >= params.epsilon && p <= 1.0) {
      // d/dq [(1-q)^g * (-log q)] = -g (1-q)^(g-1) (-log q) - (1-q)^g / q
      double d = -std::pow(1.0 - q, g) / q;
      if (g > 0.0 && q < 1.0) d += -g * std::pow(1.0 - q, g - 1.0) * ce;
      r.grad[i * probs.num_classes + t] = d / double(n);
    }
  }
  r.value = sum / double(n);
  return r;
}

LossResult dice_loss(const ProbField& probs, const TargetField& target, const LossParams& params) {
  check_shapes(probs, target);
  const int kc = probs.num_classes;
  const std::size_t n = probs.pixel_count();
  std::vector<double> inter(kc, 0.0), pred(kc, 0.0), truth(kc, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < kc; ++k) {
      const double tk = target.labels[i] == k ? 1.0 : 0.0;
      inter[k] += probs.at(i, k) * tk;
      pred[k] += probs.at(i, k);
      truth[k] += tk;
    }
  }
  std::vector<int> used;
  for (int k = 0; k < kc; ++k) {
    const bool present = truth[k] > 0 || (params.dice_classes == DiceClassSet::target_or_pred_present && pred[k] > 0);
    if (present) used.push_back(k);
  }
  LossResult r;
  r.grad.assign(probs.values.size(), 0.0);
  double mean = 0.0;
  for (int k : used) {
    const double num = 2.0 * inter[k] + params.epsilon;
    const double den = pred[k] + truth[k] + params.epsilon;
    mean += num / den / double(used.size());
    for (std::size_t i = 0; i < n; ++i) {
      const double tk = target.labels[i] == k ? 1.0 : 0.0;
      // quotient rule on num/den; d num/dp = 2 t, d den/dp = 1
      r.grad[i * kc + k] = -((2.0 * tk) * den - num) / (den * den) / double(used.size());
    }
  }
  r.value = 1.0 - mean;
  return r;
}

}  // namespace reference
}  // namespace orbseg
