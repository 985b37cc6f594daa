#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "orbseg/image.hpp"
#include "orbseg/taxonomy.hpp"

namespace orbseg {

// Per-class pixel counts. Tallies form a monoid under merge(), so per-image
// tallies can be combined in any grouping.
struct ConfusionTally {
  std::vector<std::uint64_t> tp, fp, fn;
  std::uint64_t pixel_total = 0;

  ConfusionTally() = default;
  explicit ConfusionTally(std::size_t num_classes) : tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0) {}

  std::size_t num_classes() const { return tp.size(); }
  void merge(const ConfusionTally& other);
  friend bool operator==(const ConfusionTally&, const ConfusionTally&) = default;
};

// pred == truth adds TP to the truth class; otherwise FP to the predicted
// class and FN to the true class. Parallel over rows.
ConfusionTally tally(const CategoricalMask& pred, const CategoricalMask& truth, std::size_t num_classes);

enum class AbsentPolicy { exclude, score_one };

struct DiceReport {
  // Empty when the class is absent (2TP + FP + FN == 0) under the exclude
  // policy.
  std::vector<std::optional<double>> per_class;
  // Ground-truth pixels per class (TP + FN).
  std::vector<std::uint64_t> presence;
  // Frames whose truth mask contains the class; only filled by callers that
  // aggregate over frames.
  std::vector<std::uint64_t> frames_present;
  double macro_average = 0.0;
  std::size_t included = 0;
  AbsentPolicy policy = AbsentPolicy::exclude;
};

// Dice_k = 2TP / (2TP + FP + FN); macro is the mean over included classes.
DiceReport dice_scores(const ConfusionTally& tally, AbsentPolicy policy = AbsentPolicy::exclude);

// Mean of per-frame macro Dice values, for comparison with the default
// micro aggregation (sum tallies, then score).
double per_image_macro_dice(const std::vector<ConfusionTally>& per_frame, AbsentPolicy policy);

struct ReportGroup {
  std::string label;
  DiceReport report;
};

enum class TableFormat { text, csv, tsv };

// One row per class plus a macro row, one column per group. Absent classes
// render as an em dash in text and as an empty field in delimited output.
std::string report_table(const std::vector<ReportGroup>& groups, const ClassTaxonomy& taxonomy,
                         TableFormat format = TableFormat::text);

namespace reference {
ConfusionTally tally(const CategoricalMask& pred, const CategoricalMask& truth, std::size_t num_classes);
}  // namespace reference

}  // namespace orbseg
