#include "orbseg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "orbseg/error.hpp"

namespace orbseg {
namespace {

void check_pair(const CategoricalMask& pred, const CategoricalMask& truth, std::size_t num_classes) {
  if (pred.width != truth.width || pred.height != truth.height) {
    throw PreconditionError("mask dimensions differ: " + std::to_string(pred.width) + "x" +
                            std::to_string(pred.height) + " vs " + std::to_string(truth.width) + "x" +
                            std::to_string(truth.height));
  }
  if (num_classes == 0 || num_classes > 256) throw PreconditionError("class count must be 1..256");
}

void count_range(const CategoricalMask& pred, const CategoricalMask& truth, std::size_t begin, std::size_t end,
                 ConfusionTally& out) {
  const std::size_t k = out.num_classes();
  for (std::size_t i = begin; i < end; ++i) {
    const ClassIndex p = pred.data[i], t = truth.data[i];
    if (p >= k || t >= k) throw PreconditionError("mask value outside the class range");
    if (p == t) {
      ++out.tp[t];
    } else {
      ++out.fp[p];
      ++out.fn[t];
    }
  }
  out.pixel_total += end - begin;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void ConfusionTally::merge(const ConfusionTally& other) {
  if (other.num_classes() != num_classes()) throw PreconditionError("cannot merge tallies with different K");
  for (std::size_t k = 0; k < num_classes(); ++k) {
    tp[k] += other.tp[k];
    fp[k] += other.fp[k];
    fn[k] += other.fn[k];
  }
  pixel_total += other.pixel_total;
}

ConfusionTally tally(const CategoricalMask& pred, const CategoricalMask& truth, std::size_t num_classes) {
  check_pair(pred, truth, num_classes);
  const std::size_t n = truth.pixel_count();
  constexpr std::size_t kChunk = 1 << 14;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<ConfusionTally> partial(chunks, ConfusionTally(num_classes));
  bool bad_value = false;
#pragma omp parallel for schedule(static) reduction(|| : bad_value)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    try {
      count_range(pred, truth, begin, std::min(n, begin + kChunk), partial[static_cast<std::size_t>(c)]);
    } catch (const PreconditionError&) {
      bad_value = true;
    }
  }
  if (bad_value) throw PreconditionError("mask value outside the class range");
  ConfusionTally total(num_classes);
  for (const ConfusionTally& p : partial) total.merge(p);
  return total;
}

ConfusionTally reference::tally(const CategoricalMask& pred, const CategoricalMask& truth, std::size_t num_classes) {
  check_pair(pred, truth, num_classes);
  ConfusionTally out(num_classes);
  count_range(pred, truth, 0, truth.pixel_count(), out);
  return out;
}

DiceReport dice_scores(const ConfusionTally& t, AbsentPolicy policy) {
  DiceReport r;
  r.policy = policy;
  r.per_class.resize(t.num_classes());
  r.presence.assign(t.num_classes(), 0);
  double sum = 0.0;
  for (std::size_t k = 0; k < t.num_classes(); ++k) {
    r.presence[k] = t.tp[k] + t.fn[k];
    const std::uint64_t denom = 2 * t.tp[k] + t.fp[k] + t.fn[k];
    if (denom == 0) {
      if (policy == AbsentPolicy::exclude) continue;
      r.per_class[k] = 1.0;
    } else {
      r.per_class[k] = double(2 * t.tp[k]) / double(denom);
    }
    sum += *r.per_class[k];
    ++r.included;
  }
  r.macro_average = r.included > 0 ? sum / double(r.included) : 0.0;
  return r;
}

double per_image_macro_dice(const std::vector<ConfusionTally>& per_frame, AbsentPolicy policy) {
  if (per_frame.empty()) return 0.0;
  double sum = 0.0;
  for (const ConfusionTally& t : per_frame) sum += dice_scores(t, policy).macro_average;
  return sum / double(per_frame.size());
}

std::string report_table(const std::vector<ReportGroup>& groups, const ClassTaxonomy& taxonomy, TableFormat format) {
  if (groups.empty()) throw PreconditionError("report_table needs at least one group");
  const std::size_t k = taxonomy.size();
  for (const ReportGroup& g : groups) {
    if (g.report.per_class.size() != k) throw PreconditionError("report class count does not match taxonomy");
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header{"class"};
  for (const ReportGroup& g : groups) header.push_back(g.label);
  rows.push_back(header);
  const char* absent = format == TableFormat::text ? "\xE2\x80\x94" : "";
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::string> row{taxonomy.at(static_cast<ClassIndex>(c)).name};
    for (const ReportGroup& g : groups) {
      const auto& v = g.report.per_class[c];
      row.push_back(v ? fixed4(*v) : absent);
    }
    rows.push_back(row);
  }
  std::vector<std::string> macro{"macro"};
  for (const ReportGroup& g : groups) macro.push_back(fixed4(g.report.macro_average));
  rows.push_back(macro);

  std::ostringstream out;
  if (format != TableFormat::text) {
    const char sep = format == TableFormat::csv ? ',' : '\t';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << sep;
        const bool quote = format == TableFormat::csv && row[i].find_first_of(",\"") != std::string::npos;
        if (quote) {
          out << '"';
          for (char ch : row[i]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
          out << '"';
        } else {
          out << row[i];
        }
      }
      out << '\n';
    }
    return out.str();
  }

  // Width in code points so the em dash pads like a single character.
  const auto display_width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], display_width(row[i]));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::size_t pad = widths[i] - display_width(row[i]);
      if (i == 0) {
        out << row[i] << std::string(pad, ' ');
      } else {
        out << "  " << std::string(pad, ' ') << row[i];
      }
    }
    out << '\n';
    if (r == 0 || r + 2 == rows.size()) {
      std::size_t total = widths[0];
      for (std::size_t i = 1; i < widths.size(); ++i) total += widths[i] + 2;
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace orbseg
