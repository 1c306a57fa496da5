#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fa/types.hpp"

namespace fa {

enum class Stratum { overall, internal, external, custom };

std::string_view to_string(Stratum s);
Stratum parse_stratum(std::string_view s);

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  Stratum stratum = Stratum::overall;

  std::int64_t total() const noexcept { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Metric values are fractions in [0, 1]; std::nullopt is the explicit
/// "undefined" sentinel for a zero denominator.
struct MetricsReport {
  ConfusionCounts counts;
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> accuracy;
  std::optional<double> f1;
};

/// Tallies predictions against truths with fluorescent as the positive class.
/// The first entry is always the overall stratum, followed by one entry per
/// distinct stratum tag in order of first appearance (overall tags fold into
/// the overall entry only). Throws LengthMismatch.
std::vector<ConfusionCounts> confusion(const std::vector<Label>& predictions, const std::vector<Label>& truths,
                                       const std::vector<Stratum>& strata);

MetricsReport metrics(const ConfusionCounts& counts);

/// Rounds a fraction to tenths of a percent, half-up (0.6875 -> 688).
std::int64_t to_tenths_percent(std::int64_t numerator, std::int64_t denominator);

struct RateTarget {
  double recall = 0, precision = 0, accuracy = 0, f1 = 0;  // percentages, one decimal
  std::optional<std::int64_t> total_hint;
  std::optional<std::int64_t> positives_hint;
};

/// Every integer confusion matrix with total <= max(total_hint, 200) whose
/// metrics round to the target percentages, sorted by total ascending (ties
/// by tp, fp, fn). A total/positives hint, when given, also filters.
/// Throws NoSolution when nothing matches and InvalidParams for rates
/// outside [0, 100].
std::vector<ConfusionCounts> reconcile_rates(const RateTarget& target);

}  // namespace fa

namespace fa {

/// Rounded percentage text ("68.8%") or "n/a"; exact integer rounding from the counts.
std::string format_percent(std::int64_t numerator, std::int64_t denominator);

/// Aligned plain-text table: one row per report with recall, precision,
/// accuracy, F1 and the frame count. `row_prefix` names the split ("Validation").
std::string format_metrics_table(const std::vector<MetricsReport>& reports, const std::string& row_prefix);

}  // namespace fa
