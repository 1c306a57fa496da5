#include "fa/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "fa/errors.hpp"

namespace fa {

std::string_view to_string(Stratum s) {
  switch (s) {
    case Stratum::overall: return "overall";
    case Stratum::internal: return "internal";
    case Stratum::external: return "external";
    case Stratum::custom: return "custom";
  }
  return "custom";
}

Stratum parse_stratum(std::string_view s) {
  for (auto v : {Stratum::overall, Stratum::internal, Stratum::external, Stratum::custom}) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorKind::InvalidParams, "unknown stratum '" + std::string(s) + "'");
}

std::vector<ConfusionCounts> confusion(const std::vector<Label>& predictions, const std::vector<Label>& truths,
                                       const std::vector<Stratum>& strata) {
  if (predictions.size() != truths.size() || predictions.size() != strata.size()) {
    fail(ErrorKind::LengthMismatch, "predictions, truths and strata must have equal lengths");
  }
  std::vector<ConfusionCounts> out{ConfusionCounts{.stratum = Stratum::overall}};
  auto tally = [](ConfusionCounts& c, Label pred, Label truth) {
    const bool p = pred == Label::fluorescent;
    const bool t = truth == Label::fluorescent;
    if (p && t) ++c.tp;
    else if (p && !t) ++c.fp;
    else if (!p && t) ++c.fn;
    else ++c.tn;
  };
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    tally(out.front(), predictions[i], truths[i]);
    if (strata[i] == Stratum::overall) continue;
    auto it = std::find_if(out.begin() + 1, out.end(), [&](const auto& c) { return c.stratum == strata[i]; });
    if (it == out.end()) {
      out.push_back(ConfusionCounts{.stratum = strata[i]});
      it = out.end() - 1;
    }
    tally(*it, predictions[i], truths[i]);
  }
  return out;
}

MetricsReport metrics(const ConfusionCounts& c) {
  MetricsReport r;
  r.counts = c;
  auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
    if (den <= 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.recall = ratio(c.tp, c.tp + c.fn);
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.accuracy = ratio(c.tp + c.tn, c.total());
  if (r.recall && r.precision && *r.recall + *r.precision > 0.0) {
    // 2PR/(P+R) reduces to 2tp/(2tp+fp+fn).
    r.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  }
  return r;
}

std::int64_t to_tenths_percent(std::int64_t num, std::int64_t den) {
  // floor(1000*num/den + 1/2) in exact integer arithmetic.
  return (2000 * num + den) / (2 * den);
}

std::vector<ConfusionCounts> reconcile_rates(const RateTarget& target) {
  for (double v : {target.recall, target.precision, target.accuracy, target.f1}) {
    if (!(v >= 0.0 && v <= 100.0)) fail(ErrorKind::InvalidParams, "rates must lie in [0, 100]");
  }
  const auto want = [](double pct) { return static_cast<std::int64_t>(std::llround(pct * 10.0)); };
  const std::int64_t recall = want(target.recall);
  const std::int64_t precision = want(target.precision);
  const std::int64_t accuracy = want(target.accuracy);
  const std::int64_t f1 = want(target.f1);

  const std::int64_t max_total = std::max<std::int64_t>(target.total_hint.value_or(0), 200);
  const std::int64_t lo_total = target.total_hint.value_or(1);
  const std::int64_t hi_total = target.total_hint.value_or(max_total);

  std::vector<ConfusionCounts> out;
  for (std::int64_t n = std::max<std::int64_t>(lo_total, 1); n <= hi_total; ++n) {
    for (std::int64_t pos = 1; pos <= n; ++pos) {  // every metric must be defined
      if (target.positives_hint && pos != *target.positives_hint) continue;
      for (std::int64_t tp = 1; tp <= pos; ++tp) {
        if (to_tenths_percent(tp, pos) != recall) continue;
        const std::int64_t fn = pos - tp;
        for (std::int64_t fp = 0; fp <= n - pos; ++fp) {
          if (to_tenths_percent(tp, tp + fp) != precision) continue;
          const std::int64_t tn = n - pos - fp;
          if (to_tenths_percent(tp + tn, n) != accuracy) continue;
          if (to_tenths_percent(2 * tp, 2 * tp + fp + fn) != f1) continue;
          out.push_back({tp, fp, fn, tn, Stratum::custom});
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ConfusionCounts& a, const ConfusionCounts& b) {
    return std::tuple(a.total(), a.tp, a.fp, a.fn) < std::tuple(b.total(), b.tp, b.fp, b.fn);
  });
  if (out.empty()) fail(ErrorKind::NoSolution, "no integer confusion matrix reproduces the given rates");
  return out;
}

std::string format_percent(std::int64_t num, std::int64_t den) {
  if (den <= 0) return "n/a";
  const auto t = to_tenths_percent(num, den);
  return std::to_string(t / 10) + "." + std::to_string(t % 10) + "%";
}

std::string format_metrics_table(const std::vector<MetricsReport>& reports, const std::string& row_prefix) {
  std::vector<std::array<std::string, 6>> rows;
  rows.push_back({"", "Recall", "Precision", "Accuracy", "F1", "n"});
  for (const auto& r : reports) {
    const auto& c = r.counts;
    const std::string name = c.stratum == Stratum::overall ? row_prefix + " overall"
                                                           : row_prefix + " - " + std::string(to_string(c.stratum)) + " data";
    const bool f1_defined = c.tp + c.fn > 0 && c.tp + c.fp > 0 && c.tp > 0;
    rows.push_back({name, format_percent(c.tp, c.tp + c.fn), format_percent(c.tp, c.tp + c.fp),
                    format_percent(c.tp + c.tn, c.total()),
                    f1_defined ? format_percent(2 * c.tp, 2 * c.tp + c.fp + c.fn) : "n/a", std::to_string(c.total())});
  }
  std::array<std::size_t, 6> width{};
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream os;
  for (const auto& row : rows) {
    os << row[0] << std::string(width[0] - row[0].size(), ' ');
    for (std::size_t i = 1; i < row.size(); ++i) os << "  " << std::string(width[i] - row[i].size(), ' ') << row[i];
    os << '\n';
  }
  return os.str();
}

}  // namespace fa

