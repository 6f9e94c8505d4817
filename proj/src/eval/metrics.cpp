#include "rxsentinel/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::eval {

void ConfusionMatrix::add(bool predicted, bool truth) {
  if (predicted) {
    ++(truth ? tp : fp);
  } else {
    ++(truth ? fn : tn);
  }
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

}  // namespace

Metrics metrics(const ConfusionMatrix& cm) {
  Metrics m;
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.npv = ratio(cm.tn, cm.tn + cm.fn);
  if (m.precision && m.recall) {
    const double s = *m.precision + *m.recall;
    m.f1 = s > 0.0 ? 2.0 * *m.precision * *m.recall / s : 0.0;
  }
  return m;
}

PrCurve pr_curve(std::span<const ScoredTruth> scored) {
  PrCurve c;
  c.total = scored.size();
  for (const auto& s : scored) {
    if (std::isnan(s.score)) throw ConfigError("pr_curve: NaN score");
    if (s.truth) ++c.positives;
  }
  if (c.positives == 0) throw DegenerateError("pr_curve: no positive examples");

  std::vector<ScoredTruth> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredTruth& a, const ScoredTruth& b) { return a.score > b.score; });
  const double p_total = static_cast<double>(c.positives);
  std::size_t tp = 0;
  std::size_t taken = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double t = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == t) {
      if (sorted[i].truth) ++tp;
      ++taken;
      ++i;
    }
    const double recall = static_cast<double>(tp) / p_total;
    const double precision = static_cast<double>(tp) / static_cast<double>(taken);
    c.aupr += (recall - prev_recall) * precision;
    prev_recall = recall;
    c.points.push_back({t, recall, precision});
  }
  return c;
}

nlohmann::ordered_json confusion_to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

nlohmann::ordered_json metrics_to_json(const Metrics& m) {
  return {{"precision", optional_json(m.precision)},
          {"recall", optional_json(m.recall)},
          {"specificity", optional_json(m.specificity)},
          {"npv", optional_json(m.npv)},
          {"f1", optional_json(m.f1)}};
}

std::string pr_curve_csv(const PrCurve& c) {
  std::ostringstream out;
  out << std::setprecision(17) << "recall,precision\n";
  for (const auto& p : c.points) out << p.recall << "," << p.precision << "\n";
  return out.str();
}

std::string pr_curve_jsonl(const PrCurve& c) {
  std::string out;
  for (const auto& p : c.points) {
    nlohmann::ordered_json j = {{"kind", "pr_point"},
                                {"threshold", p.threshold},
                                {"recall", p.recall},
                                {"precision", p.precision}};
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace rxsentinel::eval
