#include "xbench/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace xbench {

namespace {

std::vector<const InferenceRecord*> scored_records(std::span<const InferenceRecord> records) {
  std::vector<const InferenceRecord*> out;
  for (const auto& r : records)
    if (!r.anomaly && r.diagnosis) out.push_back(&r);
  return out;
}

std::optional<double> rate_pct(long num, long den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix confusion(std::span<const InferenceRecord> records, double threshold) {
  if (records.empty()) throw std::invalid_argument("confusion: empty record set");
  ConfusionMatrix cm;
  for (const auto* r : scored_records(records)) {
    const bool predicted_positive = r->diagnosis->p_positive >= threshold;
    const bool truly_positive = r->ground_truth == Label::positive;
    if (predicted_positive && truly_positive) ++cm.tp;
    else if (predicted_positive && !truly_positive) ++cm.fp;
    else if (!predicted_positive && !truly_positive) ++cm.tn;
    else ++cm.fn;
  }
  return cm;
}

RateMetrics summary(const ConfusionMatrix& cm) {
  if (cm.total() <= 0) throw std::invalid_argument("summary: empty confusion matrix");
  RateMetrics m;
  m.accuracy = rate_pct(cm.tp + cm.tn, cm.total());
  m.sensitivity = rate_pct(cm.tp, cm.tp + cm.fn);
  m.specificity = rate_pct(cm.tn, cm.tn + cm.fp);
  m.ppv = rate_pct(cm.tp, cm.tp + cm.fp);
  return m;
}

std::vector<double> confidence_histogram(std::span<const InferenceRecord> records, int bins) {
  if (bins < 1) throw std::invalid_argument("confidence_histogram: bins must be >= 1");
  std::vector<double> masses(static_cast<size_t>(bins), 0.0);
  const auto scored = scored_records(records);
  if (scored.empty()) return masses;
  for (const auto* r : scored) {
    const double score = r->ground_truth == Label::positive ? r->diagnosis->p_positive
                                                            : 1.0 - r->diagnosis->p_positive;
    auto bin = static_cast<long>(std::floor(score * bins));
    bin = std::clamp(bin, 0L, static_cast<long>(bins) - 1); // score 1.0 lands in the last bin
    masses[static_cast<size_t>(bin)] += 1.0;
  }
  for (auto& m : masses) m /= static_cast<double>(scored.size());
  return masses;
}

double quantile_lower(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  return values[idx];
}

std::pair<double, double> latency_stats(std::span<const InferenceRecord> records) {
  std::vector<double> times;
  for (const auto* r : scored_records(records)) times.push_back(r->end_to_end_ms);
  if (times.empty()) throw std::invalid_argument("latency_stats: no scored records");
  const double median = quantile_lower(times, 0.5);
  const double iqr = quantile_lower(times, 0.75) - quantile_lower(times, 0.25);
  return {median, iqr};
}

MetricsSummary summarize(const std::string& config_id, std::span<const InferenceRecord> records,
                         double threshold, int bins) {
  MetricsSummary s;
  s.config_id = config_id;
  for (const auto& r : records)
    if (r.anomaly) ++s.anomalies[*r.anomaly];
  const auto scored = scored_records(records);
  s.scored = static_cast<long>(scored.size());
  if (!records.empty()) s.memory_fraction = records.front().memory_fraction;
  if (!scored.empty()) {
    s.cm = confusion(records, threshold);
    s.rates = summary(s.cm);
    std::tie(s.median_time_ms, s.iqr_time_ms) = latency_stats(records);
    std::vector<double> carbon;
    std::vector<double> carbon_per_mb;
    for (const auto* r : scored) {
      carbon.push_back(r->total_carbon_mg());
      carbon_per_mb.push_back(r->total_carbon_mg() * r->memory_fraction);
    }
    s.median_carbon_mg = quantile_lower(carbon, 0.5);
    s.median_carbon_per_mb = quantile_lower(carbon_per_mb, 0.5);
  }
  s.confidence_histogram = confidence_histogram(records, bins);
  return s;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

std::string format_sig3(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", value);
  return buf;
}

namespace {
nlohmann::json rate_json(const std::optional<double>& rate) {
  if (!rate) return nullptr;
  return round1(*rate);
}
}  // namespace

nlohmann::json to_json(const MetricsSummary& s) {
  nlohmann::json anomalies = nlohmann::json::object();
  for (const auto& [kind, count] : s.anomalies) anomalies[to_string(kind)] = count;
  return nlohmann::json{
      {"config_id", s.config_id},
      {"confusion", {{"tp", s.cm.tp}, {"fp", s.cm.fp}, {"tn", s.cm.tn}, {"fn", s.cm.fn}}},
      {"accuracy_pct", rate_json(s.rates.accuracy)},
      {"specificity_pct", rate_json(s.rates.specificity)},
      {"sensitivity_pct", rate_json(s.rates.sensitivity)},
      {"ppv_pct", rate_json(s.rates.ppv)},
      {"median_time_ms", s.median_time_ms},
      {"iqr_time_ms", s.iqr_time_ms},
      {"median_carbon_mg", s.median_carbon_mg},
      {"median_carbon_per_mb", s.median_carbon_per_mb},
      {"confidence_histogram", s.confidence_histogram},
      {"memory_pct", round1(100.0 * s.memory_fraction)},
      {"scored", s.scored},
      {"anomalies", anomalies},
  };
}

}  // namespace xbench
