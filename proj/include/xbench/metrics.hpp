#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "xbench/records.hpp"

namespace xbench {

struct ConfusionMatrix {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long total() const { return tp + fp + tn + fn; }
};

/// Rates as percentages in [0,100]. A zero-denominator rate is left empty
/// and rendered as an undefined marker, never thrown.
struct RateMetrics {
  std::optional<double> accuracy;
  std::optional<double> specificity;
  std::optional<double> sensitivity;
  std::optional<double> ppv;
};

struct MetricsSummary {
  std::string config_id;
  ConfusionMatrix cm;
  RateMetrics rates;
  double median_time_ms = 0.0;
  double iqr_time_ms = 0.0;
  double median_carbon_mg = 0.0;
  double median_carbon_per_mb = 0.0;
  std::vector<double> confidence_histogram; // masses, sum 1
  double memory_fraction = 0.0;
  long scored = 0;
  std::map<Anomaly, long> anomalies;
};

/// Binarize non-anomalous records at `threshold`; p_positive >= threshold
/// predicts positive (ties go positive).
ConfusionMatrix confusion(std::span<const InferenceRecord> records, double threshold = 0.5);

RateMetrics summary(const ConfusionMatrix& cm);

/// Per-record mass of probability assigned to the correct class, binned
/// into `bins` equal-width bins over [0,1], last bin right-closed.
std::vector<double> confidence_histogram(std::span<const InferenceRecord> records, int bins = 10);

/// Median and IQR over end_to_end_ms, lower-interpolation quantiles.
std::pair<double, double> latency_stats(std::span<const InferenceRecord> records);

/// Lower-interpolation quantile of an unsorted sample: element at index
/// floor(q * (n - 1)) of the sorted values.
double quantile_lower(std::vector<double> values, double q);

MetricsSummary summarize(const std::string& config_id, std::span<const InferenceRecord> records,
                         double threshold = 0.5, int bins = 10);

/// Presentation rounding: 1 decimal for rates (Table layout).
double round1(double value);

/// Presentation formatting for carbon figures: 3 significant figures.
std::string format_sig3(double value);

nlohmann::json to_json(const MetricsSummary& s);

}  // namespace xbench
