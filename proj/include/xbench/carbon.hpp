#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xbench/errors.hpp"

namespace xbench {

/// Power and grid parameters of one hosting instance. Remote instances
/// (LLM servers) carry no manufacturing term.
struct InfrastructureProfile {
  std::string name;
  double watts = 0.0;                  // instance power draw, W
  double pue = 1.0;                    // power usage effectiveness, >= 1
  double carbon_intensity = 0.0;       // gCO2eq per kWh
  double manufacturing_per_hour = 0.0; // gCO2eq amortized per hour of use
  bool is_remote = false;
  std::optional<double> billing_min_s; // billing granularity, annotation only

  void validate() const;
};

/// Memory occupancy of the instance while a configuration runs.
struct MemoryContext {
  double app_size_mb = 0.0;
  double model_size_mb = 0.0; // 0 for remote configurations
  double instance_total_mb = 0.0;

  double fraction() const { return (app_size_mb + model_size_mb) / instance_total_mb; }
  void validate() const;
};

struct FootprintBreakdown {
  double total_mg = 0.0;
  double memory_scaled_mg_per_mb = 0.0;
  double duration_s = 0.0;
  std::string profile_name;
};

/// Carbon footprint of running on `profile` for `duration_s` seconds,
/// in mgCO2eq. Linear in duration.
double footprint_mg(const InfrastructureProfile& profile, double duration_s);

/// Footprint scaled by the fraction of instance memory in use, mgCO2eq/MB.
double memory_scaled_mg_per_mb(double total_mg, const MemoryContext& mem);

/// Footprint of keeping `profile` busy for `hours`, reported in grams.
double sustained_footprint_g(const InfrastructureProfile& profile, double hours);

/// Emissions of a ground journey, in grams.
double transport_baseline_g(double distance_km, double emission_per_km);

struct ComparisonRow {
  std::string label;
  double grams = 0.0;
  std::optional<double> ratio_to_baseline; // nullopt when the baseline is zero
};

struct ComparisonTable {
  std::string baseline_label;
  std::vector<ComparisonRow> rows;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Ratios of each (label, grams) entry against the designated baseline.
ComparisonTable compare_footprints(const std::vector<std::pair<std::string, double>>& entries,
                                   const std::string& baseline_label);

/// Profiles file: JSON {"profiles": [{name, watts, pue, carbon_intensity,
/// manufacturing_per_hour, is_remote}, ...]}.
std::vector<InfrastructureProfile> load_profiles(const std::filesystem::path& path);
std::vector<InfrastructureProfile> parse_profiles(const nlohmann::json& doc);

const InfrastructureProfile& find_profile(const std::vector<InfrastructureProfile>& profiles,
                                          const std::string& name);

}  // namespace xbench
