#include "xbench/carbon.hpp"

#include <fstream>
#include <sstream>

namespace xbench {

void InfrastructureProfile::validate() const {
  if (name.empty()) throw ConfigError("profile name must not be empty");
  if (watts <= 0.0) throw ConfigError("profile '" + name + "': watts must be > 0");
  if (pue < 1.0) throw ConfigError("profile '" + name + "': pue must be >= 1");
  if (carbon_intensity < 0.0)
    throw ConfigError("profile '" + name + "': carbon_intensity must be >= 0");
  if (manufacturing_per_hour < 0.0)
    throw ConfigError("profile '" + name + "': manufacturing_per_hour must be >= 0");
  if (is_remote && manufacturing_per_hour != 0.0)
    throw ConfigError("profile '" + name + "': remote profiles carry no manufacturing term");
}

void MemoryContext::validate() const {
  if (instance_total_mb <= 0.0) throw std::invalid_argument("instance_total_mb must be > 0");
  const double used = app_size_mb + model_size_mb;
  if (used <= 0.0) throw std::invalid_argument("app_size_mb + model_size_mb must be > 0");
  if (used > instance_total_mb)
    throw std::invalid_argument("memory in use exceeds instance total");
}

double footprint_mg(const InfrastructureProfile& profile, double duration_s) {
  if (duration_s < 0.0) throw std::invalid_argument("duration must be >= 0");
  const double gph = profile.watts * profile.pue * profile.carbon_intensity / 1000.0 +
                     profile.manufacturing_per_hour;
  return gph * duration_s / 3.6;
}

double memory_scaled_mg_per_mb(double total_mg, const MemoryContext& mem) {
  mem.validate();
  return total_mg * mem.fraction();
}

double sustained_footprint_g(const InfrastructureProfile& profile, double hours) {
  if (hours < 0.0) throw std::invalid_argument("hours must be >= 0");
  return footprint_mg(profile, hours * 3600.0) / 1000.0;
}

double transport_baseline_g(double distance_km, double emission_per_km) {
  if (distance_km < 0.0 || emission_per_km < 0.0)
    throw std::invalid_argument("distance and emission factor must be >= 0");
  return distance_km * emission_per_km;
}

ComparisonTable compare_footprints(const std::vector<std::pair<std::string, double>>& entries,
                                   const std::string& baseline_label) {
  double baseline = -1.0;
  for (const auto& [label, grams] : entries) {
    if (grams < 0.0) throw std::invalid_argument("footprint values must be >= 0");
    if (label == baseline_label) baseline = grams;
  }
  if (baseline < 0.0) throw std::invalid_argument("baseline '" + baseline_label + "' not among entries");

  ComparisonTable table;
  table.baseline_label = baseline_label;
  for (const auto& [label, grams] : entries) {
    ComparisonRow row{label, grams, std::nullopt};
    if (baseline > 0.0) {
      row.ratio_to_baseline = grams / baseline;
    } else if (grams == 0.0) {
      row.ratio_to_baseline = 1.0; // 0/0: entry matches the baseline exactly
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "label,gco2eq,ratio_to_" << baseline_label << "\n";
  for (const auto& row : rows) {
    out << row.label << ',' << row.grams << ',';
    if (row.ratio_to_baseline)
      out << *row.ratio_to_baseline;
    else
      out << "undefined";
    out << "\n";
  }
  return out.str();
}

nlohmann::json ComparisonTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j{{"label", row.label}, {"gco2eq", row.grams}};
    if (row.ratio_to_baseline)
      j["ratio_to_baseline"] = *row.ratio_to_baseline;
    else
      j["ratio_to_baseline"] = nullptr;
    rows_json.push_back(std::move(j));
  }
  return nlohmann::json{{"baseline", baseline_label}, {"rows", rows_json}};
}

std::vector<InfrastructureProfile> parse_profiles(const nlohmann::json& doc) {
  if (!doc.contains("profiles") || !doc["profiles"].is_array())
    throw ConfigError("profiles file: expected top-level 'profiles' array");
  std::vector<InfrastructureProfile> profiles;
  for (const auto& entry : doc["profiles"]) {
    InfrastructureProfile p;
    p.name = entry.at("name").get<std::string>();
    p.watts = entry.at("watts").get<double>();
    p.pue = entry.at("pue").get<double>();
    p.carbon_intensity = entry.at("carbon_intensity").get<double>();
    p.manufacturing_per_hour = entry.value("manufacturing_per_hour", 0.0);
    p.is_remote = entry.value("is_remote", false);
    if (entry.contains("billing_min_s")) p.billing_min_s = entry["billing_min_s"].get<double>();
    p.validate();
    profiles.push_back(std::move(p));
  }
  return profiles;
}

std::vector<InfrastructureProfile> load_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profiles file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("profiles file " + path.string() + ": " + e.what());
  }
  return parse_profiles(doc);
}

const InfrastructureProfile& find_profile(const std::vector<InfrastructureProfile>& profiles,
                                          const std::string& name) {
  for (const auto& p : profiles)
    if (p.name == name) return p;
  throw ConfigError("unknown infrastructure profile: " + name);
}

}  // namespace xbench
