#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "xbench/diagnosis.hpp"

namespace xbench {

enum class Anomaly { suspect_no_image, refusal, parse_error };

std::string to_string(Anomaly a);
Anomaly anomaly_from_string(const std::string& s);

/// One sample run through one configuration. Anomalous records carry no
/// diagnosis and are excluded from accuracy statistics.
struct InferenceRecord {
  std::string config_id;
  std::string sample_id;
  Label ground_truth = Label::negative;
  std::optional<Diagnosis> diagnosis;
  double end_to_end_ms = 0.0;
  double model_exec_ms = 0.0; // equals end_to_end_ms for local models
  std::optional<long> prompt_tokens;
  std::optional<long> completion_tokens;
  std::optional<Anomaly> anomaly;

  // Carbon attribution, recomputable from the timers and named profiles.
  std::string app_profile;
  double app_carbon_mg = 0.0;            // from end_to_end_ms
  std::string remote_profile;            // empty for local configurations
  double remote_carbon_mg = 0.0;         // from remote_time_basis_ms
  double remote_time_basis_ms = 0.0;
  double memory_fraction = 0.0;          // (a+m)/C of the app instance

  double total_carbon_mg() const { return app_carbon_mg + remote_carbon_mg; }

  nlohmann::json to_json() const;
  static InferenceRecord from_json(const nlohmann::json& j);
};

/// Append-only line-delimited JSON store. Each append flushes one line, so
/// an interrupted run loses at most the sample in flight.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path path);

  void append(const InferenceRecord& record);
  const std::set<std::string>& seen_sample_ids() const { return seen_; }
  const std::filesystem::path& path() const { return path_; }

  static std::vector<InferenceRecord> load(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::set<std::string> seen_;
};

}  // namespace xbench
