#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "xbench/carbon.hpp"
#include "xbench/kb.hpp"
#include "xbench/llm.hpp"
#include "xbench/manifest.hpp"
#include "xbench/metrics.hpp"
#include "xbench/records.hpp"

namespace xbench {

enum class BenchKind { local, llm, llm_with_kb };
enum class TimingMode { sequential, concurrent };

BenchKind bench_kind_from_string(const std::string& s);
std::string to_string(BenchKind kind);

/// Which stored timer the remote-side carbon is charged against.
enum class RemoteTimeBasis { round_trip, end_to_end };

struct BenchConfig {
  std::string config_id;
  BenchKind kind = BenchKind::local;
  std::string model_id;    // local model, or the query embedder for llm_with_kb
  std::string endpoint_id; // remote kinds
  std::string template_id = "standard";
  std::filesystem::path kb_path; // llm_with_kb
  std::string app_profile = "app";
  std::string server_profile; // remote kinds
  MemoryContext memory;
  TimingMode timing_mode = TimingMode::sequential;
  RemoteTimeBasis remote_time_basis = RemoteTimeBasis::round_trip;

  void validate() const;
};

/// A journey used as an emissions baseline in the sustained comparison.
struct JourneyBaseline {
  std::string label = "coach-birmingham-london";
  double distance_km = 188.0; // back-solved default, configurable
  double emission_per_km = 21.7;
};

/// Declarative run file: profiles, models, endpoints, templates and the
/// configuration matrix.
struct RunSpec {
  std::vector<InfrastructureProfile> profiles;
  std::vector<LocalModelConfig> models;
  std::vector<EndpointConfig> endpoints;
  std::vector<PromptTemplate> templates; // "standard" and "brief" are preloaded
  std::vector<BenchConfig> configs;
  double threshold = 0.5;
  long image_token_floor = 100;
  double sustained_hours = 3.0;
  std::vector<InfrastructureProfile> appliance_baselines; // fan/heater defaults
  JourneyBaseline journey;

  static RunSpec load(const std::filesystem::path& path);
  static RunSpec from_json(const nlohmann::json& doc);

  const LocalModelConfig& model(const std::string& id) const;
  const EndpointConfig& endpoint(const std::string& id) const;
  const PromptTemplate& prompt_template(const std::string& id) const;
  const BenchConfig& config(const std::string& id) const;
};

struct RunOptions {
  std::filesystem::path records_dir = "records";
  WarnSink warn;
};

/// Execute one configuration over the manifest's test rows. Records append
/// incrementally; rerunning skips sample_ids already in the store.
std::vector<InferenceRecord> run_config(const RunSpec& spec, const BenchConfig& config,
                                        const LabeledManifest& manifest, const RunOptions& options);

/// All report artifacts for a set of configurations, deterministic given
/// identical records.
struct ReportBundle {
  std::vector<MetricsSummary> summaries; // sorted by config_id
  ComparisonTable sustained;             // per-profile sustained footprints vs the journey
  std::vector<std::tuple<std::string, std::string, Anomaly>> anomalies; // config, sample, kind
  nlohmann::json metadata;

  void write(const std::filesystem::path& dir) const;
  std::string to_markdown() const;
};

ReportBundle report(const RunSpec& spec,
                    const std::map<std::string, std::vector<InferenceRecord>>& records_by_config);

/// What-if wrapper: footprint and memory-scaled footprint for one profile.
FootprintBreakdown estimate(const std::vector<InfrastructureProfile>& profiles,
                            const std::string& profile_name, double duration_s,
                            double memory_fraction);

}  // namespace xbench
