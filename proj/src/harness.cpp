#include "xbench/harness.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "xbench/image.hpp"
#include "xbench/onnx_model.hpp"

namespace xbench {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void warn_to(const WarnSink& warn, const std::string& message) {
  if (warn)
    warn(message);
  else
    std::cerr << "warning: " << message << '\n';
}

std::array<double, 3> triple(const nlohmann::json& j, std::array<double, 3> fallback) {
  if (j.is_null()) return fallback;
  if (j.is_number()) return {j.get<double>(), j.get<double>(), j.get<double>()};
  std::array<double, 3> out{};
  for (size_t i = 0; i < 3; ++i) out[i] = j.at(i).get<double>();
  return out;
}

// Replies with no percentage at all are treated as refusals; replies with
// percentages that still fail the format are parse errors.
Anomaly classify_parse_failure(const std::string& raw_text) {
  return raw_text.find('%') == std::string::npos ? Anomaly::refusal : Anomaly::parse_error;
}

std::string fnv1a_hex(const std::string& data) {
  unsigned long h = 1469598103934665603UL;
  for (const char c : data) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211UL;
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::string manifest_fingerprint(const LabeledManifest& manifest) {
  std::string blob;
  for (const auto& row : manifest.rows)
    blob += row.sample_id + "," + row.path.string() + "," + to_string(row.label) + "\n";
  return fnv1a_hex(blob);
}

}  // namespace

BenchKind bench_kind_from_string(const std::string& s) {
  if (s == "local") return BenchKind::local;
  if (s == "llm") return BenchKind::llm;
  if (s == "llm_with_kb") return BenchKind::llm_with_kb;
  throw ConfigError("unknown bench kind: " + s);
}

std::string to_string(BenchKind kind) {
  switch (kind) {
    case BenchKind::local: return "local";
    case BenchKind::llm: return "llm";
    case BenchKind::llm_with_kb: return "llm_with_kb";
  }
  throw std::logic_error("unreachable");
}

void BenchConfig::validate() const {
  if (config_id.empty()) throw ConfigError("config_id must not be empty");
  memory.validate();
  if (kind == BenchKind::local) {
    if (model_id.empty()) throw ConfigError("config '" + config_id + "': local kind needs a model");
    if (memory.model_size_mb <= 0.0)
      throw ConfigError("config '" + config_id + "': local kind needs model_size_mb > 0");
  } else {
    if (endpoint_id.empty())
      throw ConfigError("config '" + config_id + "': remote kind needs an endpoint");
    if (server_profile.empty())
      throw ConfigError("config '" + config_id + "': remote kind needs a server profile");
    if (memory.model_size_mb != 0.0)
      throw ConfigError("config '" + config_id + "': remote kinds run with model_size_mb = 0");
  }
  if (kind == BenchKind::llm_with_kb) {
    if (kb_path.empty())
      throw ConfigError("config '" + config_id + "': llm_with_kb needs a knowledge base");
    if (model_id.empty())
      throw ConfigError("config '" + config_id + "': llm_with_kb needs a query embedder model");
  }
}

RunSpec RunSpec::from_json(const nlohmann::json& doc) {
  RunSpec spec;
  spec.threshold = doc.value("threshold", 0.5);
  spec.image_token_floor = doc.value("image_token_floor", 100L);
  spec.sustained_hours = doc.value("sustained_hours", 3.0);
  if (doc.contains("profiles")) spec.profiles = parse_profiles(doc);

  for (const auto& m : doc.value("models", nlohmann::json::array())) {
    LocalModelConfig cfg;
    cfg.id = m.at("id").get<std::string>();
    cfg.model_path = m.at("model_path").get<std::string>();
    cfg.input_width = m.value("input_width", 224);
    cfg.input_height = m.value("input_height", 224);
    cfg.channel_order = m.value("channel_order", "rgb");
    cfg.mean = triple(m.value("mean", nlohmann::json{}), {0.0, 0.0, 0.0});
    cfg.scale = triple(m.value("scale", nlohmann::json{}), {1.0, 1.0, 1.0});
    cfg.positive_class_index = m.value("positive_class_index", 0);
    if (m.contains("embedding_layer")) cfg.embedding_layer = m["embedding_layer"].get<std::string>();
    cfg.model_size_mb = m.value("model_size_mb", 0.0);
    spec.models.push_back(std::move(cfg));
  }

  for (const auto& e : doc.value("endpoints", nlohmann::json::array())) {
    EndpointConfig cfg;
    cfg.id = e.at("id").get<std::string>();
    cfg.base_url = e.at("base_url").get<std::string>();
    cfg.model = e.value("model", cfg.id);
    cfg.api_key_env = e.value("api_key_env", std::string{"OPENAI_API_KEY"});
    cfg.timeout_s = e.value("timeout_s", 120);
    cfg.max_retries = e.value("max_retries", 3);
    cfg.backoff_initial_ms = e.value("backoff_initial_ms", 250);
    spec.endpoints.push_back(std::move(cfg));
  }

  spec.templates = {PromptTemplate::standard(), PromptTemplate::brief()};
  for (const auto& t : doc.value("templates", nlohmann::json::array())) {
    PromptTemplate tmpl{t.at("id").get<std::string>(), t.at("system_text").get<std::string>()};
    tmpl.validate();
    spec.templates.push_back(std::move(tmpl));
  }

  if (doc.contains("appliance_baselines")) {
    for (const auto& b : doc["appliance_baselines"]) {
      InfrastructureProfile p;
      p.name = b.at("name").get<std::string>();
      p.watts = b.at("watts").get<double>();
      p.pue = b.value("pue", 1.0);
      p.carbon_intensity = b.at("carbon_intensity").get<double>();
      p.validate();
      spec.appliance_baselines.push_back(std::move(p));
    }
  } else {
    // Fan wattage back-solved so a small local model over 3 h sits at
    // ~12% of the fan's footprint on the same grid.
    spec.appliance_baselines = {
        {"electric-fan", 97.0, 1.0, 228.0, 0.0, false, std::nullopt},
        {"electric-heater", 2000.0, 1.0, 228.0, 0.0, false, std::nullopt},
    };
  }

  if (doc.contains("journey")) {
    const auto& j = doc["journey"];
    spec.journey.label = j.value("label", spec.journey.label);
    spec.journey.distance_km = j.value("distance_km", spec.journey.distance_km);
    spec.journey.emission_per_km = j.value("emission_per_km", spec.journey.emission_per_km);
  }

  for (const auto& c : doc.value("configs", nlohmann::json::array())) {
    BenchConfig cfg;
    cfg.config_id = c.at("config_id").get<std::string>();
    cfg.kind = bench_kind_from_string(c.at("kind").get<std::string>());
    cfg.model_id = c.value("model", std::string{});
    cfg.endpoint_id = c.value("endpoint", std::string{});
    cfg.template_id = c.value("template", std::string{"standard"});
    cfg.kb_path = c.value("kb", std::string{});
    cfg.app_profile = c.value("app_profile", std::string{"app"});
    cfg.server_profile = c.value("server_profile", std::string{});
    const auto& mem = c.at("memory");
    cfg.memory.app_size_mb = mem.at("app_size_mb").get<double>();
    cfg.memory.model_size_mb = mem.value("model_size_mb", 0.0);
    cfg.memory.instance_total_mb = mem.at("instance_total_mb").get<double>();
    if (c.value("timing_mode", "sequential") == "concurrent")
      cfg.timing_mode = TimingMode::concurrent;
    if (c.value("remote_time_basis", "round_trip") == "end_to_end")
      cfg.remote_time_basis = RemoteTimeBasis::end_to_end;
    cfg.validate();
    spec.configs.push_back(std::move(cfg));
  }
  return spec;
}

RunSpec RunSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("run file " + path.string() + ": " + e.what());
  }
  if (doc.contains("profiles_file")) {
    const std::filesystem::path pf = doc["profiles_file"].get<std::string>();
    const auto resolved = pf.is_absolute() ? pf : path.parent_path() / pf;
    doc["profiles"] = nlohmann::json{};
    auto spec = from_json(doc);
    spec.profiles = load_profiles(resolved);
    return spec;
  }
  return from_json(doc);
}

const LocalModelConfig& RunSpec::model(const std::string& id) const {
  for (const auto& m : models)
    if (m.id == id) return m;
  throw ConfigError("unknown model: " + id);
}

const EndpointConfig& RunSpec::endpoint(const std::string& id) const {
  for (const auto& e : endpoints)
    if (e.id == id) return e;
  throw ConfigError("unknown endpoint: " + id);
}

const PromptTemplate& RunSpec::prompt_template(const std::string& id) const {
  for (const auto& t : templates)
    if (t.id == id) return t;
  throw ConfigError("unknown template: " + id);
}

const BenchConfig& RunSpec::config(const std::string& id) const {
  for (const auto& c : configs)
    if (c.config_id == id) return c;
  throw ConfigError("unknown config: " + id);
}

std::vector<InferenceRecord> run_config(const RunSpec& spec, const BenchConfig& config,
                                        const LabeledManifest& manifest,
                                        const RunOptions& options) {
  config.validate();
  const auto rows = manifest.filter_split("test").rows;
  if (rows.empty()) throw ConfigError("manifest has no test rows");

  const auto& app_profile = find_profile(spec.profiles, config.app_profile);
  const InfrastructureProfile* server_profile = nullptr;
  if (config.kind != BenchKind::local)
    server_profile = &find_profile(spec.profiles, config.server_profile);

  std::optional<ModelHandle> local_model;
  std::optional<ModelHandle> embedder;
  std::optional<KnowledgeBase> kb;
  std::optional<EndpointConfig> endpoint;
  PromptTemplate tmpl;

  if (config.kind == BenchKind::local) {
    local_model = ModelHandle::load(spec.model(config.model_id));
  } else {
    endpoint = spec.endpoint(config.endpoint_id);
    tmpl = spec.prompt_template(config.template_id);
    if (config.kind == BenchKind::llm_with_kb) {
      kb = KnowledgeBase::load(config.kb_path);
      embedder = ModelHandle::load(spec.model(config.model_id));
      if (!embedder->supports_embedding())
        throw ConfigError("config '" + config.config_id + "': model '" + config.model_id +
                          "' has no embedding layer");
      if (!tmpl.has_context_slot()) tmpl.system_text += "\n\n{context}";
    }
  }

  RecordStore store(options.records_dir / (config.config_id + ".jsonl"));
  {
    const nlohmann::json meta{{"config_id", config.config_id},
                              {"manifest_fingerprint", manifest_fingerprint(manifest)},
                              {"remote_time_basis",
                               config.remote_time_basis == RemoteTimeBasis::round_trip
                                   ? "round_trip"
                                   : "end_to_end"}};
    std::ofstream meta_out(options.records_dir / (config.config_id + ".meta.json"));
    meta_out << meta.dump(2) << '\n';
  }

  const size_t abort_after = std::max<size_t>(1, rows.size() / 10);
  size_t consecutive_transport_failures = 0;

  std::vector<InferenceRecord> produced;
  for (const auto& row : rows) {
    if (store.seen_sample_ids().count(row.sample_id)) continue;

    InferenceRecord record;
    record.config_id = config.config_id;
    record.sample_id = row.sample_id;
    record.ground_truth = row.label;
    record.app_profile = app_profile.name;
    record.memory_fraction = config.memory.fraction();

    const auto start = Clock::now();
    try {
      const auto bytes = read_file_bytes(row.path);
      if (config.kind == BenchKind::local) {
        const auto tensor = preprocess(bytes, local_model->config());
        record.diagnosis = local_model->classify(tensor);
        record.end_to_end_ms = ms_since(start);
        record.model_exec_ms = record.end_to_end_ms;
      } else {
        std::optional<std::string> context;
        if (config.kind == BenchKind::llm_with_kb) {
          const auto tensor = preprocess(bytes, embedder->config());
          const auto query = embedder->embed(tensor);
          if (query.dim() != kb->dim)
            throw ConfigError("config '" + config.config_id +
                              "': query embedder dim does not match the knowledge base");
          context = render_context(retrieve(*kb, query));
        }
        const auto payload = build_prompt(tmpl, bytes, context);
        const auto llm_record = send(*endpoint, payload);
        record.end_to_end_ms = ms_since(start);
        record.model_exec_ms = std::min(llm_record.round_trip_ms, record.end_to_end_ms);
        record.prompt_tokens = llm_record.prompt_tokens;
        record.completion_tokens = llm_record.completion_tokens;

        if (llm_record.prompt_tokens > 0 &&
            verify_image_delivery(llm_record, estimate_text_tokens(payload.system_text),
                                  spec.image_token_floor) == DeliveryVerdict::suspect_no_image) {
          record.anomaly = Anomaly::suspect_no_image;
        } else {
          try {
            record.diagnosis = parse_probabilities(llm_record.raw_text);
          } catch (const ParseError&) {
            record.anomaly = classify_parse_failure(llm_record.raw_text);
          } catch (const InconsistencyError&) {
            record.anomaly = Anomaly::parse_error;
          }
        }
        record.remote_time_basis_ms = config.remote_time_basis == RemoteTimeBasis::round_trip
                                          ? record.model_exec_ms
                                          : record.end_to_end_ms;
        record.remote_profile = server_profile->name;
        record.remote_carbon_mg = footprint_mg(*server_profile, record.remote_time_basis_ms / 1000.0);
      }
      consecutive_transport_failures = 0;
    } catch (const TransportError& e) {
      ++consecutive_transport_failures;
      warn_to(options.warn, "sample '" + row.sample_id + "': " + e.what());
      if (consecutive_transport_failures > abort_after)
        throw Error("aborting '" + config.config_id + "': " +
                    std::to_string(consecutive_transport_failures) +
                    " consecutive transport failures");
      continue; // sample stays pending; a resumed run retries it
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      warn_to(options.warn, "skipping sample '" + row.sample_id + "': " + e.what());
      continue;
    }

    record.app_carbon_mg = footprint_mg(app_profile, record.end_to_end_ms / 1000.0);
    store.append(record);
    produced.push_back(std::move(record));
  }
  return produced;
}

FootprintBreakdown estimate(const std::vector<InfrastructureProfile>& profiles,
                            const std::string& profile_name, double duration_s,
                            double memory_fraction) {
  const auto& profile = find_profile(profiles, profile_name);
  if (memory_fraction < 0.0 || memory_fraction > 1.0)
    throw std::invalid_argument("memory_fraction must be in [0, 1]");
  FootprintBreakdown out;
  out.profile_name = profile.name;
  out.duration_s = duration_s;
  out.total_mg = footprint_mg(profile, duration_s);
  out.memory_scaled_mg_per_mb = out.total_mg * memory_fraction;
  return out;
}

ReportBundle report(const RunSpec& spec,
                    const std::map<std::string, std::vector<InferenceRecord>>& records_by_config) {
  if (records_by_config.empty()) throw std::invalid_argument("report: no records");

  ReportBundle bundle;
  for (const auto& [config_id, records] : records_by_config) { // std::map: sorted by config_id
    bundle.summaries.push_back(summarize(config_id, records, spec.threshold));
    for (const auto& r : records)
      if (r.anomaly) bundle.anomalies.emplace_back(config_id, r.sample_id, *r.anomaly);
  }

  std::vector<std::pair<std::string, double>> sustained_entries;
  sustained_entries.emplace_back(spec.journey.label,
                                 transport_baseline_g(spec.journey.distance_km,
                                                      spec.journey.emission_per_km));
  for (const auto& p : spec.profiles)
    sustained_entries.emplace_back(p.name + "-" + format_sig3(spec.sustained_hours) + "h",
                                   sustained_footprint_g(p, spec.sustained_hours));
  for (const auto& p : spec.appliance_baselines)
    sustained_entries.emplace_back(p.name + "-" + format_sig3(spec.sustained_hours) + "h",
                                   sustained_footprint_g(p, spec.sustained_hours));
  bundle.sustained = compare_footprints(sustained_entries, spec.journey.label);

  nlohmann::json profile_json = nlohmann::json::array();
  for (const auto& p : spec.profiles) {
    profile_json.push_back({{"name", p.name},
                            {"watts", p.watts},
                            {"pue", p.pue},
                            {"carbon_intensity", p.carbon_intensity},
                            {"manufacturing_per_hour", p.manufacturing_per_hour},
                            {"is_remote", p.is_remote}});
  }
  nlohmann::json template_ids = nlohmann::json::array();
  for (const auto& t : spec.templates) template_ids.push_back(t.id);
  bundle.metadata = nlohmann::json{
      {"threshold", spec.threshold},
      {"image_token_floor", spec.image_token_floor},
      {"sustained_hours", spec.sustained_hours},
      {"profiles", profile_json},
      {"templates", template_ids},
  };
  return bundle;
}

std::string ReportBundle::to_markdown() const {
  std::ostringstream out;
  out << "# Benchmark report\n\n## Accuracy and carbon per configuration\n\n";
  out << "| Configuration | Accuracy (%) | Specificity (%) | Sensitivity (%) | PPV (%) | "
         "Median time (ms) | IQR (ms) | Median carbon (mgCO2eq) | Memory (%) | "
         "Median carbon per MB (mgCO2eq/MB) |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|\n";
  auto rate = [](const std::optional<double>& r) {
    if (!r) return std::string("na");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", *r);
    return std::string(buf);
  };
  for (const auto& s : summaries) {
    out << "| " << s.config_id << " | " << rate(s.rates.accuracy) << " | "
        << rate(s.rates.specificity) << " | " << rate(s.rates.sensitivity) << " | "
        << rate(s.rates.ppv) << " | " << format_sig3(s.median_time_ms) << " | "
        << format_sig3(s.iqr_time_ms) << " | " << format_sig3(s.median_carbon_mg) << " | "
        << rate(100.0 * s.memory_fraction) << " | " << format_sig3(s.median_carbon_per_mb)
        << " |\n";
  }

  out << "\n## Sustained footprints vs " << sustained.baseline_label << "\n\n";
  out << "| Source | gCO2eq | Ratio to baseline |\n|---|---|---|\n";
  for (const auto& row : sustained.rows) {
    out << "| " << row.label << " | " << format_sig3(row.grams) << " | ";
    if (row.ratio_to_baseline)
      out << format_sig3(*row.ratio_to_baseline);
    else
      out << "undefined";
    out << " |\n";
  }

  out << "\n## Anomalies\n\n| Configuration | Sample | Kind |\n|---|---|---|\n";
  for (const auto& [config_id, sample_id, kind] : anomalies)
    out << "| " << config_id << " | " << sample_id << " | " << to_string(kind) << " |\n";
  return out.str();
}

void ReportBundle::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);

  {
    std::ofstream csv(dir / "metrics.csv");
    csv << "config_id,accuracy_pct,specificity_pct,sensitivity_pct,ppv_pct,median_time_ms,"
           "iqr_time_ms,median_carbon_mg,memory_pct,median_carbon_per_mb,scored,anomalies\n";
    auto rate = [](const std::optional<double>& r) {
      if (!r) return std::string("na");
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f", *r);
      return std::string(buf);
    };
    for (const auto& s : summaries) {
      long anomaly_count = 0;
      for (const auto& [_, n] : s.anomalies) anomaly_count += n;
      csv << s.config_id << ',' << rate(s.rates.accuracy) << ',' << rate(s.rates.specificity)
          << ',' << rate(s.rates.sensitivity) << ',' << rate(s.rates.ppv) << ','
          << s.median_time_ms << ',' << s.iqr_time_ms << ',' << s.median_carbon_mg << ','
          << rate(100.0 * s.memory_fraction) << ',' << s.median_carbon_per_mb << ',' << s.scored
          << ',' << anomaly_count << '\n';
    }
  }
  {
    nlohmann::json doc{{"metadata", metadata}, {"configs", nlohmann::json::array()}};
    for (const auto& s : summaries) doc["configs"].push_back(to_json(s));
    std::ofstream(dir / "metrics.json") << doc.dump(2) << '\n';
  }
  {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& s : summaries) doc[s.config_id] = s.confidence_histogram;
    std::ofstream(dir / "histograms.json") << doc.dump(2) << '\n';
  }
  std::ofstream(dir / "sustained.csv") << sustained.to_csv();
  std::ofstream(dir / "sustained.json") << sustained.to_json().dump(2) << '\n';
  {
    std::ofstream csv(dir / "anomalies.csv");
    csv << "config_id,sample_id,kind\n";
    for (const auto& [config_id, sample_id, kind] : anomalies)
      csv << config_id << ',' << sample_id << ',' << to_string(kind) << '\n';
  }
  std::ofstream(dir / "report.md") << to_markdown();
}

}  // namespace xbench
