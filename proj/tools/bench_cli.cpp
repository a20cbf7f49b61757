#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "xbench/harness.hpp"
#include "xbench/image.hpp"
#include "xbench/mock_llm.hpp"
#include "xbench/onnx_model.hpp"

namespace {

int cmd_build_kb(const std::string& run_file, const std::string& model_id,
                 const std::string& manifest_file, const std::string& out_file,
                 const std::string& split) {
  const auto spec = xbench::RunSpec::load(run_file);
  const auto manifest = xbench::load_manifest(manifest_file).filter_split(split);
  const auto embedder = xbench::ModelHandle::load(spec.model(model_id));
  const auto kb = xbench::build_kb(manifest, embedder);
  kb.save(out_file);
  std::cout << "knowledge base: " << kb.entries.size() << " entries, dim " << kb.dim
            << ", embedder '" << kb.embedder_id << "' -> " << out_file << '\n';
  return 0;
}

int cmd_run(const std::string& run_file, const std::string& manifest_file,
            const std::string& records_dir, const std::vector<std::string>& only) {
  const auto spec = xbench::RunSpec::load(run_file);
  const auto manifest = xbench::load_manifest(manifest_file);
  xbench::RunOptions options;
  options.records_dir = records_dir;
  for (const auto& config : spec.configs) {
    if (!only.empty() && std::find(only.begin(), only.end(), config.config_id) == only.end())
      continue;
    std::cout << "running " << config.config_id << "...\n";
    const auto records = xbench::run_config(spec, config, manifest, options);
    std::cout << "  " << records.size() << " new records -> "
              << (options.records_dir / (config.config_id + ".jsonl")).string() << '\n';
  }
  return 0;
}

int cmd_report(const std::string& run_file, const std::string& records_dir,
               const std::string& out_dir) {
  const auto spec = xbench::RunSpec::load(run_file);
  std::map<std::string, std::vector<xbench::InferenceRecord>> records;
  std::string fingerprint;
  for (const auto& entry : std::filesystem::directory_iterator(records_dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    const auto config_id = entry.path().stem().string();
    records[config_id] = xbench::RecordStore::load(entry.path());

    const auto meta_path = entry.path().parent_path() / (config_id + ".meta.json");
    if (std::filesystem::exists(meta_path)) {
      nlohmann::json meta;
      std::ifstream(meta_path) >> meta;
      const auto fp = meta.value("manifest_fingerprint", std::string{});
      if (fingerprint.empty()) fingerprint = fp;
      else if (fp != fingerprint)
        throw xbench::Error("records in " + records_dir + " come from different manifests");
    }
  }
  if (records.empty()) throw xbench::Error("no record files found in " + records_dir);
  const auto bundle = xbench::report(spec, records);
  bundle.write(out_dir);
  std::cout << "report bundle written to " << out_dir << '\n';
  return 0;
}

int cmd_estimate(const std::string& run_file, const std::string& profiles_file,
                 const std::string& profile, double duration_s, double memory_fraction) {
  std::vector<xbench::InfrastructureProfile> profiles;
  if (!profiles_file.empty())
    profiles = xbench::load_profiles(profiles_file);
  else
    profiles = xbench::RunSpec::load(run_file).profiles;
  const auto breakdown = xbench::estimate(profiles, profile, duration_s, memory_fraction);
  std::cout << "profile:            " << breakdown.profile_name << '\n'
            << "duration:           " << breakdown.duration_s << " s\n"
            << "footprint:          " << xbench::format_sig3(breakdown.total_mg) << " mgCO2eq ("
            << breakdown.total_mg << ")\n"
            << "footprint per MB:   " << xbench::format_sig3(breakdown.memory_scaled_mg_per_mb)
            << " mgCO2eq/MB (" << breakdown.memory_scaled_mg_per_mb << ")\n";
  const auto& p = xbench::find_profile(profiles, profile);
  if (p.billing_min_s && duration_s < *p.billing_min_s)
    std::cout << "note: instance bills a minimum of " << *p.billing_min_s
              << " s per invocation; the figure above is the physical-runtime footprint\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark harness for X-ray classifiers: accuracy and carbon accounting"};
  app.require_subcommand(1);

  std::string run_file;
  std::string manifest_file;
  std::string records_dir = "records";
  std::string out_file;
  std::string model_id;
  std::string split = "train";
  std::vector<std::string> only;

  auto* build_kb = app.add_subcommand("build-kb", "Embed a manifest into a knowledge base file");
  build_kb->add_option("--run", run_file, "Run file with model definitions")->required();
  build_kb->add_option("--model", model_id, "Embedder model id")->required();
  build_kb->add_option("--manifest", manifest_file, "Labeled manifest CSV")->required();
  build_kb->add_option("--out", out_file, "Output knowledge base file")->required();
  build_kb->add_option("--split", split, "Manifest split to embed (default: train)");

  auto* run = app.add_subcommand("run", "Run benchmark configurations over a manifest");
  run->add_option("--run", run_file, "Run file")->required();
  run->add_option("--manifest", manifest_file, "Labeled manifest CSV")->required();
  run->add_option("--records-dir", records_dir, "Directory for record stores");
  run->add_option("--config", only, "Run only these config ids");

  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "Aggregate record stores into a report bundle");
  report->add_option("--run", run_file, "Run file")->required();
  report->add_option("--records-dir", records_dir, "Directory with record stores");
  report->add_option("--out", report_out, "Output directory");

  std::string profiles_file;
  std::string profile_name;
  double duration_s = 0.0;
  double memory_fraction = 0.0;
  auto* estimate = app.add_subcommand("estimate", "What-if footprint for a profile");
  estimate->add_option("--run", run_file, "Run file with profiles");
  estimate->add_option("--profiles", profiles_file, "Profiles file (overrides --run)");
  estimate->add_option("--profile", profile_name, "Profile name")->required();
  estimate->add_option("--duration", duration_s, "Duration in seconds")->required();
  estimate->add_option("--memory-fraction", memory_fraction, "Fraction of instance memory in use");

  int mock_port = 8812;
  auto* mock = app.add_subcommand("mock-llm", "Serve the deterministic mock chat endpoint");
  mock->add_option("--port", mock_port, "Port to listen on");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build_kb->parsed()) return cmd_build_kb(run_file, model_id, manifest_file, out_file, split);
    if (run->parsed()) return cmd_run(run_file, manifest_file, records_dir, only);
    if (report->parsed()) return cmd_report(run_file, records_dir, report_out);
    if (estimate->parsed())
      return cmd_estimate(run_file, profiles_file, profile_name, duration_s, memory_fraction);
    if (mock->parsed()) {
      xbench::MockLlmServer server;
      server.start(mock_port);
      std::cout << "mock chat endpoint listening on " << server.base_url() << " (Ctrl-C to stop)\n";
      for (;;) std::this_thread::sleep_for(std::chrono::seconds(3600));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
