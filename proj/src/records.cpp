#include "xbench/records.hpp"

namespace xbench {

std::string to_string(Anomaly a) {
  switch (a) {
    case Anomaly::suspect_no_image: return "suspect_no_image";
    case Anomaly::refusal: return "refusal";
    case Anomaly::parse_error: return "parse_error";
  }
  throw std::logic_error("unreachable");
}

Anomaly anomaly_from_string(const std::string& s) {
  if (s == "suspect_no_image") return Anomaly::suspect_no_image;
  if (s == "refusal") return Anomaly::refusal;
  if (s == "parse_error") return Anomaly::parse_error;
  throw InputFormatError("unknown anomaly kind: " + s);
}

nlohmann::json InferenceRecord::to_json() const {
  nlohmann::json j{
      {"config_id", config_id},
      {"sample_id", sample_id},
      {"ground_truth", to_string(ground_truth)},
      {"end_to_end_ms", end_to_end_ms},
      {"model_exec_ms", model_exec_ms},
      {"app_profile", app_profile},
      {"app_carbon_mg", app_carbon_mg},
      {"memory_fraction", memory_fraction},
  };
  if (diagnosis)
    j["diagnosis"] = {{"p_positive", diagnosis->p_positive}, {"p_negative", diagnosis->p_negative}};
  if (prompt_tokens) j["prompt_tokens"] = *prompt_tokens;
  if (completion_tokens) j["completion_tokens"] = *completion_tokens;
  if (anomaly) j["anomaly"] = to_string(*anomaly);
  if (!remote_profile.empty()) {
    j["remote_profile"] = remote_profile;
    j["remote_carbon_mg"] = remote_carbon_mg;
    j["remote_time_basis_ms"] = remote_time_basis_ms;
  }
  return j;
}

InferenceRecord InferenceRecord::from_json(const nlohmann::json& j) {
  InferenceRecord r;
  r.config_id = j.at("config_id").get<std::string>();
  r.sample_id = j.at("sample_id").get<std::string>();
  r.ground_truth = label_from_string(j.at("ground_truth").get<std::string>());
  r.end_to_end_ms = j.at("end_to_end_ms").get<double>();
  r.model_exec_ms = j.at("model_exec_ms").get<double>();
  r.app_profile = j.value("app_profile", std::string{});
  r.app_carbon_mg = j.value("app_carbon_mg", 0.0);
  r.memory_fraction = j.value("memory_fraction", 0.0);
  if (j.contains("diagnosis"))
    r.diagnosis = Diagnosis{j["diagnosis"].at("p_positive").get<double>(),
                            j["diagnosis"].at("p_negative").get<double>()};
  if (j.contains("prompt_tokens")) r.prompt_tokens = j["prompt_tokens"].get<long>();
  if (j.contains("completion_tokens")) r.completion_tokens = j["completion_tokens"].get<long>();
  if (j.contains("anomaly")) r.anomaly = anomaly_from_string(j["anomaly"].get<std::string>());
  if (j.contains("remote_profile")) {
    r.remote_profile = j["remote_profile"].get<std::string>();
    r.remote_carbon_mg = j.value("remote_carbon_mg", 0.0);
    r.remote_time_basis_ms = j.value("remote_time_basis_ms", 0.0);
  }
  if (r.anomaly && r.diagnosis)
    throw InputFormatError("record " + r.sample_id + ": anomalous records carry no diagnosis");
  if (!r.anomaly && !r.diagnosis)
    throw InputFormatError("record " + r.sample_id + ": needs a diagnosis or an anomaly");
  if (r.model_exec_ms > r.end_to_end_ms)
    throw InputFormatError("record " + r.sample_id + ": model_exec_ms exceeds end_to_end_ms");
  return r;
}

RecordStore::RecordStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    for (const auto& record : load(path_)) seen_.insert(record.sample_id);
  }
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app);
  if (!out_) throw Error("cannot open record store for append: " + path_.string());
}

void RecordStore::append(const InferenceRecord& record) {
  if (!seen_.insert(record.sample_id).second)
    throw Error("duplicate sample_id in record store: " + record.sample_id);
  out_ << record.to_json().dump() << '\n';
  out_.flush();
}

std::vector<InferenceRecord> RecordStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open record store: " + path.string());
  std::vector<InferenceRecord> records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(InferenceRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputFormatError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace xbench
