#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "xbench/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

namespace xbench {

namespace {

constexpr char kContextSlot[] = "{context}";

const char kStandardText[] =
    "You are an assistant radiologist trained in interpreting chest X-ray images for signs of "
    "COVID-19. Your task is to analyze the provided chest X-ray and estimate the likelihood that "
    "it shows signs consistent with COVID-19 infection.\n\n"
    "You must provide:\n\n"
    "A probability (in percentage) that the X-ray image indicates COVID-19-related symptoms "
    "(e.g., ground-glass opacities, bilateral infiltrates, or consolidation).\n\n"
    "A probability (in percentage) that the X-ray image shows no signs of COVID-19-related "
    "symptoms.\n\n"
    "Assume your analysis will be reviewed by a qualified human radiologist before informing any "
    "clinical decisions. Base your assessment solely on the imaging evidence.\n\n"
    "Output format:\n"
    "Probability of COVID-19 symptoms based on imaging: Approximately __%\n"
    "Probability of no COVID-19 symptoms based on imaging: Approximately __%";

const char kBriefText[] =
    "You are an assistant radiologist, ready to dissect medical cases and give medical insights. "
    "You must give a probability that the provided x-ray shows Covid-19 symptoms. You must also "
    "give a probability that the provided x-ray shows someone with no Covid-19 symptoms. Assume "
    "that any recommendations you give will then be verified by a human radiologist.\n"
    "Output in the format:\n\n"
    "Probability of Covid-19 symptoms based on imaging: Approximately __\n"
    "Probability of no Covid-19 symptoms based on imaging: Approximately __";

bool contains_icase(const std::string& haystack, const std::string& needle) {
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) { return std::tolower(a) == std::tolower(b); });
  return it != haystack.end();
}

std::string sniff_mime(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' && bytes[3] == 'G')
    return "image/png";
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    return "image/jpeg";
  throw InputFormatError("image bytes are neither PNG nor JPEG");
}

}  // namespace

bool PromptTemplate::has_context_slot() const {
  return system_text.find(kContextSlot) != std::string::npos;
}

void PromptTemplate::validate() const {
  if (!contains_icase(system_text, "probability of covid-19 symptoms based on imaging") ||
      !contains_icase(system_text, "probability of no covid-19 symptoms based on imaging"))
    throw ConfigError("template '" + id + "': missing the probability output-format lines");
}

PromptTemplate PromptTemplate::standard() { return {"standard", kStandardText}; }
PromptTemplate PromptTemplate::brief() { return {"brief", kBriefText}; }

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static const char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const unsigned v = bytes[i] << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

RequestPayload build_prompt(const PromptTemplate& tmpl, std::span<const std::uint8_t> image_bytes,
                            const std::optional<std::string>& context) {
  tmpl.validate();
  if (image_bytes.empty()) throw InputFormatError("empty image bytes");

  RequestPayload payload;
  payload.image_mime = sniff_mime(image_bytes);
  payload.image_base64 = base64_encode(image_bytes);
  payload.system_text = tmpl.system_text;

  const auto slot = payload.system_text.find(kContextSlot);
  if (context) {
    if (slot == std::string::npos)
      throw ConfigError("template '" + tmpl.id + "' has no context slot but context was supplied");
    payload.system_text.replace(slot, sizeof(kContextSlot) - 1, *context);
  } else if (slot != std::string::npos) {
    payload.system_text.erase(slot, sizeof(kContextSlot) - 1);
  }
  return payload;
}

nlohmann::json RequestPayload::to_chat_completion(const std::string& model) const {
  return nlohmann::json{
      {"model", model},
      {"messages",
       {{{"role", "system"}, {"content", system_text}},
        {{"role", "user"},
         {"content",
          {{{"type", "image_url"},
            {"image_url", {{"url", "data:" + image_mime + ";base64," + image_base64}}}}}}}}},
  };
}

LlmRequestRecord send(const EndpointConfig& endpoint, const RequestPayload& payload) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(endpoint.timeout_s);
  client.set_read_timeout(endpoint.timeout_s);
  httplib::Headers headers;
  if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key)
    headers.emplace("Authorization", std::string("Bearer ") + key);

  const std::string body = payload.to_chat_completion(endpoint.model).dump();

  httplib::Result res;
  int backoff_ms = endpoint.backoff_initial_ms;
  const auto start = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    res = client.Post("/v1/chat/completions", headers, body, "application/json");
    if (res) {
      if (res->status == 401 || res->status == 403)
        throw AuthError("endpoint '" + endpoint.id + "': authentication failed (HTTP " +
                        std::to_string(res->status) + ")");
      if (res->status < 500) break; // 2xx/4xx are final
    }
    if (attempt >= endpoint.max_retries)
      throw TimeoutError("endpoint '" + endpoint.id + "': transport failed after " +
                         std::to_string(attempt + 1) + " attempts");
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
    backoff_ms *= 2;
  }
  const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

  if (res->status != 200)
    throw TransportError("endpoint '" + endpoint.id + "': HTTP " + std::to_string(res->status) +
                         ": " + res->body);

  LlmRequestRecord record;
  record.endpoint_id = endpoint.id;
  record.round_trip_ms = elapsed.count();
  try {
    const auto doc = nlohmann::json::parse(res->body);
    record.raw_text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (doc.contains("usage")) {
      record.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
      record.completion_tokens = doc["usage"].value("completion_tokens", 0L);
    }
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("endpoint '" + endpoint.id + "': malformed response body: " + e.what());
  }
  return record;
}

Diagnosis parse_probabilities(const std::string& raw_text) {
  static const std::regex line_re(
      R"(probability\s+of\s+(no\s+)?covid[\s-]*19\s+symptoms[^:\n]*:\s*(?:approximately)?[\s*]*([0-9]+(?:\.[0-9]+)?)(?:\s*(?:-|–|—|to)\s*([0-9]+(?:\.[0-9]+)?))?[\s*]*%)",
      std::regex::icase);

  std::optional<double> positive_pct;
  std::optional<double> negative_pct;
  for (auto it = std::sregex_iterator(raw_text.begin(), raw_text.end(), line_re);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    double value = std::stod(m[2].str());
    if (m[3].matched) value = (value + std::stod(m[3].str())) / 2.0; // range midpoint
    auto& target = m[1].matched ? negative_pct : positive_pct;
    if (!target) target = value;
  }
  if (!positive_pct || !negative_pct)
    throw ParseError("response does not contain both probability lines", raw_text);
  if (std::abs(*positive_pct + *negative_pct - 100.0) > 5.0)
    throw InconsistencyError("probabilities are inconsistent: " + std::to_string(*positive_pct) +
                             "% + " + std::to_string(*negative_pct) + "%");
  return Diagnosis{*positive_pct / 100.0, *negative_pct / 100.0};
}

DeliveryVerdict verify_image_delivery(const LlmRequestRecord& record,
                                      long text_only_token_estimate, long image_token_floor) {
  if (text_only_token_estimate <= 0)
    throw std::invalid_argument("text_only_token_estimate must be > 0");
  return record.prompt_tokens < text_only_token_estimate + image_token_floor
             ? DeliveryVerdict::suspect_no_image
             : DeliveryVerdict::ok;
}

long estimate_text_tokens(const std::string& text) {
  return std::max<long>(1, static_cast<long>(text.size()) / 4);
}

}  // namespace xbench
