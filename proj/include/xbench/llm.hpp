#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "xbench/diagnosis.hpp"

namespace xbench {

/// System prompt with the mandatory probability output scaffold and an
/// optional "{context}" slot for knowledge-base evidence.
struct PromptTemplate {
  std::string id;
  std::string system_text;

  bool has_context_slot() const;
  void validate() const; // both output-format lines must be present

  /// Detailed radiological wording (the default).
  static PromptTemplate standard();
  /// Shorter wording, kept for ablation runs.
  static PromptTemplate brief();
};

struct RequestPayload {
  std::string system_text; // context already substituted
  std::string image_base64;
  std::string image_mime; // image/png or image/jpeg

  nlohmann::json to_chat_completion(const std::string& model) const;
};

/// Renders the system text (substituting context if given) and attaches the
/// image exactly once as an inline base64 part.
RequestPayload build_prompt(const PromptTemplate& tmpl, std::span<const std::uint8_t> image_bytes,
                            const std::optional<std::string>& context = std::nullopt);

struct EndpointConfig {
  std::string id;
  std::string base_url; // e.g. https://api.openai.com or http://127.0.0.1:8812
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY"; // keys come from the environment only
  int timeout_s = 120;
  int max_retries = 3;
  int backoff_initial_ms = 250;
};

struct LlmRequestRecord {
  std::string endpoint_id;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  double round_trip_ms = 0.0;
  std::string raw_text;
  bool image_attached = true;
};

/// One chat-completion round trip. Transient transport failures retry with
/// exponential backoff; auth failures and malformed responses never retry.
LlmRequestRecord send(const EndpointConfig& endpoint, const RequestPayload& payload);

/// Extract the two "Approximately X%" probability lines. Tolerates case,
/// spacing and hyphen variants; a range like "85-90%" collapses to its
/// midpoint. Throws ParseError when either line is missing and
/// InconsistencyError when the pair is off by more than 5 points.
Diagnosis parse_probabilities(const std::string& raw_text);

enum class DeliveryVerdict { ok, suspect_no_image };

/// Flags replies whose prompt-token count is too small to have carried the
/// image. Boundary is inclusive: exactly estimate + floor passes.
DeliveryVerdict verify_image_delivery(const LlmRequestRecord& record,
                                      long text_only_token_estimate,
                                      long image_token_floor = 100);

/// Rough text-only token count (4 chars per token) for the delivery check.
long estimate_text_tokens(const std::string& text);

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace xbench
