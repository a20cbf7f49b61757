#pragma once

#include <stdexcept>
#include <string>

namespace xbench {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A referenced file or named entity does not exist.
struct NotFoundError : Error {
  using Error::Error;
};

// Bad or inconsistent configuration (profiles, run file, model config).
struct ConfigError : Error {
  using Error::Error;
};

// Input bytes that do not decode (images, malformed manifests).
struct InputFormatError : Error {
  using Error::Error;
};

// Model backend failures at load or inference time.
struct BackendError : Error {
  using Error::Error;
};

// Requested a capability the handle does not advertise (e.g. embeddings).
struct CapabilityError : Error {
  using Error::Error;
};

// LLM reply did not contain both probability lines.
struct ParseError : Error {
  explicit ParseError(const std::string& what, std::string raw)
      : Error(what), raw_text(std::move(raw)) {}
  std::string raw_text;
};

// Both probability lines found but they contradict each other.
struct InconsistencyError : Error {
  using Error::Error;
};

// Transport-level failures, each a distinct kind for retry policy.
struct TransportError : Error {
  using Error::Error;
};
struct AuthError : TransportError {
  using TransportError::TransportError;
};
struct TimeoutError : TransportError {
  using TransportError::TransportError;
};

}  // namespace xbench
