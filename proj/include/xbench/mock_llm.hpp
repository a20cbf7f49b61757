#pragma once

#include <atomic>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace xbench {

/// Deterministic stand-in for a chat-completion endpoint, used for offline
/// tests and dry runs. Answers with the probability output format; the
/// probability is a pure function of the attached image bytes, so repeated
/// requests for the same image agree.
class MockLlmServer {
 public:
  MockLlmServer();
  ~MockLlmServer();

  /// Binds 127.0.0.1 on a free port (or `port` if nonzero) and serves on a
  /// background thread.
  void start(int port = 0);
  void stop();

  int port() const { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  /// Next responses come verbatim from this queue instead of the derived
  /// probability text.
  void enqueue_canned(std::string text, long prompt_tokens, long completion_tokens = 25);
  /// Fail the next `n` requests with the given HTTP status.
  void fail_next(int n, int status = 503);
  /// Reject requests whose bearer token differs from `key`.
  void require_auth(std::string key);
  /// Tokens charged for the image part of the prompt (default 300).
  void set_image_tokens(long tokens) { image_tokens_ = tokens; }
  /// When set, usage reports only the text tokens, as if the image were
  /// dropped from the request.
  void drop_images(bool drop) { drop_images_ = drop; }

  int request_count() const { return request_count_; }

  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

 private:
  struct Canned {
    std::string text;
    long prompt_tokens;
    long completion_tokens;
  };

  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> request_count_{0};
  std::atomic<long> image_tokens_{300};
  std::atomic<bool> drop_images_{false};
  std::atomic<int> fail_count_{0};
  std::atomic<int> fail_status_{503};
  std::mutex mutex_;
  std::deque<Canned> canned_;
  std::optional<std::string> auth_key_;
};

}  // namespace xbench
