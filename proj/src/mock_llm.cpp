#include "xbench/mock_llm.hpp"

#include <httplib.h>
#include <json.hpp>

#include "xbench/llm.hpp"

namespace xbench {

struct MockLlmServer::Impl {
  httplib::Server server;
};

namespace {

// Probability derived from the raw base64 payload; stable per image.
int derived_percent(const std::string& image_b64) {
  unsigned long h = 1469598103934665603UL;
  for (const char c : image_b64) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211UL;
  return static_cast<int>(h % 101UL);
}

std::string probability_text(int percent) {
  return "Probability of COVID-19 symptoms based on imaging: Approximately " +
         std::to_string(percent) +
         "%\nProbability of no COVID-19 symptoms based on imaging: Approximately " +
         std::to_string(100 - percent) + "%";
}

}  // namespace

MockLlmServer::MockLlmServer() : impl_(std::make_unique<Impl>()) {}

MockLlmServer::~MockLlmServer() { stop(); }

void MockLlmServer::start(int port) {
  impl_->server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
    ++request_count_;
    if (fail_count_ > 0) {
      --fail_count_;
      res.status = fail_status_;
      res.set_content("{\"error\":\"injected failure\"}", "application/json");
      return;
    }
    {
      std::lock_guard lock(mutex_);
      if (auth_key_ && req.get_header_value("Authorization") != "Bearer " + *auth_key_) {
        res.status = 401;
        res.set_content("{\"error\":\"invalid api key\"}", "application/json");
        return;
      }
    }

    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content("{\"error\":\"bad request body\"}", "application/json");
      return;
    }

    std::string system_text;
    std::string image_b64;
    for (const auto& message : body.value("messages", nlohmann::json::array())) {
      if (message.value("role", "") == "system") system_text = message.value("content", "");
      if (message.value("role", "") == "user" && message.contains("content") &&
          message["content"].is_array()) {
        for (const auto& part : message["content"]) {
          if (part.value("type", "") != "image_url") continue;
          const auto url = part["image_url"].value("url", std::string{});
          if (const auto comma = url.find(','); comma != std::string::npos)
            image_b64 = url.substr(comma + 1);
        }
      }
    }

    std::string text;
    long prompt_tokens;
    long completion_tokens;
    bool canned = false;
    {
      std::lock_guard lock(mutex_);
      if (!canned_.empty()) {
        text = canned_.front().text;
        prompt_tokens = canned_.front().prompt_tokens;
        completion_tokens = canned_.front().completion_tokens;
        canned_.pop_front();
        canned = true;
      }
    }
    if (!canned) {
      text = probability_text(derived_percent(image_b64));
      prompt_tokens = estimate_text_tokens(system_text);
      if (!image_b64.empty() && !drop_images_) prompt_tokens += image_tokens_;
      completion_tokens = estimate_text_tokens(text);
    }

    const nlohmann::json reply{
        {"id", "mock-" + std::to_string(request_count_.load())},
        {"object", "chat.completion"},
        {"model", body.value("model", "mock")},
        {"choices", {{{"index", 0},
                      {"message", {{"role", "assistant"}, {"content", text}}},
                      {"finish_reason", "stop"}}}},
        {"usage", {{"prompt_tokens", prompt_tokens},
                   {"completion_tokens", completion_tokens},
                   {"total_tokens", prompt_tokens + completion_tokens}}},
    };
    res.set_content(reply.dump(), "application/json");
  });

  if (port != 0) {
    if (!impl_->server.bind_to_port("127.0.0.1", port))
      throw std::runtime_error("mock server: cannot bind port " + std::to_string(port));
    port_ = port;
  } else {
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server: cannot bind a port");
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void MockLlmServer::stop() {
  if (thread_.joinable()) {
    impl_->server.stop();
    thread_.join();
  }
}

void MockLlmServer::enqueue_canned(std::string text, long prompt_tokens, long completion_tokens) {
  std::lock_guard lock(mutex_);
  canned_.push_back({std::move(text), prompt_tokens, completion_tokens});
}

void MockLlmServer::fail_next(int n, int status) {
  fail_status_ = status;
  fail_count_ = n;
}

void MockLlmServer::require_auth(std::string key) {
  std::lock_guard lock(mutex_);
  auth_key_ = std::move(key);
}

}  // namespace xbench
