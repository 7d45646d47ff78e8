#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "webrefine/core_model.hpp"

namespace webrefine::llm {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct TextPart {
  std::string text;
  bool operator==(const TextPart&) const = default;
};

struct ImagePart {
  Bytes png;
  bool operator==(const ImagePart&) const = default;
};

using ContentPart = std::variant<TextPart, ImagePart>;

struct Message {
  Role role = Role::User;
  std::vector<ContentPart> parts;

  /// Text parts joined by newlines; images are skipped.
  std::string text() const;
  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_output_tokens = 1024;

  std::size_t image_count() const;
  bool operator==(const ChatRequest&) const = default;
};

/// Empty when the request is well-formed.
std::vector<std::string> validate_request(const ChatRequest& req);

struct Usage {
  int prompt_tokens = 0;
  int output_tokens = 0;
  bool operator==(const Usage&) const = default;
};

struct ChatResponse {
  std::string text;
  std::string finish_reason = "stop";
  Usage usage;
  bool operator==(const ChatResponse&) const = default;
};

/// A chat model. Implementations throw TransportError for retryable failures
/// and ProviderRejection for permanent ones.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_backoff{500};
  /// Injectable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Validates `req`, then calls the backend, retrying TransportError up to
/// max_retries times with exponential backoff (base, 2*base, 4*base, ...).
ChatResponse complete(Backend& backend, const ChatRequest& req, const RetryPolicy& retry = {});

// ---------------------------------------------------------------------------
// Wire format (chat-completions compatible)

nlohmann::json to_wire_json(const ChatRequest& req);
ChatRequest request_from_wire_json(const nlohmann::json& j);
ChatResponse response_from_wire_json(const nlohmann::json& j);
nlohmann::json to_wire_json(const ChatResponse& resp);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

struct RemoteConfig {
  /// e.g. https://api.example.com/v1; requests go to <api_base>/chat/completions.
  std::string api_base;
  /// Name of the environment variable holding the bearer token.
  std::string api_key_env = "LLM_API_KEY";
  std::chrono::seconds timeout{120};
};

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig cfg);
  ChatResponse complete(const ChatRequest& req) override;

 private:
  RemoteConfig cfg_;
  std::string scheme_host_port_;
  std::string path_;
};

/// Deterministic backend driven by a script:
///
///   {"rules":   [{"when": [...], "when_last": [...], "unless": [...],
///                 "unless_last": [...], "reply": "..."}],
///    "queue":   ["...", ...],
///    "default": "..."}
///
/// `when`/`unless` substrings are matched against the whole transcript,
/// `*_last` against the final message. The first matching rule answers;
/// otherwise the next queued reply is consumed, then `default`. With nothing
/// left the call throws ProviderRejection.
class ScriptedBackend : public Backend {
 public:
  struct Rule {
    std::vector<std::string> when;
    std::vector<std::string> when_last;
    std::vector<std::string> unless;
    std::vector<std::string> unless_last;
    std::string reply;
  };

  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<std::string> queue);
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& script);

  void add_rule(Rule rule);
  void push_reply(std::string reply);
  void set_default(std::string reply);

  ChatResponse complete(const ChatRequest& req) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<Rule> rules_;
  std::vector<std::string> queue_;
  std::size_t next_ = 0;
  std::optional<std::string> default_;
  std::size_t calls_ = 0;
};

}  // namespace webrefine::llm
