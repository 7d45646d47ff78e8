#include "webrefine/llm_gateway.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <sstream>
#include <thread>

#include "webrefine/errors.hpp"

namespace webrefine::llm {

using nlohmann::json;

namespace {

constexpr std::string_view kDataUrlPrefix = "data:image/png;base64,";

std::optional<Role> parse_role(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  return std::nullopt;
}

int count_words(std::string_view s) {
  int n = 0;
  bool in_word = false;
  for (char c : s) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

bool contains_all(std::string_view haystack, const std::vector<std::string>& needles) {
  for (const auto& n : needles) {
    if (haystack.find(n) == std::string_view::npos) return false;
  }
  return true;
}

bool contains_any(std::string_view haystack, const std::vector<std::string>& needles) {
  for (const auto& n : needles) {
    if (haystack.find(n) != std::string_view::npos) return true;
  }
  return false;
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_string()) {
      out.push_back(it->get<std::string>());
    } else {
      for (const auto& s : *it) out.push_back(s.get<std::string>());
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System:
      return "system";
    case Role::User:
      return "user";
    case Role::Assistant:
      return "assistant";
  }
  return "user";
}

std::string Message::text() const {
  std::string out;
  for (const auto& part : parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      if (!out.empty()) out.push_back('\n');
      out += t->text;
    }
  }
  return out;
}

std::size_t ChatRequest::image_count() const {
  std::size_t n = 0;
  for (const auto& m : messages) {
    for (const auto& p : m.parts) n += std::holds_alternative<ImagePart>(p) ? 1 : 0;
  }
  return n;
}

std::vector<std::string> validate_request(const ChatRequest& req) {
  std::vector<std::string> out;
  if (req.messages.empty()) out.emplace_back("messages: at least one message required");
  if (req.temperature < 0.0) out.emplace_back("temperature: must be >= 0");
  if (req.max_output_tokens < 1) out.emplace_back("max_output_tokens: must be positive");
  for (std::size_t i = 0; i < req.messages.size(); ++i) {
    for (const auto& p : req.messages[i].parts) {
      if (const auto* img = std::get_if<ImagePart>(&p); img && img->png.empty()) {
        out.push_back("messages[" + std::to_string(i) + "]: image part has no bytes");
      }
    }
  }
  return out;
}

ChatResponse complete(Backend& backend, const ChatRequest& req, const RetryPolicy& retry) {
  if (auto problems = validate_request(req); !problems.empty()) {
    throw ProviderRejection("malformed chat request: " + problems.front());
  }
  auto sleep = retry.sleep ? retry.sleep : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  for (int attempt = 0;; ++attempt) {
    try {
      return backend.complete(req);
    } catch (const TransportError& e) {
      if (attempt >= retry.max_retries) {
        throw TransportError("transport failed after " + std::to_string(attempt + 1) +
                             " attempts: " + e.what());
      }
      auto delay = retry.base_backoff * (1LL << std::min(attempt, 16));
      spdlog::warn("chat request failed ({}), retrying in {} ms", e.what(), delay.count());
      sleep(delay);
    }
  }
}

// ---------------------------------------------------------------------------
// Wire format

std::string base64_encode(std::span<const std::uint8_t> data) {
  if (data.empty()) return {};
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                          static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.empty()) return {};
  if (text.size() % 4 != 0) throw ProviderRejection("base64 payload length is not a multiple of 4");
  Bytes out(3 * text.size() / 4);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) throw ProviderRejection("invalid base64 payload");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

json to_wire_json(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    json content = json::array();
    for (const auto& p : m.parts) {
      if (const auto* t = std::get_if<TextPart>(&p)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& img = std::get<ImagePart>(p);
        content.push_back({{"type", "image_url"},
                           {"image_url", {{"url", std::string(kDataUrlPrefix) + base64_encode(img.png)}}}});
      }
    }
    messages.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
  }
  return {{"model", req.model_id},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"max_tokens", req.max_output_tokens}};
}

ChatRequest request_from_wire_json(const json& j) {
  try {
    ChatRequest req;
    req.model_id = j.at("model").get<std::string>();
    req.temperature = j.value("temperature", 0.0);
    req.max_output_tokens = j.value("max_tokens", 1024);
    for (const auto& mj : j.at("messages")) {
      Message m;
      auto role = parse_role(mj.at("role").get<std::string>());
      if (!role) throw ProviderRejection("unknown message role " + mj.at("role").dump());
      m.role = *role;
      const auto& content = mj.at("content");
      if (content.is_string()) {
        m.parts.push_back(TextPart{content.get<std::string>()});
      } else {
        for (const auto& pj : content) {
          auto type = pj.at("type").get<std::string>();
          if (type == "text") {
            m.parts.push_back(TextPart{pj.at("text").get<std::string>()});
          } else if (type == "image_url") {
            auto url = pj.at("image_url").at("url").get<std::string>();
            if (url.rfind(kDataUrlPrefix, 0) != 0) {
              throw ProviderRejection("image_url must be a base64 PNG data URL");
            }
            m.parts.push_back(ImagePart{base64_decode(std::string_view(url).substr(kDataUrlPrefix.size()))});
          } else {
            throw ProviderRejection("unknown content part type '" + type + "'");
          }
        }
      }
      req.messages.push_back(std::move(m));
    }
    return req;
  } catch (const json::exception& e) {
    throw ProviderRejection(std::string("malformed chat request JSON: ") + e.what());
  }
}

ChatResponse response_from_wire_json(const json& j) {
  try {
    ChatResponse resp;
    const auto& choice = j.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    resp.text = content.is_null() ? std::string{} : content.get<std::string>();
    const auto& fr = choice.value("finish_reason", json("stop"));
    resp.finish_reason = fr.is_string() ? fr.get<std::string>() : "stop";
    if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
      resp.usage.prompt_tokens = u->value("prompt_tokens", 0);
      resp.usage.output_tokens = u->value("completion_tokens", 0);
    }
    return resp;
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed chat response JSON: ") + e.what());
  }
}

json to_wire_json(const ChatResponse& resp) {
  return {{"choices",
           json::array({{{"index", 0},
                         {"message", {{"role", "assistant"}, {"content", resp.text}}},
                         {"finish_reason", resp.finish_reason}}})},
          {"usage",
           {{"prompt_tokens", resp.usage.prompt_tokens},
            {"completion_tokens", resp.usage.output_tokens}}}};
}

// ---------------------------------------------------------------------------
// RemoteBackend

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  auto sep = cfg_.api_base.find("://");
  if (sep == std::string::npos) throw ConfigError("api base must be an absolute URL: " + cfg_.api_base);
  auto path_at = cfg_.api_base.find('/', sep + 3);
  scheme_host_port_ = cfg_.api_base.substr(0, path_at);
  path_ = path_at == std::string::npos ? std::string{} : cfg_.api_base.substr(path_at);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

ChatResponse RemoteBackend::complete(const ChatRequest& req) {
  httplib::Client client(scheme_host_port_);
  if (!client.is_valid()) throw ConfigError("unsupported api base: " + cfg_.api_base);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);

  httplib::Headers headers;
  if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto result = client.Post(path_, headers, to_wire_json(req).dump(), "application/json");
  if (!result) throw TransportError("HTTP request failed: " + httplib::to_string(result.error()));
  if (result->status == 429 || result->status >= 500) {
    throw TransportError("provider returned HTTP " + std::to_string(result->status));
  }
  if (result->status != 200) {
    throw ProviderRejection("provider rejected request with HTTP " + std::to_string(result->status) +
                            ": " + result->body.substr(0, 512));
  }
  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("provider response is not JSON: ") + e.what());
  }
  return response_from_wire_json(body);
}

// ---------------------------------------------------------------------------
// ScriptedBackend

ScriptedBackend::ScriptedBackend(std::vector<std::string> queue) : queue_(std::move(queue)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& script) {
  if (!script.is_object()) throw ConfigError("scripted backend: script must be an object");
  auto owned = std::make_shared<ScriptedBackend>();
  auto& b = *owned;
  for (const auto& [key, _] : script.items()) {
    if (key != "rules" && key != "queue" && key != "default") {
      throw ConfigError("scripted backend: unknown key '" + key + "'");
    }
  }
  try {
    for (const auto& rj : script.value("rules", json::array())) {
      Rule r;
      r.when = string_list(rj, "when");
      r.when_last = string_list(rj, "when_last");
      r.unless = string_list(rj, "unless");
      r.unless_last = string_list(rj, "unless_last");
      r.reply = rj.at("reply").get<std::string>();
      b.rules_.push_back(std::move(r));
    }
    for (const auto& q : script.value("queue", json::array())) b.queue_.push_back(q.get<std::string>());
    if (script.contains("default")) b.default_ = script["default"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scripted backend: ") + e.what());
  }
  return owned;
}

void ScriptedBackend::add_rule(Rule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
}

void ScriptedBackend::push_reply(std::string reply) {
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(reply));
}

void ScriptedBackend::set_default(std::string reply) {
  std::lock_guard lock(mu_);
  default_ = std::move(reply);
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

ChatResponse ScriptedBackend::complete(const ChatRequest& req) {
  std::string transcript;
  for (const auto& m : req.messages) {
    transcript += m.text();
    transcript += '\n';
  }
  std::string last = req.messages.empty() ? std::string{} : req.messages.back().text();

  std::lock_guard lock(mu_);
  ++calls_;
  const std::string* reply = nullptr;
  for (const auto& r : rules_) {
    if (contains_all(transcript, r.when) && contains_all(last, r.when_last) &&
        !contains_any(transcript, r.unless) && !contains_any(last, r.unless_last)) {
      reply = &r.reply;
      break;
    }
  }
  if (!reply && next_ < queue_.size()) reply = &queue_[next_++];
  if (!reply && default_) reply = &*default_;
  if (!reply) throw ProviderRejection("scripted backend has no reply for this request");

  ChatResponse resp;
  resp.text = *reply;
  resp.usage.prompt_tokens = count_words(transcript);
  resp.usage.output_tokens = count_words(resp.text);
  return resp;
}

}  // namespace webrefine::llm
