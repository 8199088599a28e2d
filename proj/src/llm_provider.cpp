#include "seal/llm_provider.hpp"

#include "seal/error.hpp"

#include "httplib.h"

#include <cstdlib>
#include <set>
#include <thread>

namespace seal::llm {

std::string_view to_string(Role r) {
  switch (r) {
  case Role::system: return "system";
  case Role::user: return "user";
  case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(StageTag s) {
  switch (s) {
  case StageTag::P1: return "P1";
  case StageTag::P2: return "P2";
  case StageTag::P3_digest_unused: return "P3_digest_unused";
  case StageTag::P4: return "P4";
  case StageTag::CRITIQUE: return "CRITIQUE";
  }
  return "P1";
}

std::optional<StageTag> parse_stage_tag(std::string_view text) {
  for (auto s : {StageTag::P1, StageTag::P2, StageTag::P3_digest_unused, StageTag::P4, StageTag::CRITIQUE}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

void validate(const ChatRequest &request) {
  bool has_user = false;
  for (const auto &m : request.messages) {
    if (m.content.empty()) {
      throw Error(ErrorCode::InvalidRequest, "empty message content");
    }
    has_user = has_user || m.role == Role::user;
  }
  if (!has_user) {
    throw Error(ErrorCode::InvalidRequest, "request carries no user message");
  }
  if (request.temperature < 0.0 || request.temperature > 2.0) {
    throw Error(ErrorCode::InvalidRequest, "temperature outside [0,2]");
  }
  if (request.max_tokens <= 0) {
    throw Error(ErrorCode::InvalidRequest, "max_tokens must be positive");
  }
}

json to_json(const ChatRequest &request) {
  json messages = json::array();
  for (const auto &m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return json{{"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens},
              {"model_id", request.model_id},
              {"stage_tag", to_string(request.stage_tag)}};
}

json to_json(const ChatResponse &response) {
  return json{{"content", response.content},
              {"finish", response.finish == Finish::complete ? "complete" : "truncated"},
              {"usage",
               {{"prompt_tokens", response.usage.prompt_tokens},
                {"completion_tokens", response.usage.completion_tokens}}}};
}

ChatRequest request_from_json(const json &j) {
  ChatRequest r;
  for (const auto &m : j.at("messages")) {
    const auto role = m.at("role").get<std::string>();
    r.messages.push_back({role == "system" ? Role::system : role == "assistant" ? Role::assistant : Role::user,
                          m.at("content").get<std::string>()});
  }
  r.temperature = j.at("temperature").get<double>();
  r.max_tokens = j.at("max_tokens").get<int>();
  r.model_id = j.at("model_id").get<std::string>();
  r.stage_tag = parse_stage_tag(j.at("stage_tag").get<std::string>()).value_or(StageTag::P1);
  return r;
}

ChatResponse response_from_json(const json &j) {
  ChatResponse r;
  r.content = j.at("content").get<std::string>();
  r.finish = j.at("finish").get<std::string>() == "complete" ? Finish::complete : Finish::truncated;
  r.usage.prompt_tokens = j.at("usage").at("prompt_tokens").get<std::int64_t>();
  r.usage.completion_tokens = j.at("usage").at("completion_tokens").get<std::int64_t>();
  return r;
}

// ---------------------------------------------------------------------------
// Replay

ReplayFixture load_replay_fixture(std::string_view document_text) {
  json doc;
  try {
    doc = json::parse(document_text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::MalformedFixture, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw Error(ErrorCode::MalformedFixture, "fixture must be an object with an 'entries' array");
  }
  ReplayFixture fixture;
  std::set<std::pair<StageTag, int>> keys;
  std::size_t index = 0;
  for (const auto &e : doc["entries"]) {
    const std::string where = "entries[" + std::to_string(index++) + "]";
    if (!e.is_object() || !e.contains("stage") || !e["stage"].is_string() || !e.contains("ordinal") ||
        !e["ordinal"].is_number_integer() || !e.contains("content") || !e["content"].is_string()) {
      throw Error(ErrorCode::MalformedFixture, where + " needs string stage, integer ordinal, string content");
    }
    auto stage = parse_stage_tag(e["stage"].get<std::string>());
    if (!stage) {
      throw Error(ErrorCode::MalformedFixture, where + " has unknown stage " + e["stage"].dump());
    }
    const int ordinal = e["ordinal"].get<int>();
    if (ordinal < 1) {
      throw Error(ErrorCode::MalformedFixture, where + " ordinal must be >= 1");
    }
    if (!keys.emplace(*stage, ordinal).second) {
      throw Error(ErrorCode::DuplicateEntry, "duplicate entry (" + std::string(to_string(*stage)) + ", " +
                                                 std::to_string(ordinal) + ")");
    }
    fixture.entries.push_back({*stage, ordinal, e["content"].get<std::string>()});
  }
  return fixture;
}

std::string dump_replay_fixture(const ReplayFixture &fixture) {
  json entries = json::array();
  for (const auto &e : fixture.entries) {
    entries.push_back({{"stage", to_string(e.stage)}, {"ordinal", e.ordinal}, {"content", e.content}});
  }
  return canonical_dump(json{{"entries", entries}});
}

ReplayProvider::ReplayProvider(ReplayFixture fixture, std::string identity)
    : identity_(std::move(identity)) {
  for (auto &e : fixture.entries) {
    if (!entries_.emplace(std::make_pair(e.stage, e.ordinal), std::move(e.content)).second) {
      throw Error(ErrorCode::DuplicateEntry, "duplicate fixture entry");
    }
  }
}

ChatResponse ReplayProvider::complete(const ChatRequest &request) {
  validate(request);
  std::lock_guard lock(mutex_);
  const int ordinal = ++counters_[request.stage_tag];
  auto it = entries_.find({request.stage_tag, ordinal});
  if (it == entries_.end()) {
    throw Error(ErrorCode::FixtureMiss, "no fixture entry for (" + std::string(to_string(request.stage_tag)) +
                                            ", " + std::to_string(ordinal) + ")");
  }
  return ChatResponse{it->second, Finish::complete, Usage{}};
}

int ReplayProvider::calls(StageTag stage) const {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(stage);
  return it == counters_.end() ? 0 : it->second;
}

std::unique_ptr<ReplayProvider> make_replay_provider(const std::filesystem::path &fixture_file) {
  const auto text = read_file(fixture_file);
  return std::make_unique<ReplayProvider>(load_replay_fixture(text), "replay:" + sha256_hex(text).substr(0, 12));
}

// ---------------------------------------------------------------------------
// Live

namespace {

class HttplibTransport final : public HttpTransport {
public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

  HttpResult post_json(const std::string &url, const std::vector<std::pair<std::string, std::string>> &headers,
                       const std::string &body) override {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      return {0, "", "URL lacks a scheme: " + url};
    }
    auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers hs;
    for (const auto &[k, v] : headers) {
      hs.emplace(k, v);
    }
    auto result = client.Post(path, hs, body, "application/json");
    if (!result) {
      return {0, "", httplib::to_string(result.error())};
    }
    return {result->status, result->body, ""};
  }

private:
  std::chrono::seconds timeout_;
};

bool retryable_status(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

} // namespace

std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

LiveConfig live_config_from(const std::optional<std::filesystem::path> &config_file) {
  LiveConfig config;
  if (config_file) {
    json j;
    try {
      j = json::parse(read_file(*config_file));
    } catch (const json::parse_error &e) {
      throw Error(ErrorCode::InvalidArgument, std::string("provider config: ") + e.what());
    }
    config.url = j.value("url", config.url);
    config.model = j.value("model", config.model);
    config.key = j.value("key", config.key);
    config.temperature = j.value("temperature", config.temperature);
    config.max_tokens = j.value("max_tokens", config.max_tokens);
  }
  if (const char *v = std::getenv("SEAL_LLM_URL"); v && *v) config.url = v;
  if (const char *v = std::getenv("SEAL_LLM_MODEL"); v && *v) config.model = v;
  if (const char *v = std::getenv("SEAL_LLM_KEY"); v && *v) config.key = v;
  return config;
}

LiveProvider::LiveProvider(LiveConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
  if (config_.url.empty()) {
    throw Error(ErrorCode::InvalidArgument, "live provider needs an endpoint URL (SEAL_LLM_URL)");
  }
}

ChatResponse LiveProvider::complete(const ChatRequest &request) {
  validate(request);
  for (std::size_t retry = 0;; ++retry) {
    try {
      return attempt(request);
    } catch (const Error &e) {
      if (e.code() != ErrorCode::TransportFailure || retry >= kBackoff.size()) {
        throw;
      }
      sleeper_(kBackoff[retry]);
    }
  }
}

ChatResponse LiveProvider::attempt(const ChatRequest &request) {
  json messages = json::array();
  for (const auto &m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  const json body{{"model", request.model_id.empty() ? config_.model : request.model_id},
                  {"messages", messages},
                  {"temperature", request.temperature},
                  {"max_tokens", request.max_tokens}};
  std::vector<std::pair<std::string, std::string>> headers;
  if (!config_.key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + config_.key);
  }
  const auto result = transport_->post_json(config_.url, headers, body.dump());
  if (result.status == 401 || result.status == 403) {
    throw Error(ErrorCode::AuthFailure, "provider rejected credentials (HTTP " + std::to_string(result.status) + ")");
  }
  if (result.status == 0) {
    throw Error(ErrorCode::TransportFailure, "network error: " + result.error);
  }
  if (result.status < 200 || result.status >= 300) {
    const std::string msg = "HTTP " + std::to_string(result.status) + ": " + result.body.substr(0, 200);
    if (retryable_status(result.status)) {
      throw Error(ErrorCode::TransportFailure, msg);
    }
    // Non-retryable rejection; still a transport-level failure, but surfaced
    // without burning the retry budget.
    throw Error(ErrorCode::InvalidRequest, msg);
  }
  json parsed;
  try {
    parsed = json::parse(result.body);
  } catch (const json::parse_error &) {
    throw Error(ErrorCode::TransportFailure, "response body is not JSON");
  }
  ChatResponse response;
  try {
    const auto &choice = parsed.at("choices").at(0);
    const auto &content = choice.at("message").at("content");
    response.content = content.is_string() ? content.get<std::string>() : std::string{};
    const auto finish = choice.value("finish_reason", std::string("stop"));
    response.finish = finish == "length" ? Finish::truncated : Finish::complete;
    if (parsed.contains("usage")) {
      response.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", std::int64_t{0});
      response.usage.completion_tokens = parsed["usage"].value("completion_tokens", std::int64_t{0});
    }
  } catch (const json::exception &e) {
    throw Error(ErrorCode::TransportFailure, std::string("unexpected response shape: ") + e.what());
  }
  if (response.finish == Finish::complete && response.content.empty()) {
    throw Error(ErrorCode::TransportFailure, "complete response without content");
  }
  return response;
}

// ---------------------------------------------------------------------------
// Recording

ChatResponse RecordingProvider::complete(const ChatRequest &request) {
  int ordinal = 0;
  {
    std::lock_guard lock(mutex_);
    ordinal = ++counters_[request.stage_tag];
  }
  auto response = inner_->complete(request);
  std::lock_guard lock(mutex_);
  recorded_.entries.push_back({request.stage_tag, ordinal, response.content});
  return response;
}

ReplayFixture RecordingProvider::fixture() const {
  std::lock_guard lock(mutex_);
  return recorded_;
}

} // namespace seal::llm
