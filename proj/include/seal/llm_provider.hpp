#pragma once

#include "seal/util.hpp"

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seal::llm {

enum class Role { system, user, assistant };
enum class StageTag { P1, P2, P3_digest_unused, P4, CRITIQUE };
enum class Finish { complete, truncated };

std::string_view to_string(Role r);
std::string_view to_string(StageTag s);
std::optional<StageTag> parse_stage_tag(std::string_view text);

struct Message {
  Role role = Role::user;
  std::string content;
  friend bool operator==(const Message &, const Message &) = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 0.2;
  int max_tokens = 2048;
  std::string model_id;
  StageTag stage_tag = StageTag::P1;
  friend bool operator==(const ChatRequest &, const ChatRequest &) = default;
};

/// Throws Error(InvalidRequest) when a ChatRequest invariant does not hold.
void validate(const ChatRequest &request);

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  friend bool operator==(const Usage &, const Usage &) = default;
};

struct ChatResponse {
  std::string content;
  Finish finish = Finish::complete;
  Usage usage;
  friend bool operator==(const ChatResponse &, const ChatResponse &) = default;
};

json to_json(const ChatRequest &request);
json to_json(const ChatResponse &response);
ChatRequest request_from_json(const json &j);
ChatResponse response_from_json(const json &j);

class Provider {
public:
  virtual ~Provider() = default;
  /// Throws Error with TransportFailure, AuthFailure, FixtureMiss or
  /// InvalidRequest.
  virtual ChatResponse complete(const ChatRequest &request) = 0;
  /// Recorded in reports, e.g. "replay:3f2a9c01d4e5" or "live:gpt-4o".
  [[nodiscard]] virtual std::string identity() const = 0;
};

// ---------------------------------------------------------------------------
// Replay

struct FixtureEntry {
  StageTag stage = StageTag::P1;
  int ordinal = 1;
  std::string content;
  friend bool operator==(const FixtureEntry &, const FixtureEntry &) = default;
};

struct ReplayFixture {
  std::vector<FixtureEntry> entries;
  friend bool operator==(const ReplayFixture &, const ReplayFixture &) = default;
};

/// Parses {"entries":[{"stage":"P1","ordinal":1,"content":"..."}]}. Extra
/// keys (comments) are ignored. Throws MalformedFixture or DuplicateEntry.
ReplayFixture load_replay_fixture(std::string_view document_text);
std::string dump_replay_fixture(const ReplayFixture &fixture);

/// Returns the entry keyed by (stage, n) on the n-th call for that stage.
/// Calls are serialized; counters advance on every call, including misses.
class ReplayProvider final : public Provider {
public:
  explicit ReplayProvider(ReplayFixture fixture, std::string identity = "replay");

  ChatResponse complete(const ChatRequest &request) override;
  [[nodiscard]] std::string identity() const override { return identity_; }
  [[nodiscard]] int calls(StageTag stage) const;

private:
  std::map<std::pair<StageTag, int>, std::string> entries_;
  std::map<StageTag, int> counters_;
  std::string identity_;
  mutable std::mutex mutex_;
};

std::unique_ptr<ReplayProvider> make_replay_provider(const std::filesystem::path &fixture_file);

// ---------------------------------------------------------------------------
// Live

struct HttpResult {
  int status = 0; ///< 0 = no response (network failure)
  std::string body;
  std::string error;
};

class HttpTransport {
public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post_json(const std::string &url,
                               const std::vector<std::pair<std::string, std::string>> &headers,
                               const std::string &body) = 0;
};

/// cpp-httplib backed transport (HTTP and HTTPS).
std::shared_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(120));

struct LiveConfig {
  std::string url;   ///< full chat-completions URL
  std::string model;
  std::string key;
  double temperature = 0.2;
  int max_tokens = 2048;
};

/// Reads an optional JSON config file ({"url","model","key","temperature",
/// "max_tokens"}), then lets SEAL_LLM_URL / SEAL_LLM_MODEL / SEAL_LLM_KEY
/// override it.
LiveConfig live_config_from(const std::optional<std::filesystem::path> &config_file);

/// OpenAI-compatible chat-completions client. Transport failures are retried
/// twice with 1 s then 4 s backoff; 401/403 fail immediately.
class LiveProvider final : public Provider {
public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LiveProvider(LiveConfig config, std::shared_ptr<HttpTransport> transport, Sleeper sleeper = {});

  ChatResponse complete(const ChatRequest &request) override;
  [[nodiscard]] std::string identity() const override { return "live:" + config_.model; }

  static constexpr std::array<std::chrono::milliseconds, 2> kBackoff{std::chrono::milliseconds(1000),
                                                                     std::chrono::milliseconds(4000)};

private:
  ChatResponse attempt(const ChatRequest &request);

  LiveConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// Recording

/// Forwards to another provider and keeps every successful response as a
/// fixture entry, so a live run can be replayed later.
class RecordingProvider final : public Provider {
public:
  explicit RecordingProvider(std::shared_ptr<Provider> inner) : inner_(std::move(inner)) {}

  ChatResponse complete(const ChatRequest &request) override;
  [[nodiscard]] std::string identity() const override { return inner_->identity(); }
  [[nodiscard]] ReplayFixture fixture() const;

private:
  std::shared_ptr<Provider> inner_;
  std::map<StageTag, int> counters_;
  ReplayFixture recorded_;
  mutable std::mutex mutex_;
};

} // namespace seal::llm
