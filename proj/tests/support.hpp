#pragma once

#include "seal/agent_loop.hpp"
#include "seal/llm_provider.hpp"
#include "seal/session.hpp"

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace seal::test {

std::filesystem::path source_dir();
std::filesystem::path catwatch_dir();
std::string catwatch_text(const std::string &file);

/// CatWatch session straight from the fixture files, nothing run yet.
Session catwatch_session(const std::string &id = "catwatch");

llm::ReplayFixture fixture_file(const std::filesystem::path &path);

class TempDir {
public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  [[nodiscard]] const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Provider backed by a callback; records every request.
class FunctionProvider final : public llm::Provider {
public:
  using Fn = std::function<llm::ChatResponse(const llm::ChatRequest &)>;
  explicit FunctionProvider(Fn fn, std::string identity = "function") : fn_(std::move(fn)), identity_(std::move(identity)) {}

  llm::ChatResponse complete(const llm::ChatRequest &request) override {
    requests.push_back(request);
    return fn_(request);
  }
  [[nodiscard]] std::string identity() const override { return identity_; }

  std::vector<llm::ChatRequest> requests;

private:
  Fn fn_;
  std::string identity_;
};

/// Wraps a provider and records requests.
class SpyProvider final : public llm::Provider {
public:
  explicit SpyProvider(llm::Provider &inner) : inner_(inner) {}
  llm::ChatResponse complete(const llm::ChatRequest &request) override {
    requests.push_back(request);
    return inner_.complete(request);
  }
  [[nodiscard]] std::string identity() const override { return inner_.identity(); }

  std::vector<llm::ChatRequest> requests;

private:
  llm::Provider &inner_;
};

/// Every kind/payload pair delivered to the event sink.
struct EventLog {
  std::vector<std::pair<std::string, json>> events;
  loop::EventSink sink() {
    return [this](const std::string &kind, const json &payload) { events.emplace_back(kind, payload); };
  }
  [[nodiscard]] std::vector<json> of(const std::string &kind) const;
};

std::string fenced(const json &payload);
std::string all_text(const llm::ChatRequest &request);

} // namespace seal::test

namespace seal::test {

/// Random Swagger 2.0 document: a handful of resources, verbs and parameters.
std::string random_swagger(std::mt19937_64 &rng);

/// Session whose catalog, high and low goals, kinds and review decisions are
/// random, ready for the map stage.
Session random_mappable_session(std::mt19937_64 &rng);

/// P4 answers drawn at random over the requested goals: valid plans, unknown
/// endpoints, forward references, unmappable reasons, omissions, stray ids
/// and unparsable text.
FunctionProvider::Fn random_mapping_answers(std::mt19937_64 &rng, const Session &session);

/// Each problem found in the report buckets of `session`; empty when every
/// low-level goal sits in exactly one of mapped / unmapped / excluded.
std::vector<std::string> trichotomy_violations(const Session &session);

struct OracleCounts {
  std::size_t endpoints = 0;
  std::size_t parameters = 0;
};

/// Brute-force scan of the raw paths object with yaml-cpp, independent of
/// the catalog parser.
OracleCounts oracle_counts(const std::string &document_text);

/// Largest executions of any single task, and number of reflections, seen
/// in an event log.
struct BudgetUse {
  int max_attempts = 0;
  int reflections = 0;
};
BudgetUse budget_use(const EventLog &log);

} // namespace seal::test
