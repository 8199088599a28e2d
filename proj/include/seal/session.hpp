#pragma once

#include "seal/call_plan.hpp"
#include "seal/goal_model.hpp"
#include "seal/llm_provider.hpp"
#include "seal/openapi_catalog.hpp"
#include "seal/util.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace seal {

enum class TaskKind { ExtractApi, ElicitHigh, Critique, Decompose, Map };
enum class TaskStatus { pending, running, succeeded, failed };
enum class StageState { not_run, suspended, done, failed };
enum class Recommendation { stop, replan };

std::string_view to_string(TaskKind k);
std::string_view to_string(TaskStatus s);
std::string_view to_string(StageState s);
std::string_view to_string(Recommendation r);

/// Stage names used in stage_status, the CLI and the HTTP API.
inline constexpr const char *kStageExtract = "extract";
inline constexpr const char *kStageElicit = "elicit";
inline constexpr const char *kStageCritique = "critique";
inline constexpr const char *kStageDecompose = "decompose";
inline constexpr const char *kStageMap = "map";

std::string_view stage_of(TaskKind kind);

struct Task {
  TaskKind kind = TaskKind::ExtractApi;
  std::optional<goals::GoalId> parent; ///< Decompose only
  int attempt = 1;
  TaskStatus status = TaskStatus::pending;

  [[nodiscard]] std::string label() const;
  friend bool operator==(const Task &, const Task &) = default;
};

struct Reflection {
  int round = 1;
  Ratio coverage;
  std::vector<goals::GoalId> unmapped_goals;
  Recommendation recommendation = Recommendation::stop;
  friend bool operator==(const Reflection &, const Reflection &) = default;
};

struct TranscriptEntry {
  int sequence = 1;
  int round = 0;
  std::string task;
  int attempt = 1;
  std::string at;
  llm::ChatRequest request;
  std::optional<llm::ChatResponse> response;
  std::optional<std::string> error_code;
  std::optional<std::string> error_message;
  friend bool operator==(const TranscriptEntry &, const TranscriptEntry &) = default;
};

struct DecisionRecord {
  goals::GoalId goal;
  goals::Decision decision = goals::Decision::accept;
  std::optional<std::string> reason;
  std::string source; ///< "cli", "http", ...
  friend bool operator==(const DecisionRecord &, const DecisionRecord &) = default;
};

struct Session {
  std::string id;
  std::string brief;
  std::string spec_text;
  std::string spec_format; ///< "json" or "yaml"
  std::string spec_hash;
  std::optional<openapi::EndpointCatalog> catalog;
  goals::GoalTree goal_tree;
  std::vector<TranscriptEntry> transcript;
  std::vector<DecisionRecord> decisions;
  std::map<goals::GoalId, MappingOutcome> alignment;
  std::map<std::string, StageState> stage_status;
  std::string template_version;

  // Loop state, persisted so interactive runs can resume in a new process.
  int round = 0;
  std::vector<Task> round_tasks;
  std::vector<Reflection> reflections;
  std::set<goals::GoalId> decomposed;
  std::optional<std::string> suspended_at; ///< checkpoint stage name
  bool finished = false;
  std::string provider_identity;
  std::string last_run_at;

  [[nodiscard]] const goals::Actor &actor() const { return goal_tree.actor(); }
  [[nodiscard]] StageState stage(const std::string &name) const;
  friend bool operator==(const Session &, const Session &) = default;
};

/// Fresh session with all stages not_run. The id defaults to a prefix of the
/// brief's hash.
Session new_session(std::string brief, goals::Actor actor, std::string spec_text, std::string spec_format,
                    std::optional<std::string> id = std::nullopt);

/// session.json content (spec text and transcript bodies live in their own files).
json session_to_json(const Session &session);
/// Inverse of session_to_json; spec text and transcript are supplied separately.
Session session_from_json(const json &j, std::string spec_text, std::vector<TranscriptEntry> transcript);

json to_json(const TranscriptEntry &entry);
TranscriptEntry transcript_entry_from_json(const json &j);
json to_json(const Reflection &r);
json to_json(const Task &t);

} // namespace seal
