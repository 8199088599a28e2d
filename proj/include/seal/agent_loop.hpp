#pragma once

#include "seal/call_plan.hpp"
#include "seal/error.hpp"
#include "seal/llm_provider.hpp"
#include "seal/openapi_catalog.hpp"
#include "seal/prompt_pipeline.hpp"
#include "seal/session.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace seal::loop {

struct Limits {
  int inner_limit = 3; ///< executions per task
  int outer_limit = 2; ///< reflections per session
};

enum class Mode { autonomous, interactive };
enum class Verdict { ok, retry, fail };

std::string_view to_string(Verdict v);

struct Observation {
  Verdict verdict = Verdict::ok;
  std::vector<Issue> issues;
  std::string feedback; ///< correction request when verdict is retry
};

/// Provider or parse failure carried as data so the Observer can judge it.
struct TaskFailure {
  std::string code;
  std::string message;
  std::vector<std::string> details;
};

struct Artifact {
  std::variant<openapi::EndpointCatalog, std::vector<prompts::GoalDraft>, std::vector<prompts::KindVerdict>,
               std::vector<prompts::MappingDraft>, TaskFailure>
      value;
  std::optional<std::string> raw_response; ///< model text, for retry feedback
  std::vector<goals::GoalId> requested;    ///< goal ids named in the request (Critique, Map)

  [[nodiscard]] const TaskFailure *failure() const { return std::get_if<TaskFailure>(&value); }
};

using EventSink = std::function<void(const std::string &kind, const json &payload)>;
using Clock = std::function<std::string()>;

/// Wall-clock ISO-8601 timestamps.
Clock system_clock();
/// Always the same instant; replay runs use it so outputs are byte-stable.
Clock fixed_clock(std::string instant = "1970-01-01T00:00:00Z");

struct RunContext {
  llm::Provider &provider;
  const prompts::TemplateSet &templates;
  Limits limits;
  Mode mode = Mode::autonomous;
  EventSink events;
  Clock clock;
  std::string model_id;
};

/// Remaining tasks of the current round, in execution order. Recomputed from
/// session state after every task, so Decompose tasks appear once the
/// high-level goals exist. Throws SessionNotReady.
std::vector<Task> plan_tasks(const Session &session);

/// Runs one attempt: ExtractApi parses the stored spec; the other kinds render
/// their prompt, call the provider and parse the answer. `feedback` messages
/// are appended after the rendered prompt. Failures come back as TaskFailure.
Artifact execute_task(const Task &task, Session &session, RunContext &ctx,
                      const std::vector<llm::Message> &feedback = {});

/// Judges one attempt. Blocking problems give retry, or fail once
/// task.attempt reaches the inner limit.
Observation observe_artifact(const Task &task, const Artifact &artifact, const Session &session,
                             const Limits &limits);

/// Coverage and stop/replan recommendation for the current round.
/// Throws RoundIncomplete.
Reflection reflect_round(const Session &session, const Limits &limits);

enum class RunState { completed, suspended, failed };

struct RunResult {
  Session session;
  RunState state = RunState::completed;
  std::optional<Error> error; ///< SuspendedForReview or TaskBudgetExhausted
};

/// plan -> (act -> observe)* -> reflect rounds until the Reflector stops.
/// Interactive mode suspends after ElicitHigh, after the Decompose batch and
/// after Map; a later call resumes once the pending review is complete.
RunResult run_pipeline(Session session, RunContext &ctx);

/// Runs only the tasks of one stage ("extract", "elicit", ...), no reflection.
RunResult run_stage(Session session, const std::string &stage, RunContext &ctx);

/// Whether the human review required at `checkpoint` has been recorded.
bool review_complete(const Session &session, const std::string &checkpoint);

/// Advisory heuristics applied to low-level drafts.
bool has_multiple_actions(const std::string &description);
bool developer_perspective(const std::string &description);

} // namespace seal::loop
