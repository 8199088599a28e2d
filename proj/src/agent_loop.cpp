#include "seal/agent_loop.hpp"

#include "seal/alignment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <set>
#include <sstream>

namespace seal::loop {

namespace {

using goals::Goal;
using goals::GoalId;

bool same_task(const Task &a, TaskKind kind, const std::optional<GoalId> &parent) {
  return a.kind == kind && a.parent == parent;
}

bool attempted(const Session &s, TaskKind kind, const std::optional<GoalId> &parent = std::nullopt) {
  return std::any_of(s.round_tasks.begin(), s.round_tasks.end(), [&](const Task &t) {
    return same_task(t, kind, parent) && (t.status == TaskStatus::succeeded || t.status == TaskStatus::failed);
  });
}

std::vector<Goal> live_high_goals(const Session &s) {
  std::vector<Goal> out;
  for (const auto &g : s.goal_tree.high_goals()) {
    if (g.status != goals::Status::discarded) out.push_back(g);
  }
  return out;
}

/// Mappable goals without a settled outcome.
std::vector<Goal> goals_needing_map(const Session &s) {
  std::vector<Goal> out;
  for (const auto &g : s.goal_tree.mappable()) {
    auto it = s.alignment.find(g.id);
    if (it == s.alignment.end() || it->second.source == MappingOutcome::Source::task_failed) {
      out.push_back(g);
    }
  }
  return out;
}

void emit(RunContext &ctx, const std::string &kind, const json &payload) {
  if (ctx.events) ctx.events(kind, payload);
}

json issues_json(const std::vector<Issue> &issues) {
  json out = json::array();
  for (const auto &i : issues) out.push_back(to_json(i));
  return out;
}

std::vector<std::string> words_of(const std::string &text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '\'') {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      if (!current.empty()) words.push_back(current);
      current.clear();
      if (c == ',' || c == ';') words.emplace_back(",");
    }
  }
  if (!current.empty()) words.push_back(current);
  return words;
}

Artifact failure_artifact(const Error &e, std::optional<std::string> raw = std::nullopt) {
  Artifact a;
  a.value = TaskFailure{std::string(to_string(e.code())), e.message(), e.details()};
  a.raw_response = std::move(raw);
  return a;
}

bool retryable_failure(const TaskFailure &f) {
  return f.code != "AuthFailure" && f.code != "InvalidRequest" && f.code != "MissingContext" &&
         f.code != "EmptyMappableSet" && f.code != "MalformedDocument" && f.code != "UnsupportedVersion" &&
         f.code != "UnresolvableRef" && f.code != "DuplicateOperation";
}

std::string feedback_text(const std::vector<Issue> &issues) {
  std::ostringstream out;
  out << "Your previous answer could not be accepted:\n";
  for (const auto &i : issues) {
    if (i.advisory) continue;
    out << "- " << i.code << ": " << i.message << "\n";
  }
  out << "Answer again with one corrected JSON block that follows the output format.";
  return out.str();
}

void set_stage(Session &s, TaskKind kind, StageState state) { s.stage_status[std::string(stage_of(kind))] = state; }

// ---------------------------------------------------------------------------
// Ingestion of accepted (or partially accepted) artifacts.

void inherit_kind(Session &s, const GoalId &parent) {
  const Goal *p = s.goal_tree.find(parent);
  if (!p || p->kind == goals::Kind::unknown) return;
  for (const auto &child : s.goal_tree.children_of(parent)) {
    if (child.kind == goals::Kind::unknown) s.goal_tree.set_kind(child.id, p->kind);
  }
}

void record_mappings(Session &s, const std::vector<prompts::MappingDraft> &drafts, bool validation_only) {
  for (const auto &d : drafts) {
    MappingOutcome outcome;
    outcome.round = std::max(s.round, 1);
    if (!d.mapped()) {
      if (validation_only) continue;
      outcome.source = MappingOutcome::Source::model_unmappable;
      outcome.reason = d.unmappable_reason();
    } else {
      auto validation = alignment::validate_call_plan(d, *s.catalog);
      if (validation.plan) {
        outcome.source = MappingOutcome::Source::plan;
        outcome.plan = std::move(validation.plan);
      } else {
        outcome.source = MappingOutcome::Source::validation_failed;
        outcome.reason = kValidationFailedReason;
      }
    }
    s.alignment[d.goal_id] = std::move(outcome);
  }
}

void ingest_success(const Task &task, const Artifact &artifact, Session &s) {
  switch (task.kind) {
  case TaskKind::ExtractApi:
    s.catalog = std::get<openapi::EndpointCatalog>(artifact.value);
    break;
  case TaskKind::ElicitHigh:
    s.goal_tree.ingest(std::nullopt, std::get<std::vector<prompts::GoalDraft>>(artifact.value), s.round);
    break;
  case TaskKind::Critique:
    for (const auto &v : std::get<std::vector<prompts::KindVerdict>>(artifact.value)) {
      s.goal_tree.set_kind(v.goal_id, v.kind);
      inherit_kind(s, v.goal_id);
    }
    break;
  case TaskKind::Decompose:
    s.goal_tree.ingest(task.parent, std::get<std::vector<prompts::GoalDraft>>(artifact.value), s.round);
    inherit_kind(s, *task.parent);
    s.decomposed.insert(*task.parent);
    break;
  case TaskKind::Map:
    record_mappings(s, std::get<std::vector<prompts::MappingDraft>>(artifact.value), false);
    break;
  }
}

void ingest_failure(const Task &task, const Artifact &artifact, Session &s) {
  if (task.kind != TaskKind::Map) return;
  if (const auto *drafts = std::get_if<std::vector<prompts::MappingDraft>>(&artifact.value)) {
    // Keep what validated; invalid plans become validation failures, never plans.
    record_mappings(s, *drafts, false);
    return;
  }
  const auto *f = artifact.failure();
  for (const auto &id : artifact.requested) {
    MappingOutcome outcome;
    outcome.source = MappingOutcome::Source::task_failed;
    outcome.reason = "mapping failed: " + (f ? f->code : std::string("unknown"));
    outcome.round = std::max(s.round, 1);
    s.alignment[id] = std::move(outcome);
  }
}

// ---------------------------------------------------------------------------

llm::ChatResponse call_provider(const Task &task, Session &s, RunContext &ctx, const llm::ChatRequest &request) {
  TranscriptEntry entry;
  entry.sequence = static_cast<int>(s.transcript.size()) + 1;
  entry.round = s.round;
  entry.task = task.label();
  entry.attempt = task.attempt;
  entry.at = ctx.clock ? ctx.clock() : std::string{};
  entry.request = request;
  try {
    auto response = ctx.provider.complete(request);
    entry.response = response;
    s.transcript.push_back(std::move(entry));
    return response;
  } catch (const Error &e) {
    entry.error_code = std::string(to_string(e.code()));
    entry.error_message = e.message();
    s.transcript.push_back(std::move(entry));
    throw;
  }
}

/// Executes one task through its inner loop, updating task and session.
void run_task(Task &task, Session &s, RunContext &ctx) {
  std::vector<llm::Message> feedback;
  for (int attempt = 1; attempt <= ctx.limits.inner_limit; ++attempt) {
    task.attempt = attempt;
    task.status = TaskStatus::running;
    emit(ctx, "task_started", {{"round", s.round}, {"task", task.label()}, {"attempt", attempt}});
    Artifact artifact = execute_task(task, s, ctx, feedback);
    Observation obs = observe_artifact(task, artifact, s, ctx.limits);
    emit(ctx, "observation",
         {{"round", s.round}, {"task", task.label()}, {"attempt", attempt}, {"verdict", to_string(obs.verdict)},
          {"issues", issues_json(obs.issues)}});
    if (obs.verdict == Verdict::ok) {
      ingest_success(task, artifact, s);
      task.status = TaskStatus::succeeded;
      set_stage(s, task.kind, StageState::done);
      break;
    }
    if (obs.verdict == Verdict::fail) {
      ingest_failure(task, artifact, s);
      task.status = TaskStatus::failed;
      if (task.kind != TaskKind::Decompose || s.stage(kStageDecompose) == StageState::not_run) {
        set_stage(s, task.kind, StageState::failed);
      }
      break;
    }
    emit(ctx, "retry", {{"round", s.round}, {"task", task.label()}, {"attempt", attempt}});
    feedback.clear();
    if (artifact.raw_response && !artifact.raw_response->empty()) {
      feedback.push_back({llm::Role::assistant, *artifact.raw_response});
      feedback.push_back({llm::Role::user, obs.feedback});
    }
  }
  emit(ctx, "task_finished", {{"round", s.round}, {"task", task.label()}, {"status", to_string(task.status)},
                              {"attempts", task.attempt}});
}

bool fatal_failure(const Task &task) {
  return task.status == TaskStatus::failed && (task.kind == TaskKind::ExtractApi || task.kind == TaskKind::ElicitHigh);
}

RunResult fail_result(Session s, const Task &task, RunContext &ctx) {
  Error err(ErrorCode::TaskBudgetExhausted,
            task.label() + " failed after " + std::to_string(task.attempt) + " attempt(s)");
  emit(ctx, "run_finished", {{"state", "failed"}, {"error", err.what()}});
  return RunResult{std::move(s), RunState::failed, err};
}

RunResult suspend(Session s, const std::string &checkpoint, RunContext &ctx) {
  s.suspended_at = checkpoint;
  s.stage_status[checkpoint] = StageState::suspended;
  emit(ctx, "suspended", {{"checkpoint", checkpoint}, {"round", s.round}});
  return RunResult{std::move(s), RunState::suspended,
                   Error(ErrorCode::SuspendedForReview, "waiting for review after stage " + checkpoint)};
}

} // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
  case Verdict::ok: return "ok";
  case Verdict::retry: return "retry";
  case Verdict::fail: return "fail";
  }
  return "ok";
}

Clock system_clock() {
  return [] {
    return format_utc(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count());
  };
}

Clock fixed_clock(std::string instant) {
  return [instant = std::move(instant)] { return instant; };
}

bool has_multiple_actions(const std::string &description) {
  static const std::set<std::string> kVerbs{
      "access", "acknowledge", "add", "analyze", "browse", "check", "compare", "configure", "connect", "create",
      "customize", "delete", "dive", "download", "edit", "explore", "export", "filter", "find", "generate",
      "get", "highlight", "identify", "import", "list", "manage", "monitor", "notify", "personalize", "receive",
      "refer", "register", "remove", "restrict", "review", "save", "search", "see", "select", "send",
      "set", "share", "sort", "submit", "subscribe", "tailor", "track", "update", "upload", "view"};
  const auto words = words_of(description);
  int actions = 0;
  bool phrase_start = true;
  for (const auto &w : words) {
    if (w == "," || w == "and" || w == "or" || w == "then") {
      phrase_start = true;
      continue;
    }
    if (phrase_start && w.size() > 2 && w.ends_with("ly")) {
      continue; // adverb before the verb
    }
    if (phrase_start && kVerbs.contains(w)) {
      ++actions;
    }
    phrase_start = false;
  }
  return actions > 1;
}

bool developer_perspective(const std::string &description) {
  static const std::vector<std::string> kCues{"implement", "refactor", "deploy", "database schema", "codebase",
                                              "unit test", "backend", "developer", "source code", "migrate"};
  std::string lower = description;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::any_of(kCues.begin(), kCues.end(), [&](const std::string &cue) { return lower.find(cue) != std::string::npos; });
}

std::vector<Task> plan_tasks(const Session &s) {
  if (s.spec_text.empty() || s.brief.empty() || s.actor().name.empty()) {
    throw Error(ErrorCode::SessionNotReady, "session needs a brief, an actor and an API spec");
  }
  std::vector<Task> plan;
  auto add = [&](TaskKind kind, std::optional<GoalId> parent = std::nullopt) {
    plan.push_back(Task{kind, std::move(parent), 1, TaskStatus::pending});
  };

  const bool extract_pending = !s.catalog && !attempted(s, TaskKind::ExtractApi);
  if (extract_pending) add(TaskKind::ExtractApi);

  const auto high = live_high_goals(s);
  const bool elicit_pending = s.goal_tree.high_goals().empty() && !attempted(s, TaskKind::ElicitHigh);
  if (elicit_pending) add(TaskKind::ElicitHigh);

  const bool unclassified = std::any_of(high.begin(), high.end(), [](const Goal &g) { return g.kind == goals::Kind::unknown; });
  if ((elicit_pending || unclassified) && !attempted(s, TaskKind::Critique)) add(TaskKind::Critique);

  bool decompose_pending = false;
  for (const auto &g : high) {
    if (!s.decomposed.contains(g.id) && !attempted(s, TaskKind::Decompose, g.id)) {
      add(TaskKind::Decompose, g.id);
      decompose_pending = true;
    }
  }

  if (!attempted(s, TaskKind::Map) && (s.catalog || extract_pending)) {
    const bool first_map = s.stage(kStageMap) == StageState::not_run;
    if (first_map || elicit_pending || decompose_pending || !goals_needing_map(s).empty()) {
      add(TaskKind::Map);
    }
  }
  return plan;
}

Artifact execute_task(const Task &task, Session &s, RunContext &ctx, const std::vector<llm::Message> &feedback) {
  if (task.kind == TaskKind::ExtractApi) {
    try {
      Artifact a;
      a.value = openapi::parse_spec(s.spec_text,
                                    s.spec_format == "yaml" ? openapi::Format::yaml : openapi::Format::json,
                                    "spec." + s.spec_format);
      return a;
    } catch (const Error &e) {
      return failure_artifact(e);
    }
  }

  prompts::StageContext context;
  context.brief = s.brief;
  context.actor = s.actor();
  context.tree = &s.goal_tree;
  context.model_id = ctx.model_id;
  prompts::Stage stage = prompts::Stage::P1;
  std::set<GoalId> requested;
  switch (task.kind) {
  case TaskKind::ElicitHigh: stage = prompts::Stage::P1; break;
  case TaskKind::Critique:
    stage = prompts::Stage::CRITIQUE;
    for (const auto &g : live_high_goals(s)) requested.insert(g.id);
    break;
  case TaskKind::Decompose:
    stage = prompts::Stage::P2;
    context.parent = task.parent;
    break;
  case TaskKind::Map:
    stage = prompts::Stage::P4;
    context.goals_to_map = goals_needing_map(s);
    for (const auto &g : context.goals_to_map) requested.insert(g.id);
    if (context.goals_to_map.empty()) {
      Artifact a;
      a.value = std::vector<prompts::MappingDraft>{};
      return a; // nothing to map, no provider call
    }
    if (s.catalog) context.endpoint_digest = openapi::endpoint_digest(*s.catalog);
    break;
  case TaskKind::ExtractApi: break;
  }

  std::vector<GoalId> requested_list(requested.begin(), requested.end());
  llm::ChatRequest request;
  try {
    request = prompts::render_stage(stage, context, ctx.templates);
  } catch (const Error &e) {
    auto a = failure_artifact(e);
    a.requested = requested_list;
    return a;
  }
  request.messages.insert(request.messages.end(), feedback.begin(), feedback.end());

  llm::ChatResponse response;
  try {
    response = call_provider(task, s, ctx, request);
  } catch (const Error &e) {
    auto a = failure_artifact(e);
    a.requested = requested_list;
    return a;
  }

  Artifact artifact;
  artifact.raw_response = response.content;
  artifact.requested = requested_list;
  try {
    if (response.finish == llm::Finish::truncated) {
      throw Error(ErrorCode::SchemaViolation, "response was truncated");
    }
    const std::optional<std::set<GoalId>> ids =
        (stage == prompts::Stage::P4 || stage == prompts::Stage::CRITIQUE) ? std::optional(requested) : std::nullopt;
    auto parsed = prompts::parse_stage_response(stage, response.content, ids);
    std::visit([&](auto &&v) { artifact.value = std::move(v); }, parsed);
  } catch (const Error &e) {
    auto a = failure_artifact(e, response.content);
    a.requested = requested_list;
    return a;
  }
  return artifact;
}

Observation observe_artifact(const Task &task, const Artifact &artifact, const Session &s, const Limits &limits) {
  Observation obs;
  auto block = [&](std::string code, std::string message, std::string subject = {}) {
    obs.issues.push_back({std::move(code), std::move(message), std::move(subject), false});
  };
  auto advise = [&](std::string code, std::string message, std::string subject = {}) {
    obs.issues.push_back({std::move(code), std::move(message), std::move(subject), true});
  };
  bool retryable = true;

  if (const auto *f = artifact.failure()) {
    std::string message = f->message;
    for (const auto &d : f->details) {
      if (message.find(d) == std::string::npos) message += "; " + d;
    }
    block(f->code, message);
    retryable = retryable_failure(*f) && task.kind != TaskKind::ExtractApi;
  } else {
    switch (task.kind) {
    case TaskKind::ExtractApi: break;
    case TaskKind::ElicitHigh: {
      const auto &drafts = std::get<std::vector<prompts::GoalDraft>>(artifact.value);
      if (drafts.empty()) block("NoGoals", "at least one high-level goal is required");
      break;
    }
    case TaskKind::Critique: {
      const auto &verdicts = std::get<std::vector<prompts::KindVerdict>>(artifact.value);
      std::set<GoalId> covered;
      for (const auto &v : verdicts) covered.insert(v.goal_id);
      for (const auto &id : artifact.requested) {
        if (!covered.contains(id)) block("MissingVerdict", "no verdict for goal " + id.str(), id.str());
      }
      break;
    }
    case TaskKind::Decompose: {
      const auto &drafts = std::get<std::vector<prompts::GoalDraft>>(artifact.value);
      if (drafts.empty()) advise("NoSubgoals", "the model proposed no sub-goals", task.parent ? task.parent->str() : "");
      for (const auto &d : drafts) {
        if (has_multiple_actions(d.description)) {
          advise("MultipleActions", "'" + d.name + "' may combine more than one actor action");
        }
        if (developer_perspective(d.description)) {
          advise("DeveloperPerspective", "'" + d.name + "' reads as a development task, not an actor goal");
        }
      }
      break;
    }
    case TaskKind::Map: {
      const auto &drafts = std::get<std::vector<prompts::MappingDraft>>(artifact.value);
      std::set<GoalId> mappable;
      for (const auto &g : s.goal_tree.mappable()) mappable.insert(g.id);
      std::set<GoalId> answered;
      for (const auto &d : drafts) {
        answered.insert(d.goal_id);
        if (!mappable.contains(d.goal_id)) {
          block("GoalNotMappable", "goal " + d.goal_id.str() + " is not a mappable low-level goal", d.goal_id.str());
          continue;
        }
        if (!d.mapped()) continue;
        auto validation = alignment::validate_call_plan(d, *s.catalog);
        for (auto &issue : validation.issues) {
          issue.message = "goal " + d.goal_id.str() + ": " + issue.message;
          obs.issues.push_back(issue);
        }
      }
      for (const auto &id : artifact.requested) {
        if (!answered.contains(id)) advise("GoalOmitted", "the answer does not mention goal " + id.str(), id.str());
      }
      break;
    }
    }
  }

  const bool blocking = std::any_of(obs.issues.begin(), obs.issues.end(), [](const Issue &i) { return !i.advisory; });
  if (!blocking) {
    obs.verdict = Verdict::ok;
  } else if (!retryable || task.attempt >= limits.inner_limit) {
    obs.verdict = Verdict::fail;
  } else {
    obs.verdict = Verdict::retry;
    obs.feedback = feedback_text(obs.issues);
  }
  return obs;
}

Reflection reflect_round(const Session &s, const Limits &limits) {
  for (const auto &t : s.round_tasks) {
    if (t.status == TaskStatus::pending || t.status == TaskStatus::running) {
      throw Error(ErrorCode::RoundIncomplete, t.label() + " has not finished");
    }
  }
  if (!plan_tasks(s).empty()) {
    throw Error(ErrorCode::RoundIncomplete, "round " + std::to_string(s.round) + " still has planned tasks");
  }
  Reflection r;
  r.round = std::max(s.round, 1);
  r.coverage = alignment::coverage_of(s);
  for (const auto &g : s.goal_tree.mappable()) {
    auto it = s.alignment.find(g.id);
    if (it == s.alignment.end() || it->second.source != MappingOutcome::Source::plan) {
      r.unmapped_goals.push_back(g.id);
    }
  }

  Session next = s;
  next.round_tasks.clear();
  const bool more_work = !plan_tasks(next).empty();
  const bool unchanged = !s.reflections.empty() && s.reflections.back().coverage == r.coverage;
  const bool degenerate = r.coverage.denominator == 0 || s.goal_tree.mappable().empty();
  const int reflections_so_far = static_cast<int>(s.reflections.size()) + 1;
  r.recommendation = (reflections_so_far >= limits.outer_limit || unchanged || degenerate || !more_work)
                         ? Recommendation::stop
                         : Recommendation::replan;
  return r;
}

bool review_complete(const Session &s, const std::string &checkpoint) {
  if (checkpoint == kStageElicit) {
    for (const auto &g : s.goal_tree.high_goals()) {
      if (g.status == goals::Status::proposed) return false;
    }
    return true;
  }
  if (checkpoint == kStageDecompose) {
    for (const auto &g : s.goal_tree.low_goals()) {
      if (g.status == goals::Status::proposed) return false;
    }
    return true;
  }
  return true;
}

RunResult run_pipeline(Session s, RunContext &ctx) {
  if (ctx.limits.inner_limit < 1 || ctx.limits.outer_limit < 1) {
    throw Error(ErrorCode::InvalidArgument, "limits must be at least 1");
  }
  plan_tasks(s); // readiness check
  s.provider_identity = ctx.provider.identity();
  s.template_version = ctx.templates.version();
  if (ctx.clock) s.last_run_at = ctx.clock();

  if (s.suspended_at) {
    const std::string checkpoint = *s.suspended_at;
    if (ctx.mode == Mode::interactive && !review_complete(s, checkpoint)) {
      return RunResult{std::move(s), RunState::suspended,
                       Error(ErrorCode::SuspendedForReview, "review of stage " + checkpoint + " is incomplete")};
    }
    s.suspended_at.reset();
    s.stage_status[checkpoint] = StageState::done;
    emit(ctx, "resumed", {{"checkpoint", checkpoint}});
  }

  if (s.finished) {
    // A finished session only runs again when new work exists and the round
    // budget allows it.
    Session probe = s;
    probe.round_tasks.clear();
    if (plan_tasks(probe).empty() || static_cast<int>(s.reflections.size()) >= ctx.limits.outer_limit) {
      emit(ctx, "run_finished", {{"state", "completed"}});
      return RunResult{std::move(s), RunState::completed, std::nullopt};
    }
    s.finished = false;
    ++s.round;
    s.round_tasks.clear();
    emit(ctx, "round_started", {{"round", s.round}});
  }
  if (s.round == 0) {
    s.round = 1;
    s.round_tasks.clear();
    emit(ctx, "round_started", {{"round", s.round}});
  }

  while (true) {
    auto pending = plan_tasks(s);
    if (pending.empty()) {
      const bool reflected = !s.reflections.empty() && s.reflections.back().round == s.round;
      if (!reflected) {
        auto reflection = reflect_round(s, ctx.limits);
        s.reflections.push_back(reflection);
        emit(ctx, "reflection", to_json(reflection));
        if (ctx.mode == Mode::interactive) {
          // no checkpoint after reflection; the map checkpoint precedes it
        }
        if (reflection.recommendation == Recommendation::stop) break;
      } else if (s.reflections.back().recommendation == Recommendation::stop) {
        break;
      }
      if (static_cast<int>(s.reflections.size()) >= ctx.limits.outer_limit) break;
      ++s.round;
      s.round_tasks.clear();
      emit(ctx, "round_started", {{"round", s.round}});
      if (plan_tasks(s).empty()) {
        --s.round; // nothing to do; keep the last real round number
        break;
      }
      continue;
    }

    Task task = pending.front();
    s.round_tasks.push_back(task);
    Task &current = s.round_tasks.back();
    run_task(current, s, ctx);
    const Task done = current;
    if (fatal_failure(done)) {
      return fail_result(std::move(s), done, ctx);
    }
    if (ctx.mode == Mode::interactive) {
      if (done.kind == TaskKind::ElicitHigh && done.status == TaskStatus::succeeded) {
        return suspend(std::move(s), kStageElicit, ctx);
      }
      if (done.kind == TaskKind::Decompose) {
        auto next = plan_tasks(s);
        if (next.empty() || next.front().kind != TaskKind::Decompose) {
          return suspend(std::move(s), kStageDecompose, ctx);
        }
      }
      if (done.kind == TaskKind::Map) {
        return suspend(std::move(s), kStageMap, ctx);
      }
    }
  }
  s.finished = true;
  emit(ctx, "run_finished", {{"state", "completed"}, {"coverage", ratio_to_json(alignment::coverage_of(s))}});
  return RunResult{std::move(s), RunState::completed, std::nullopt};
}

RunResult run_stage(Session s, const std::string &stage, RunContext &ctx) {
  plan_tasks(s);
  s.provider_identity = ctx.provider.identity();
  s.template_version = ctx.templates.version();
  if (ctx.clock) s.last_run_at = ctx.clock();

  std::vector<Task> tasks;
  if (stage == kStageExtract) {
    tasks.push_back({TaskKind::ExtractApi, std::nullopt});
  } else if (stage == kStageElicit) {
    if (!s.goal_tree.high_goals().empty()) {
      throw Error(ErrorCode::StageAlreadyDone, "high-level goals already elicited");
    }
    tasks.push_back({TaskKind::ElicitHigh, std::nullopt});
  } else if (stage == kStageCritique) {
    if (live_high_goals(s).empty()) throw Error(ErrorCode::SessionNotReady, "no high-level goals to critique");
    tasks.push_back({TaskKind::Critique, std::nullopt});
  } else if (stage == kStageDecompose) {
    for (const auto &g : live_high_goals(s)) {
      if (!s.decomposed.contains(g.id)) tasks.push_back({TaskKind::Decompose, g.id});
    }
  } else if (stage == kStageMap) {
    if (!s.catalog) throw Error(ErrorCode::SessionNotReady, "run the extract stage first");
    tasks.push_back({TaskKind::Map, std::nullopt});
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown stage '" + stage + "'");
  }
  if (s.round == 0) s.round = 1;
  for (auto &task : tasks) {
    run_task(task, s, ctx);
    if (fatal_failure(task)) {
      return fail_result(std::move(s), task, ctx);
    }
  }
  emit(ctx, "run_finished", {{"state", "completed"}, {"stage", stage}});
  return RunResult{std::move(s), RunState::completed, std::nullopt};
}

} // namespace seal::loop
