#include "seal/session_store.hpp"

#include "seal/alignment.hpp"
#include "seal/error.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace seal {

namespace fs = std::filesystem;

std::string_view to_string(TaskKind k) {
  switch (k) {
  case TaskKind::ExtractApi: return "ExtractApi";
  case TaskKind::ElicitHigh: return "ElicitHigh";
  case TaskKind::Critique: return "Critique";
  case TaskKind::Decompose: return "Decompose";
  case TaskKind::Map: return "Map";
  }
  return "ExtractApi";
}

std::string_view to_string(TaskStatus s) {
  switch (s) {
  case TaskStatus::pending: return "pending";
  case TaskStatus::running: return "running";
  case TaskStatus::succeeded: return "succeeded";
  case TaskStatus::failed: return "failed";
  }
  return "pending";
}

std::string_view to_string(StageState s) {
  switch (s) {
  case StageState::not_run: return "not_run";
  case StageState::suspended: return "suspended";
  case StageState::done: return "done";
  case StageState::failed: return "failed";
  }
  return "not_run";
}

std::string_view to_string(Recommendation r) { return r == Recommendation::stop ? "stop" : "replan"; }

std::string_view stage_of(TaskKind kind) {
  switch (kind) {
  case TaskKind::ExtractApi: return kStageExtract;
  case TaskKind::ElicitHigh: return kStageElicit;
  case TaskKind::Critique: return kStageCritique;
  case TaskKind::Decompose: return kStageDecompose;
  case TaskKind::Map: return kStageMap;
  }
  return kStageExtract;
}

std::string Task::label() const {
  std::string out(to_string(kind));
  if (parent) out += "(" + parent->str() + ")";
  return out;
}

StageState Session::stage(const std::string &name) const {
  auto it = stage_status.find(name);
  return it == stage_status.end() ? StageState::not_run : it->second;
}

Session new_session(std::string brief, goals::Actor actor, std::string spec_text, std::string spec_format,
                    std::optional<std::string> id) {
  if (actor.name.empty()) {
    throw Error(ErrorCode::InvalidArgument, "actor name must not be empty");
  }
  Session s;
  s.id = id ? *id : "s-" + sha256_hex(brief).substr(0, 10);
  s.brief = std::move(brief);
  s.spec_hash = sha256_hex(spec_text);
  s.spec_text = std::move(spec_text);
  s.spec_format = std::move(spec_format);
  s.goal_tree = goals::GoalTree(std::move(actor));
  for (const char *stage : {kStageExtract, kStageElicit, kStageCritique, kStageDecompose, kStageMap}) {
    s.stage_status[stage] = StageState::not_run;
  }
  return s;
}

namespace {

template <typename E, std::size_t N>
E enum_from(const std::string &text, const std::array<E, N> &values) {
  for (auto v : values) {
    if (to_string(v) == text) return v;
  }
  throw Error(ErrorCode::CorruptSession, "unknown enum value '" + text + "'");
}

const std::array<TaskKind, 5> kTaskKinds{TaskKind::ExtractApi, TaskKind::ElicitHigh, TaskKind::Critique,
                                         TaskKind::Decompose, TaskKind::Map};
const std::array<TaskStatus, 4> kTaskStatuses{TaskStatus::pending, TaskStatus::running, TaskStatus::succeeded,
                                              TaskStatus::failed};
const std::array<StageState, 4> kStageStates{StageState::not_run, StageState::suspended, StageState::done,
                                             StageState::failed};

json opt(const std::optional<std::string> &v) { return v ? json(*v) : json(nullptr); }
std::optional<std::string> opt_from(const json &j) {
  return j.is_null() ? std::nullopt : std::optional<std::string>(j.get<std::string>());
}

} // namespace

json to_json(const Task &t) {
  return json{{"kind", to_string(t.kind)},
              {"parent", t.parent ? json(t.parent->str()) : json(nullptr)},
              {"attempt", t.attempt},
              {"status", to_string(t.status)}};
}

json to_json(const Reflection &r) {
  json unmapped = json::array();
  for (const auto &id : r.unmapped_goals) unmapped.push_back(id.str());
  return json{{"round", r.round},
              {"coverage", ratio_to_json(r.coverage)},
              {"unmapped_goals", unmapped},
              {"recommendation", to_string(r.recommendation)}};
}

json to_json(const TranscriptEntry &e) {
  return json{{"sequence", e.sequence},
              {"round", e.round},
              {"task", e.task},
              {"attempt", e.attempt},
              {"at", e.at},
              {"request", llm::to_json(e.request)},
              {"response", e.response ? llm::to_json(*e.response) : json(nullptr)},
              {"error_code", opt(e.error_code)},
              {"error_message", opt(e.error_message)}};
}

TranscriptEntry transcript_entry_from_json(const json &j) {
  TranscriptEntry e;
  e.sequence = j.at("sequence").get<int>();
  e.round = j.at("round").get<int>();
  e.task = j.at("task").get<std::string>();
  e.attempt = j.at("attempt").get<int>();
  e.at = j.at("at").get<std::string>();
  e.request = llm::request_from_json(j.at("request"));
  if (!j.at("response").is_null()) e.response = llm::response_from_json(j["response"]);
  e.error_code = opt_from(j.at("error_code"));
  e.error_message = opt_from(j.at("error_message"));
  return e;
}

json session_to_json(const Session &s) {
  json decisions = json::array();
  for (const auto &d : s.decisions) {
    decisions.push_back({{"goal", d.goal.str()},
                         {"decision", goals::to_string(d.decision)},
                         {"reason", opt(d.reason)},
                         {"source", d.source}});
  }
  json alignment = json::array();
  for (const auto &[id, outcome] : s.alignment) {
    json o = to_json(outcome);
    o["goal_id"] = id.str();
    alignment.push_back(std::move(o));
  }
  json stages = json::object();
  for (const auto &[name, state] : s.stage_status) stages[name] = to_string(state);
  json tasks = json::array();
  for (const auto &t : s.round_tasks) tasks.push_back(to_json(t));
  json reflections = json::array();
  for (const auto &r : s.reflections) reflections.push_back(to_json(r));
  json decomposed = json::array();
  for (const auto &id : s.decomposed) decomposed.push_back(id.str());

  return json{{"format", "seal-session/1"},
              {"id", s.id},
              {"brief", s.brief},
              {"spec_format", s.spec_format},
              {"spec_hash", s.spec_hash},
              {"catalog", s.catalog ? openapi::to_json(*s.catalog) : json(nullptr)},
              {"goal_tree", goals::to_json(s.goal_tree)},
              {"transcript_count", s.transcript.size()},
              {"decisions", decisions},
              {"alignment", alignment},
              {"stage_status", stages},
              {"template_version", s.template_version},
              {"round", s.round},
              {"round_tasks", tasks},
              {"reflections", reflections},
              {"decomposed", decomposed},
              {"suspended_at", opt(s.suspended_at)},
              {"finished", s.finished},
              {"provider_identity", s.provider_identity},
              {"last_run_at", s.last_run_at}};
}

Session session_from_json(const json &j, std::string spec_text, std::vector<TranscriptEntry> transcript) {
  Session s;
  try {
    s.id = j.at("id").get<std::string>();
    s.brief = j.at("brief").get<std::string>();
    s.spec_format = j.at("spec_format").get<std::string>();
    s.spec_hash = j.at("spec_hash").get<std::string>();
    s.spec_text = std::move(spec_text);
    if (!j.at("catalog").is_null()) s.catalog = openapi::catalog_from_json(j["catalog"]);
    s.goal_tree = goals::tree_from_json(j.at("goal_tree"));
    s.transcript = std::move(transcript);
    for (const auto &d : j.at("decisions")) {
      auto decision = goals::parse_decision(d.at("decision").get<std::string>());
      if (!decision) throw Error(ErrorCode::CorruptSession, "bad decision record");
      s.decisions.push_back({goals::GoalId::parse(d.at("goal").get<std::string>()), *decision,
                             opt_from(d.at("reason")), d.at("source").get<std::string>()});
    }
    for (const auto &a : j.at("alignment")) {
      s.alignment.emplace(goals::GoalId::parse(a.at("goal_id").get<std::string>()), mapping_outcome_from_json(a));
    }
    for (const auto &[name, state] : j.at("stage_status").items()) {
      s.stage_status[name] = enum_from(state.get<std::string>(), kStageStates);
    }
    s.template_version = j.at("template_version").get<std::string>();
    s.round = j.at("round").get<int>();
    for (const auto &t : j.at("round_tasks")) {
      Task task;
      task.kind = enum_from(t.at("kind").get<std::string>(), kTaskKinds);
      if (!t.at("parent").is_null()) task.parent = goals::GoalId::parse(t["parent"].get<std::string>());
      task.attempt = t.at("attempt").get<int>();
      task.status = enum_from(t.at("status").get<std::string>(), kTaskStatuses);
      s.round_tasks.push_back(std::move(task));
    }
    for (const auto &r : j.at("reflections")) {
      Reflection ref;
      ref.round = r.at("round").get<int>();
      ref.coverage = ratio_from_json(r.at("coverage"));
      for (const auto &id : r.at("unmapped_goals")) ref.unmapped_goals.push_back(goals::GoalId::parse(id.get<std::string>()));
      ref.recommendation = r.at("recommendation").get<std::string>() == "stop" ? Recommendation::stop : Recommendation::replan;
      s.reflections.push_back(std::move(ref));
    }
    for (const auto &id : j.at("decomposed")) s.decomposed.insert(goals::GoalId::parse(id.get<std::string>()));
    s.suspended_at = opt_from(j.at("suspended_at"));
    s.finished = j.at("finished").get<bool>();
    s.provider_identity = j.at("provider_identity").get<std::string>();
    s.last_run_at = j.at("last_run_at").get<std::string>();
  } catch (const json::exception &e) {
    throw Error(ErrorCode::CorruptSession, std::string("session.json: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::CorruptSession) throw;
    throw Error(ErrorCode::CorruptSession, e.message());
  }
  return s;
}

namespace store {

namespace {

std::string transcript_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu.json", index);
  return buf;
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string());
  }
}

int open_lock(const fs::path &file) {
  int fd = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::IoFailure, "cannot open lock file " + file.string());
  }
  if (::flock(fd, LOCK_EX) != 0) {
    ::close(fd);
    throw Error(ErrorCode::IoFailure, "cannot lock " + file.string());
  }
  return fd;
}

} // namespace

SessionLock::SessionLock(const fs::path &dir) : fd_(open_lock(dir / ".lock")) {}

SessionLock::~SessionLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

json to_json(const Event &e) {
  return json{{"sequence", e.sequence}, {"timestamp", e.timestamp}, {"kind", e.kind}, {"payload", e.payload}};
}

std::vector<fs::path> save_session(const Session &session, const fs::path &dir) {
  ensure_dir(dir);
  ensure_dir(dir / "transcript");
  std::vector<fs::path> written;
  auto put = [&](const fs::path &path, const std::string &content) {
    write_file_atomic(path, content);
    written.push_back(path);
  };

  put(dir / ("spec." + session.spec_format), session.spec_text);
  for (std::size_t i = 0; i < session.transcript.size(); ++i) {
    put(dir / "transcript" / transcript_name(i + 1), canonical_dump(to_json(session.transcript[i])));
  }
  if (session.stage(kStageMap) != StageState::not_run) {
    const auto report = alignment::build_report(session);
    put(dir / "report.json", canonical_dump(alignment::report_to_json(report)));
    put(dir / "report.txt", alignment::render_report_text(report, session));
  }
  if (!fs::exists(dir / "events.log")) {
    put(dir / "events.log", "");
  }
  put(dir / "session.json", canonical_dump(session_to_json(session)));
  return written;
}

bool is_session_dir(const fs::path &dir) { return fs::is_regular_file(dir / "session.json"); }

Session load_session(const fs::path &dir) {
  if (!is_session_dir(dir)) {
    throw Error(ErrorCode::NotASession, dir.string() + " holds no session.json");
  }
  json j;
  try {
    j = json::parse(read_file(dir / "session.json"));
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::CorruptSession, std::string("session.json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("spec_format") || !j.contains("spec_hash") || !j.contains("transcript_count")) {
    throw Error(ErrorCode::CorruptSession, "session.json lacks required fields");
  }
  const auto format = j["spec_format"].get<std::string>();
  if (format != "json" && format != "yaml") {
    throw Error(ErrorCode::CorruptSession, "unknown spec format " + format);
  }
  std::string spec;
  try {
    spec = read_file(dir / ("spec." + format));
  } catch (const Error &) {
    throw Error(ErrorCode::CorruptSession, "stored spec copy is missing");
  }
  if (sha256_hex(spec) != j["spec_hash"].get<std::string>()) {
    throw Error(ErrorCode::CorruptSession, "stored spec does not match spec_hash");
  }
  std::vector<TranscriptEntry> transcript;
  const auto count = j["transcript_count"].get<std::size_t>();
  for (std::size_t i = 1; i <= count; ++i) {
    try {
      transcript.push_back(transcript_entry_from_json(json::parse(read_file(dir / "transcript" / transcript_name(i)))));
    } catch (const Error &) {
      throw Error(ErrorCode::CorruptSession, "transcript entry " + std::to_string(i) + " missing");
    } catch (const json::exception &e) {
      throw Error(ErrorCode::CorruptSession, "transcript entry " + std::to_string(i) + ": " + e.what());
    }
    if (transcript.back().sequence != static_cast<int>(i)) {
      throw Error(ErrorCode::CorruptSession, "transcript order broken at " + std::to_string(i));
    }
  }
  return session_from_json(j, std::move(spec), std::move(transcript));
}

std::int64_t append_event(const fs::path &dir, const std::string &kind, const json &payload) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::IoFailure, "no session directory " + dir.string());
  }
  const int fd = open_lock(dir / ".events.lock");
  struct Unlock {
    int fd;
    ~Unlock() {
      ::flock(fd, LOCK_UN);
      ::close(fd);
    }
  } unlock{fd};

  std::int64_t last = 0;
  {
    std::ifstream in(dir / "events.log");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        last = json::parse(line).at("sequence").get<std::int64_t>();
      } catch (const json::exception &) {
        throw Error(ErrorCode::IoFailure, "events.log has a malformed line");
      }
    }
  }
  Event e;
  e.sequence = last + 1;
  e.timestamp = format_utc(std::chrono::duration_cast<std::chrono::seconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count());
  e.kind = kind;
  e.payload = payload;
  std::ofstream out(dir / "events.log", std::ios::app | std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot append to events.log");
  }
  out << to_json(e).dump() << '\n';
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot append to events.log");
  }
  return e.sequence;
}

std::vector<Event> read_events(const fs::path &dir, std::int64_t after) {
  std::vector<Event> events;
  std::ifstream in(dir / "events.log");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &) {
      continue; // torn trailing line from a crashed writer
    }
    Event e{j.value("sequence", std::int64_t{0}), j.value("timestamp", std::string{}), j.value("kind", std::string{}),
            j.value("payload", json::object())};
    if (e.sequence > after) events.push_back(std::move(e));
  }
  return events;
}

} // namespace store
} // namespace seal
