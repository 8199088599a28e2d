#include "seal/http_service.hpp"

#include "seal/alignment.hpp"
#include "seal/session_store.hpp"

#include "httplib.h"

#include <condition_variable>
#include <mutex>
#include <set>
#include <thread>

namespace seal::http {

namespace fs = std::filesystem;

int status_for(ErrorCode code) {
  switch (code) {
  case ErrorCode::UnknownSession:
  case ErrorCode::UnknownGoal:
  case ErrorCode::NotASession:
    return 404;
  case ErrorCode::StageBusy:
  case ErrorCode::MapNotRun:
  case ErrorCode::StageAlreadyDone:
  case ErrorCode::SessionNotReady:
    return 409;
  case ErrorCode::IoFailure:
  case ErrorCode::CorruptSession:
    return 500;
  default:
    return 422;
  }
}

namespace {

void send_json(httplib::Response &res, int status, const json &body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response &res, const Error &e) {
  const int status = status_for(e.code());
  json body{{"status", status}, {"code", to_string(e.code())}, {"message", e.message()}};
  if (!e.details().empty()) body["details"] = e.details();
  send_json(res, status, body);
}

json parse_body(const httplib::Request &req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

constexpr const char *kPlaceholderIndex = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>seal</title></head>
<body><h1>seal</h1><p>No review UI assets installed. The JSON API is under <code>/api/sessions</code>.</p></body></html>
)";

} // namespace

struct Service::Impl {
  ServiceOptions options;
  prompts::TemplateSet templates;
  httplib::Server server;
  std::thread listener;

  mutable std::mutex mutex;
  std::condition_variable idle;
  std::set<std::string> active;                    // sessions with a run in flight
  std::map<std::string, std::unique_ptr<std::mutex>> writers; // per-session mutation lock
  std::vector<std::thread> runs;

  explicit Impl(ServiceOptions opts)
      : options(std::move(opts)), templates(options.templates ? *options.templates : prompts::TemplateSet::builtin()) {
    if (!options.clock) options.clock = loop::system_clock();
    routes();
  }

  fs::path dir_of(const std::string &id) const {
    if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) {
      throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
    }
    fs::path dir = options.session_root / id;
    if (!store::is_session_dir(dir)) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
    return dir;
  }

  std::mutex &writer(const std::string &id) {
    std::lock_guard lock(mutex);
    auto &slot = writers[id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
  }

  bool is_active(const std::string &id) const {
    std::lock_guard lock(mutex);
    return active.contains(id);
  }

  json summary(const Session &s) const {
    json stages = json::object();
    for (const auto &[name, state] : s.stage_status) stages[name] = to_string(state);
    return {{"id", s.id},
            {"actor", s.actor().name},
            {"round", s.round},
            {"finished", s.finished},
            {"suspended_at", s.suspended_at ? json(*s.suspended_at) : json(nullptr)},
            {"stage_status", stages},
            {"goals", s.goal_tree.goals().size()},
            {"running", is_active(s.id)}};
  }

  template <typename F> void guarded(httplib::Response &res, F &&f) {
    try {
      f();
    } catch (const Error &e) {
      send_error(res, e);
    } catch (const std::exception &e) {
      send_error(res, Error(ErrorCode::IoFailure, e.what()));
    }
  }

  void routes() {
    server.Get("/api/sessions", [this](const httplib::Request &, httplib::Response &res) {
      guarded(res, [&] {
        json list = json::array();
        if (fs::is_directory(options.session_root)) {
          std::vector<fs::path> dirs;
          for (const auto &entry : fs::directory_iterator(options.session_root)) {
            if (store::is_session_dir(entry.path())) dirs.push_back(entry.path());
          }
          std::sort(dirs.begin(), dirs.end());
          for (const auto &d : dirs) {
            try {
              list.push_back(summary(store::load_session(d)));
            } catch (const Error &e) {
              list.push_back({{"id", d.filename().string()}, {"error", to_string(e.code())}});
            }
          }
        }
        send_json(res, 200, list);
      });
    });

    server.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        auto s = store::load_session(dir_of(id));
        json body = session_to_json(s);
        body["running"] = is_active(id);
        send_json(res, 200, body);
      });
    });

    server.Get(R"(/api/sessions/([^/]+)/goals)", [this](const httplib::Request &req, httplib::Response &res) {
      guarded(res, [&] {
        auto s = store::load_session(dir_of(req.matches[1]));
        send_json(res, 200, goals::to_json(s.goal_tree));
      });
    });

    server.Post(R"(/api/sessions/([^/]+)/goals/([^/]+)/decision)",
                [this](const httplib::Request &req, httplib::Response &res) {
                  guarded(res, [&] { decide(req.matches[1], req.matches[2], parse_body(req), res); });
                });

    server.Post(R"(/api/sessions/([^/]+)/run)", [this](const httplib::Request &req, httplib::Response &res) {
      guarded(res, [&] { start_run(req.matches[1], parse_body(req), res); });
    });

    server.Get(R"(/api/sessions/([^/]+)/report)", [this](const httplib::Request &req, httplib::Response &res) {
      guarded(res, [&] {
        auto s = store::load_session(dir_of(req.matches[1]));
        auto report = alignment::build_report(s);
        send_json(res, 200, alignment::report_to_json(report));
      });
    });

    server.Get(R"(/api/sessions/([^/]+)/events)", [this](const httplib::Request &req, httplib::Response &res) {
      guarded(res, [&] {
        const auto dir = dir_of(req.matches[1]);
        std::int64_t after = 0;
        if (req.has_param("after")) {
          try {
            after = std::stoll(req.get_param_value("after"));
          } catch (const std::exception &) {
            throw Error(ErrorCode::InvalidArgument, "after must be an integer");
          }
        }
        json events = json::array();
        for (const auto &e : store::read_events(dir, after)) events.push_back(store::to_json(e));
        send_json(res, 200, json{{"running", is_active(req.matches[1])}, {"events", events}});
      });
    });

    if (options.ui_dir && fs::is_directory(*options.ui_dir)) {
      server.set_mount_point("/", options.ui_dir->string());
    } else {
      server.Get("/", [](const httplib::Request &, httplib::Response &res) {
        res.set_content(kPlaceholderIndex, "text/html");
      });
    }
  }

  void decide(const std::string &id, const std::string &gid, const json &body, httplib::Response &res) {
    const auto dir = dir_of(id);
    if (is_active(id)) throw Error(ErrorCode::StageBusy, "a run is active on session '" + id + "'");
    const auto goal = goals::GoalId::try_parse(gid);
    if (!goal) throw Error(ErrorCode::UnknownGoal, "no goal '" + gid + "'");
    if (!body.contains("decision") || !body["decision"].is_string()) {
      throw Error(ErrorCode::InvalidArgument, "decision must be \"accept\" or \"discard\"");
    }
    const auto decision = goals::parse_decision(body["decision"].get<std::string>());
    if (!decision) throw Error(ErrorCode::InvalidArgument, "decision must be \"accept\" or \"discard\"");
    std::optional<std::string> reason;
    if (body.contains("reason") && body["reason"].is_string()) reason = body["reason"].get<std::string>();

    std::lock_guard lock(writer(id));
    store::SessionLock file_lock(dir);
    auto s = store::load_session(dir);
    s.goal_tree.apply(*goal, *decision, reason);
    s.decisions.push_back(DecisionRecord{*goal, *decision, reason, "http"});
    store::save_session(s, dir);
    store::append_event(dir, "decision",
                        {{"goal", goal->str()}, {"decision", goals::to_string(*decision)},
                         {"reason", reason ? json(*reason) : json(nullptr)}});
    send_json(res, 200, goals::to_json(*s.goal_tree.find(*goal)));
  }

  void start_run(const std::string &id, const json &body, httplib::Response &res) {
    const auto dir = dir_of(id);
    std::string stage = "full";
    if (body.contains("stage")) {
      if (!body["stage"].is_string()) throw Error(ErrorCode::InvalidArgument, "stage must be a string");
      stage = body["stage"].get<std::string>();
    }
    static const std::set<std::string> kStages{"full", kStageExtract, kStageElicit, kStageCritique, kStageDecompose,
                                               kStageMap};
    if (!kStages.contains(stage)) throw Error(ErrorCode::InvalidArgument, "unknown stage '" + stage + "'");
    loop::Limits limits = options.limits;
    if (body.contains("limits") && body["limits"].is_object()) {
      const auto &l = body["limits"];
      if (l.contains("inner_limit")) limits.inner_limit = l["inner_limit"].get<int>();
      if (l.contains("outer_limit")) limits.outer_limit = l["outer_limit"].get<int>();
      if (limits.inner_limit < 1 || limits.outer_limit < 1) {
        throw Error(ErrorCode::InvalidArgument, "limits must be at least 1");
      }
    }
    loop::Mode mode = loop::Mode::autonomous;
    if (body.value("mode", std::string("autonomous")) == "interactive") mode = loop::Mode::interactive;
    if (!options.provider_factory) throw Error(ErrorCode::SessionNotReady, "service has no model provider");

    {
      std::lock_guard lock(mutex);
      if (active.contains(id)) throw Error(ErrorCode::StageBusy, "a run is already active on session '" + id + "'");
      active.insert(id);
      runs.emplace_back([this, id, dir, stage, limits, mode] { execute(id, dir, stage, limits, mode); });
    }
    send_json(res, 202, json{{"session", id}, {"stage", stage}, {"accepted", true}});
  }

  void execute(const std::string &id, const fs::path &dir, const std::string &stage, loop::Limits limits,
               loop::Mode mode) {
    try {
      std::lock_guard lock(writer(id));
      store::SessionLock file_lock(dir);
      auto provider = options.provider_factory();
      loop::RunContext ctx{*provider,
                           templates,
                           limits,
                           mode,
                           [dir](const std::string &kind, const json &payload) { store::append_event(dir, kind, payload); },
                           options.clock,
                           options.model_id};
      auto s = store::load_session(dir);
      auto result = stage == "full" ? loop::run_pipeline(std::move(s), ctx) : loop::run_stage(std::move(s), stage, ctx);
      store::save_session(result.session, dir);
    } catch (const Error &e) {
      try {
        store::append_event(dir, "run_error", {{"code", to_string(e.code())}, {"message", e.message()}});
      } catch (...) {
      }
    } catch (const std::exception &e) {
      try {
        store::append_event(dir, "run_error", {{"code", "IoFailure"}, {"message", e.what()}});
      } catch (...) {
      }
    }
    std::lock_guard lock(mutex);
    active.erase(id);
    idle.notify_all();
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::start(const std::string &host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::serve(const std::string &host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void Service::wait_idle() {
  std::unique_lock lock(impl_->mutex);
  impl_->idle.wait(lock, [this] { return impl_->active.empty(); });
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  std::vector<std::thread> runs;
  {
    std::lock_guard lock(impl_->mutex);
    runs.swap(impl_->runs);
  }
  for (auto &t : runs) {
    if (t.joinable()) t.join();
  }
}

bool Service::running(const std::string &session_id) const { return impl_->is_active(session_id); }

} // namespace seal::http
