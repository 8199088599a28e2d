#include "seal/cli.hpp"

#include "seal/agent_loop.hpp"
#include "seal/alignment.hpp"
#include "seal/http_service.hpp"
#include "seal/session_store.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace seal::cli {

namespace fs = std::filesystem;

namespace {

struct ProviderOptions {
  std::string kind = "live";
  std::string fixture;
  std::string config;
  std::string model_id;
};

std::unique_ptr<llm::Provider> make_provider(const ProviderOptions &opts) {
  if (opts.kind == "replay") {
    if (opts.fixture.empty()) throw Error(ErrorCode::InvalidArgument, "--provider replay needs --fixture FILE");
    return llm::make_replay_provider(opts.fixture);
  }
  std::optional<fs::path> config;
  if (!opts.config.empty()) config = opts.config;
  auto live = llm::live_config_from(config);
  if (live.url.empty() || live.model.empty()) {
    throw Error(ErrorCode::InvalidArgument, "live provider needs SEAL_LLM_URL and SEAL_LLM_MODEL (or --config)");
  }
  return std::make_unique<llm::LiveProvider>(live, llm::make_http_transport());
}

loop::Clock clock_for(const ProviderOptions &opts) {
  return opts.kind == "replay" ? loop::fixed_clock() : loop::system_clock();
}

std::string detect_format(const fs::path &spec) {
  auto ext = spec.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return (ext == ".yaml" || ext == ".yml") ? "yaml" : "json";
}

void print_summary(const Session &s, std::ostream &out) {
  out << "session " << s.id << ": " << s.goal_tree.high_goals().size() << " high-level, "
      << s.goal_tree.low_goals().size() << " low-level goals";
  if (s.stage(kStageMap) != StageState::not_run) {
    const auto c = alignment::coverage_of(s);
    out << ", coverage " << c.numerator << "/" << c.denominator;
  }
  out << "\n";
}

bool prompt_line(Console &console, const std::string &question, std::string &answer) {
  console.out << question << std::flush;
  if (!std::getline(console.in, answer)) return false;
  while (!answer.empty() && (answer.back() == '\r' || answer.back() == ' ')) answer.pop_back();
  return true;
}

/// Walks proposed goals one at a time. Returns the number of decisions made.
int terminal_review(Session &s, Console &console, bool accept_all) {
  int made = 0;
  std::vector<goals::Goal> queue = s.goal_tree.high_goals();
  auto low = s.goal_tree.low_goals();
  queue.insert(queue.end(), low.begin(), low.end());
  for (const auto &snapshot : queue) {
    const auto *g = s.goal_tree.find(snapshot.id);
    if (!g || g->status != goals::Status::proposed) continue;
    if (accept_all) {
      s.goal_tree.apply(g->id, goals::Decision::accept, std::nullopt);
      s.decisions.push_back({g->id, goals::Decision::accept, std::nullopt, "cli"});
      ++made;
      continue;
    }
    console.out << "\n" << g->id.str() << ". " << g->name << " [" << goals::to_string(g->kind) << "]\n  "
                << g->description << "\n";
    std::string answer;
    while (true) {
      if (!prompt_line(console, "[a]ccept, [d]iscard, [s]kip, [q]uit? ", answer)) return made;
      if (answer == "q") return made;
      if (answer == "s" || answer.empty()) break;
      if (answer == "a") {
        s.goal_tree.apply(g->id, goals::Decision::accept, std::nullopt);
        s.decisions.push_back({g->id, goals::Decision::accept, std::nullopt, "cli"});
        ++made;
        break;
      }
      if (answer == "d") {
        std::string reason;
        while (reason.empty()) {
          if (!prompt_line(console, "reason: ", reason)) return made;
        }
        s.goal_tree.apply(g->id, goals::Decision::discard, reason);
        s.decisions.push_back({g->id, goals::Decision::discard, reason, "cli"});
        ++made;
        break;
      }
    }
  }
  return made;
}

fs::path resolve_session_dir(const std::string &session, const std::string &root, const std::string &id) {
  if (!session.empty()) return session;
  if (root.empty()) throw Error(ErrorCode::InvalidArgument, "--session or --session-root is required");
  return fs::path(root) / id;
}

int report_error(const Error &e, Console &console) {
  console.err << "error: " << to_string(e.code()) << ": " << e.message() << "\n";
  for (const auto &d : e.details()) console.err << "  " << d << "\n";
  return e.code() == ErrorCode::InvalidArgument ? kUsage : kPipelineFailure;
}

} // namespace

int run_command(const std::vector<std::string> &args, Console &console) {
  CLI::App app{"Goal elicitation and API alignment", "seal"};
  app.require_subcommand(1);

  // init
  auto *init = app.add_subcommand("init", "Create a session from a brief, an actor and an API spec");
  std::string brief_file, actor, actor_description, spec_file, session_dir, session_root, session_id;
  init->add_option("--brief", brief_file, "Product description file")->required()->check(CLI::ExistingFile);
  init->add_option("--actor", actor, "Stakeholder the goals are written for")->required();
  init->add_option("--actor-description", actor_description, "Longer stakeholder description");
  init->add_option("--spec", spec_file, "OpenAPI or Swagger document (JSON or YAML)")->required()->check(CLI::ExistingFile);
  auto *init_dir = init->add_option("--session", session_dir, "Session directory");
  init->add_option("--session-root", session_root, "Parent directory for sessions")->excludes(init_dir);
  init->add_option("--id", session_id, "Session id under --session-root (default: derived from the brief)");

  // run
  auto *run = app.add_subcommand("run", "Run one stage or the full loop");
  std::string stage;
  ProviderOptions provider;
  std::string record_file, templates_dir;
  int max_inner = 3, max_outer = 2;
  bool interactive = false;
  run->add_option("--session", session_dir, "Session directory")->required();
  run->add_option("--stage", stage, "Run a single stage")
      ->check(CLI::IsMember({kStageExtract, kStageElicit, kStageCritique, kStageDecompose, kStageMap}));
  run->add_option("--provider", provider.kind, "Model provider")->check(CLI::IsMember({"live", "replay"}));
  run->add_option("--fixture", provider.fixture, "Replay fixture")->check(CLI::ExistingFile);
  run->add_option("--config", provider.config, "Live provider config file")->check(CLI::ExistingFile);
  run->add_option("--record", record_file, "Write every model response to this fixture file");
  run->add_option("--templates", templates_dir, "Directory with prompt templates")->check(CLI::ExistingDirectory);
  run->add_option("--max-inner", max_inner, "Attempts per task")->check(CLI::PositiveNumber);
  run->add_option("--max-outer", max_outer, "Refinement rounds")->check(CLI::PositiveNumber);
  auto *interactive_flag = run->add_flag("--interactive", interactive, "Stop for review after elicit, decompose and map");
  run->add_flag("--non-interactive{false}", interactive, "Never wait for review")->excludes(interactive_flag);

  // review
  auto *review = app.add_subcommand("review", "Accept or discard proposed goals in the terminal");
  bool accept_all = false;
  review->add_option("--session", session_dir, "Session directory")->required();
  review->add_flag("--accept-all", accept_all, "Accept every proposed goal without prompting");

  // decide
  auto *decide = app.add_subcommand("decide", "Record one review decision");
  std::string goal_text, decision_text, reason;
  decide->add_option("--session", session_dir, "Session directory")->required();
  decide->add_option("--goal", goal_text, "Goal id, e.g. 1.2")->required();
  decide->add_option("--decision", decision_text, "accept or discard")->required()->check(CLI::IsMember({"accept", "discard"}));
  decide->add_option("--reason", reason, "Required for discard");

  // report
  auto *report = app.add_subcommand("report", "Print the alignment report");
  std::string format = "text";
  report->add_option("--session", session_dir, "Session directory")->required();
  report->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}));

  // serve
  auto *serve = app.add_subcommand("serve", "Serve sessions over HTTP for the review UI");
  int port = 8080;
  std::string host = "127.0.0.1", ui_dir;
  serve->add_option("--session-root", session_root, "Directory of sessions")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--ui", ui_dir, "Static UI assets served at /");
  serve->add_option("--provider", provider.kind, "Model provider")->check(CLI::IsMember({"live", "replay"}));
  serve->add_option("--fixture", provider.fixture, "Replay fixture")->check(CLI::ExistingFile);
  serve->add_option("--config", provider.config, "Live provider config file")->check(CLI::ExistingFile);

  std::vector<const char *> argv{"seal"};
  for (const auto &a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &) {
    console.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp &) {
    console.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError &e) {
    console.err << "error: " << e.what() << "\n\n";
    const auto *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    console.err << sub->help();
    return kUsage;
  }

  try {
    if (init->parsed()) {
      std::optional<std::string> id;
      if (!session_dir.empty()) id = fs::path(session_dir).lexically_normal().filename().string();
      else if (!session_id.empty()) id = session_id;
      auto brief = read_file(brief_file);
      auto s = new_session(brief, goals::Actor{actor, actor_description}, read_file(spec_file),
                           detect_format(spec_file), id);
      const fs::path target = resolve_session_dir(session_dir, session_root, s.id);
      if (store::is_session_dir(target)) throw Error(ErrorCode::InvalidArgument, target.string() + " is already a session");
      fs::create_directories(target);
      store::save_session(s, target);
      store::append_event(target, "initialized", {{"session", s.id}});
      console.out << target.string() << "\n";
      return kOk;
    }

    if (run->parsed()) {
      const fs::path dir = session_dir;
      store::SessionLock lock(dir);
      auto s = store::load_session(dir);
      auto base = make_provider(provider);
      std::shared_ptr<llm::Provider> inner(std::move(base));
      std::shared_ptr<llm::RecordingProvider> recorder;
      llm::Provider *active = inner.get();
      if (!record_file.empty()) {
        recorder = std::make_shared<llm::RecordingProvider>(inner);
        active = recorder.get();
      }
      auto templates = templates_dir.empty() ? prompts::TemplateSet::builtin() : prompts::TemplateSet::load_dir(templates_dir);
      loop::RunContext ctx{*active,
                           templates,
                           loop::Limits{max_inner, max_outer},
                           interactive ? loop::Mode::interactive : loop::Mode::autonomous,
                           [&](const std::string &kind, const json &payload) {
                             store::append_event(dir, kind, payload);
                             if (kind == "task_finished") {
                               console.out << "  " << payload.value("task", "") << ": "
                                           << payload.value("status", "") << "\n";
                             }
                           },
                           clock_for(provider),
                           {}};

      auto result = stage.empty() ? loop::run_pipeline(std::move(s), ctx) : loop::run_stage(std::move(s), stage, ctx);
      while (result.state == loop::RunState::suspended && console.tty) {
        store::save_session(result.session, dir);
        console.out << "review required after stage " << result.session.suspended_at.value_or("?") << "\n";
        terminal_review(result.session, console, false);
        if (!loop::review_complete(result.session, *result.session.suspended_at)) break;
        result = loop::run_pipeline(std::move(result.session), ctx);
      }
      store::save_session(result.session, dir);
      if (recorder) write_file_atomic(record_file, llm::dump_replay_fixture(recorder->fixture()));
      print_summary(result.session, console.out);

      if (result.state == loop::RunState::failed) {
        console.err << "error: " << to_string(result.error->code()) << ": " << result.error->message() << "\n";
        return kPipelineFailure;
      }
      if (result.state == loop::RunState::suspended) {
        console.err << "suspended for review after stage " << result.session.suspended_at.value_or("?")
                    << "; record decisions with `seal review` and run again\n";
        return kSuspended;
      }
      if (result.session.stage(kStageMap) != StageState::not_run) {
        console.out << "report: " << (dir / "report.json").string() << "\n";
      }
      return kOk;
    }

    if (review->parsed()) {
      const fs::path dir = session_dir;
      store::SessionLock lock(dir);
      auto s = store::load_session(dir);
      const int made = terminal_review(s, console, accept_all);
      store::save_session(s, dir);
      if (made > 0) store::append_event(dir, "review", {{"decisions", made}});
      console.out << made << " decision(s) recorded\n";
      return kOk;
    }

    if (decide->parsed()) {
      const fs::path dir = session_dir;
      store::SessionLock lock(dir);
      auto s = store::load_session(dir);
      const auto goal = goals::GoalId::try_parse(goal_text);
      if (!goal) throw Error(ErrorCode::UnknownGoal, "no goal '" + goal_text + "'");
      const auto decision = *goals::parse_decision(decision_text);
      std::optional<std::string> why;
      if (!reason.empty()) why = reason;
      s.goal_tree.apply(*goal, decision, why);
      s.decisions.push_back({*goal, decision, why, "cli"});
      store::save_session(s, dir);
      store::append_event(dir, "decision", {{"goal", goal->str()}, {"decision", decision_text},
                                            {"reason", why ? json(*why) : json(nullptr)}});
      return kOk;
    }

    if (report->parsed()) {
      auto s = store::load_session(session_dir);
      auto r = alignment::build_report(s);
      if (format == "json") {
        console.out << canonical_dump(alignment::report_to_json(r));
      } else {
        console.out << alignment::render_report_text(r, s);
      }
      return kOk;
    }

    if (serve->parsed()) {
      http::ServiceOptions options;
      options.session_root = session_root;
      if (!ui_dir.empty()) options.ui_dir = ui_dir;
      if (provider.kind == "replay" || !provider.config.empty() || std::getenv("SEAL_LLM_URL")) {
        make_provider(provider); // fail fast on bad provider settings
        options.provider_factory = [provider] { return make_provider(provider); };
      }
      options.clock = clock_for(provider);
      http::Service service(std::move(options));
      console.out << "serving " << session_root << " on http://" << host << ":" << port << "\n" << std::flush;
      service.serve(host, port);
      return kOk;
    }
  } catch (const Error &e) {
    return report_error(e, console);
  } catch (const std::exception &e) {
    console.err << "error: " << e.what() << "\n";
    return kPipelineFailure;
  }
  return kUsage;
}

} // namespace seal::cli
