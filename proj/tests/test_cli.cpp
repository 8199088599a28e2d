#include "support.hpp"

#include "seal/cli.hpp"
#include "seal/session_store.hpp"

#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace seal;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation seal_cmd(const std::vector<std::string> &args, const std::string &input = "", bool tty = false) {
  std::istringstream in(input);
  std::ostringstream out, err;
  cli::Console console{in, out, err, tty};
  Invocation r;
  r.code = cli::run_command(args, console);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string cw(const std::string &file) { return (test::catwatch_dir() / file).string(); }

Invocation init_catwatch(const std::filesystem::path &dir) {
  return seal_cmd({"init", "--brief", cw("brief.txt"), "--actor", "Owner of a GitHub account", "--spec",
                   cw("swagger.json"), "--session", dir.string()});
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("init then replay run", "[cli]") {
  test::TempDir tmp;
  const auto dir = tmp / "catwatch";
  auto init = init_catwatch(dir);
  REQUIRE(init.code == cli::kOk);
  CHECK(store::load_session(dir).id == "catwatch");
  CHECK(init_catwatch(dir).code == cli::kUsage); // already a session

  auto early = seal_cmd({"report", "--session", dir.string()});
  CHECK(early.code == cli::kPipelineFailure);
  CHECK(early.err.find("MapNotRun") != std::string::npos);

  auto run = seal_cmd({"run", "--session", dir.string(), "--provider", "replay", "--fixture", cw("replay.json")});
  INFO(run.err);
  REQUIRE(run.code == cli::kOk);
  CHECK(run.out.find("6 high-level, 12 low-level") != std::string::npos);
  CHECK(run.out.find("coverage 7/12") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "report.txt"));

  auto text = seal_cmd({"report", "--session", dir.string()});
  CHECK(text.code == cli::kOk);
  CHECK(text.out.find("7/12") != std::string::npos);
  auto js = seal_cmd({"report", "--session", dir.string(), "--format", "json"});
  CHECK(js.code == cli::kOk);
  CHECK(json::parse(js.out)["coverage"]["numerator"] == 7);
  CHECK(js.out == slurp(dir / "report.json"));
}

TEST_CASE("session root derives the id from the brief", "[cli]") {
  test::TempDir tmp;
  auto r = seal_cmd({"init", "--brief", cw("brief.txt"), "--actor", "Owner", "--spec", cw("swagger.json"),
                     "--session-root", tmp.path().string()});
  REQUIRE(r.code == cli::kOk);
  const std::filesystem::path made(r.out.substr(0, r.out.find('\n')));
  CHECK(made.filename().string().rfind("s-", 0) == 0);
  CHECK(made.filename().string().size() == 12);
  CHECK(store::is_session_dir(made));

  auto named = seal_cmd({"init", "--brief", cw("brief.txt"), "--actor", "Owner", "--spec", cw("swagger.json"),
                         "--session-root", tmp.path().string(), "--id", "mine"});
  REQUIRE(named.code == cli::kOk);
  CHECK(store::is_session_dir(tmp / "mine"));
}

TEST_CASE("usage errors exit 1", "[cli]") {
  CHECK(seal_cmd({}).code == cli::kUsage);
  CHECK(seal_cmd({"frobnicate"}).code == cli::kUsage);
  auto r = seal_cmd({"run", "--session", "x", "--bogus"});
  CHECK(r.code == cli::kUsage);
  CHECK_FALSE(r.err.empty());
  CHECK(seal_cmd({"init", "--actor", "a"}).code == cli::kUsage);
  CHECK(seal_cmd({"report", "--session", "x", "--format", "xml"}).code == cli::kUsage);
  CHECK(seal_cmd({"run", "--session", "x", "--max-inner", "0"}).code == cli::kUsage);
  CHECK(seal_cmd({"--help"}).code == cli::kOk);
}

TEST_CASE("run on a missing session fails", "[cli]") {
  test::TempDir tmp;
  auto r = seal_cmd({"run", "--session", (tmp / "none").string(), "--provider", "replay", "--fixture", cw("replay.json")});
  CHECK(r.code == cli::kPipelineFailure);
  CHECK(r.err.find("error: ") == 0);
}

TEST_CASE("interactive run without a terminal suspends", "[cli]") {
  test::TempDir tmp;
  const auto dir = tmp / "cw";
  REQUIRE(init_catwatch(dir).code == cli::kOk);
  const std::vector<std::string> run{"run", "--session", dir.string(), "--provider", "replay", "--fixture",
                                     cw("replay.json"), "--interactive"};
  auto first = seal_cmd(run);
  CHECK(first.code == cli::kSuspended);
  CHECK(first.err.find("after stage elicit") != std::string::npos);
  CHECK(store::load_session(dir).suspended_at == std::optional<std::string>("elicit"));

  auto review = seal_cmd({"review", "--session", dir.string(), "--accept-all"});
  CHECK(review.code == cli::kOk);
  CHECK(review.out.find("6 decision(s)") != std::string::npos);
}

TEST_CASE("interactive run on a terminal reviews in place", "[cli]") {
  test::TempDir tmp;
  const auto dir = tmp / "cw";
  REQUIRE(init_catwatch(dir).code == cli::kOk);
  // discard goal 5, accept the rest; then accept every sub-goal
  std::string answers = "a\na\na\na\nd\nnot an actor goal\na\n";
  for (int i = 0; i < 12; ++i) answers += "a\n";
  auto r = seal_cmd({"run", "--session", dir.string(), "--provider", "replay", "--fixture", cw("replay.json"),
                     "--interactive"},
                    answers, true);
  INFO(r.out << r.err);
  CHECK(r.code == cli::kOk);
  const auto s = store::load_session(dir);
  CHECK(s.goal_tree.find(goals::GoalId::parse("5"))->status == goals::Status::discarded);
  CHECK(s.finished);
  CHECK(s.decisions.size() == 16);
}

TEST_CASE("decide records one decision", "[cli]") {
  test::TempDir tmp;
  const auto dir = tmp / "cw";
  REQUIRE(init_catwatch(dir).code == cli::kOk);
  REQUIRE(seal_cmd({"run", "--session", dir.string(), "--provider", "replay", "--fixture", cw("replay.json")}).code ==
          cli::kOk);
  auto no_reason = seal_cmd({"decide", "--session", dir.string(), "--goal", "1.1", "--decision", "discard"});
  CHECK(no_reason.code == cli::kPipelineFailure);
  CHECK(no_reason.err.find("MissingReason") != std::string::npos);
  auto ok = seal_cmd({"decide", "--session", dir.string(), "--goal", "1.1", "--decision", "discard", "--reason", "dup"});
  CHECK(ok.code == cli::kOk);
  const auto s = store::load_session(dir);
  CHECK(s.goal_tree.find(goals::GoalId::parse("1.1"))->status == goals::Status::discarded);
  REQUIRE(s.decisions.size() == 1);
  CHECK(s.decisions[0].source == "cli");
  auto unknown = seal_cmd({"decide", "--session", dir.string(), "--goal", "9.9", "--decision", "accept"});
  CHECK(unknown.code == cli::kPipelineFailure);
  CHECK(unknown.err.find("UnknownGoal") != std::string::npos);
}
