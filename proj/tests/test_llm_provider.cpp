#include "support.hpp"

#include "seal/error.hpp"
#include "seal/llm_provider.hpp"

#include "httplib.h"

#include <catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace seal;
using namespace seal::llm;

namespace {

ChatRequest request_for(StageTag tag, const std::string &text = "hello") {
  ChatRequest r;
  r.stage_tag = tag;
  r.messages = {{Role::system, "sys"}, {Role::user, text}};
  return r;
}

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

/// Local chat-completions endpoint with a scripted status sequence.
struct FakeServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<int> statuses;
  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;
  std::string finish_reason = "stop";

  explicit FakeServer(std::vector<int> s) : statuses(std::move(s)) {
    server.Post("/v1/chat/completions", [this](const httplib::Request &req, httplib::Response &res) {
      const int n = hits++;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      const int status = statuses[std::min<std::size_t>(static_cast<std::size_t>(n), statuses.size() - 1)];
      res.status = status;
      if (status == 200) {
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "reply " + std::to_string(n)}}},
                                           {"finish_reason", finish_reason}}}},
                             {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 3}}}}
                            .dump(),
                        "application/json");
      } else {
        res.set_content("{\"error\": \"nope\"}", "application/json");
      }
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FakeServer() {
    server.stop();
    thread.join();
  }
  LiveConfig config() const {
    return LiveConfig{"http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "test-model", "k-123"};
  }
};

} // namespace

TEST_CASE("replay returns entries by stage and ordinal", "[llm]") {
  ReplayFixture f{{{StageTag::P1, 1, "first"}, {StageTag::P2, 1, "p2 a"}, {StageTag::P2, 2, "p2 b"}}};
  ReplayProvider p(f, "replay:test");
  CHECK(p.complete(request_for(StageTag::P2)).content == "p2 a");
  CHECK(p.complete(request_for(StageTag::P1)).content == "first");
  CHECK(p.complete(request_for(StageTag::P2)).content == "p2 b");
  CHECK(code_of([&] { p.complete(request_for(StageTag::P2)); }) == ErrorCode::FixtureMiss);
  CHECK(p.calls(StageTag::P2) == 3);
  CHECK(code_of([&] { p.complete(request_for(StageTag::P4)); }) == ErrorCode::FixtureMiss);
  CHECK(p.identity() == "replay:test");
}

TEST_CASE("fixture loading", "[llm]") {
  const auto f = load_replay_fixture(R"({"comment": "x", "entries": [{"stage": "P4", "ordinal": 2, "content": "c", "note": "ignored"}]})");
  REQUIRE(f.entries.size() == 1);
  CHECK(f.entries[0].stage == StageTag::P4);
  CHECK(f.entries[0].ordinal == 2);
  CHECK(load_replay_fixture(dump_replay_fixture(f)) == f);

  CHECK(code_of([] { load_replay_fixture("not json"); }) == ErrorCode::MalformedFixture);
  CHECK(code_of([] { load_replay_fixture(R"({"entries": [{"stage": "P9", "ordinal": 1, "content": ""}]})"); }) ==
        ErrorCode::MalformedFixture);
  CHECK(code_of([] { load_replay_fixture(R"({"entries": [{"stage": "P1", "content": ""}]})"); }) == ErrorCode::MalformedFixture);
  CHECK(code_of([] {
          load_replay_fixture(R"({"entries": [{"stage": "P1", "ordinal": 1, "content": "a"}, {"stage": "P1", "ordinal": 1, "content": "b"}]})");
        }) == ErrorCode::DuplicateEntry);
}

TEST_CASE("CatWatch fixture identity is content addressed", "[llm]") {
  auto a = make_replay_provider(test::catwatch_dir() / "replay.json");
  auto b = make_replay_provider(test::catwatch_dir() / "replay.json");
  CHECK(a->identity() == b->identity());
  CHECK(a->identity().rfind("replay:", 0) == 0);
  CHECK(a->identity().size() == 7 + 12);
}

TEST_CASE("request validation", "[llm]") {
  auto r = request_for(StageTag::P1);
  CHECK_NOTHROW(validate(r));
  auto empty = r;
  empty.messages.clear();
  CHECK(code_of([&] { validate(empty); }) == ErrorCode::InvalidRequest);
  auto hot = r;
  hot.temperature = 3.0;
  CHECK(code_of([&] { validate(hot); }) == ErrorCode::InvalidRequest);
  auto tokens = r;
  tokens.max_tokens = 0;
  CHECK(code_of([&] { validate(tokens); }) == ErrorCode::InvalidRequest);
  CHECK(request_from_json(to_json(r)) == r);
}

TEST_CASE("live provider sends an OpenAI-style body", "[llm]") {
  FakeServer server({200});
  std::vector<std::chrono::milliseconds> sleeps;
  LiveProvider p(server.config(), make_http_transport(std::chrono::seconds(5)),
                 [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  const auto r = p.complete(request_for(StageTag::P1, "what are the goals"));
  CHECK(r.content == "reply 0");
  CHECK(r.usage.prompt_tokens == 11);
  CHECK(sleeps.empty());
  const auto body = json::parse(server.last_body);
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == Catch::Approx(0.2));
  CHECK(body["max_tokens"] == 2048);
  CHECK(body["messages"][1]["content"] == "what are the goals");
  CHECK(server.last_auth == "Bearer k-123");
  CHECK(p.identity() == "live:test-model");
}

TEST_CASE("live provider retries transport failures with backoff", "[llm]") {
  FakeServer server({503, 502, 200});
  std::vector<std::chrono::milliseconds> sleeps;
  LiveProvider p(server.config(), make_http_transport(std::chrono::seconds(5)),
                 [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  CHECK(p.complete(request_for(StageTag::P2)).content == "reply 2");
  CHECK(server.hits == 3);
  REQUIRE(sleeps.size() == 2);
  CHECK(sleeps[0] == std::chrono::milliseconds(1000));
  CHECK(sleeps[1] == std::chrono::milliseconds(4000));
}

TEST_CASE("live provider gives up after two retries", "[llm]") {
  FakeServer server({500});
  LiveProvider p(server.config(), make_http_transport(std::chrono::seconds(5)), [](auto) {});
  CHECK(code_of([&] { p.complete(request_for(StageTag::P2)); }) == ErrorCode::TransportFailure);
  CHECK(server.hits == 3);
}

TEST_CASE("live provider does not retry auth failures", "[llm]") {
  for (int status : {401, 403}) {
    FakeServer server({status});
    LiveProvider p(server.config(), make_http_transport(std::chrono::seconds(5)), [](auto) {});
    CHECK(code_of([&] { p.complete(request_for(StageTag::P1)); }) == ErrorCode::AuthFailure);
    CHECK(server.hits == 1);
  }
  FakeServer bad({400});
  LiveProvider p(bad.config(), make_http_transport(std::chrono::seconds(5)), [](auto) {});
  CHECK(code_of([&] { p.complete(request_for(StageTag::P1)); }) == ErrorCode::InvalidRequest);
  CHECK(bad.hits == 1);
}

TEST_CASE("live provider reports unreachable endpoints", "[llm]") {
  int port = 0;
  {
    FakeServer probe({200});
    port = probe.port; // closed once probe is gone
  }
  LiveConfig cfg{"http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "m", ""};
  int sleeps = 0;
  LiveProvider p(cfg, make_http_transport(std::chrono::seconds(2)), [&](auto) { ++sleeps; });
  CHECK(code_of([&] { p.complete(request_for(StageTag::P1)); }) == ErrorCode::TransportFailure);
  CHECK(sleeps == 2);
}

TEST_CASE("truncated completions are flagged", "[llm]") {
  FakeServer server({200});
  server.finish_reason = "length";
  LiveProvider p(server.config(), make_http_transport(std::chrono::seconds(5)), [](auto) {});
  CHECK(p.complete(request_for(StageTag::P1)).finish == Finish::truncated);
}

TEST_CASE("live config reads a file and lets the environment win", "[llm]") {
  test::TempDir dir;
  write_file_atomic(dir / "cfg.json", R"({"url": "http://file/v1", "model": "file-model", "key": "file-key", "max_tokens": 99})");
  ::unsetenv("SEAL_LLM_URL");
  ::unsetenv("SEAL_LLM_MODEL");
  ::unsetenv("SEAL_LLM_KEY");
  auto cfg = live_config_from(dir / "cfg.json");
  CHECK(cfg.url == "http://file/v1");
  CHECK(cfg.model == "file-model");
  CHECK(cfg.max_tokens == 99);
  ::setenv("SEAL_LLM_MODEL", "env-model", 1);
  cfg = live_config_from(dir / "cfg.json");
  CHECK(cfg.model == "env-model");
  CHECK(cfg.key == "file-key");
  ::unsetenv("SEAL_LLM_MODEL");
}

TEST_CASE("recording provider produces a replayable fixture", "[llm]") {
  ReplayFixture f{{{StageTag::P1, 1, "one"}, {StageTag::P2, 1, "two"}, {StageTag::P2, 2, "three"}}};
  auto inner = std::make_shared<ReplayProvider>(f);
  RecordingProvider rec(inner);
  rec.complete(request_for(StageTag::P1));
  rec.complete(request_for(StageTag::P2));
  rec.complete(request_for(StageTag::P2));
  ReplayProvider again(rec.fixture());
  CHECK(again.complete(request_for(StageTag::P2)).content == "two");
  CHECK(again.complete(request_for(StageTag::P2)).content == "three");
  CHECK(again.complete(request_for(StageTag::P1)).content == "one");
}
