#include "support.hpp"

#include "seal/error.hpp"
#include "seal/goal_model.hpp"

#include <catch_amalgamated.hpp>

using namespace seal;
using namespace seal::goals;

namespace {

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

std::vector<Draft> drafts(int n, const std::string &prefix = "g") {
  std::vector<Draft> out;
  for (int i = 1; i <= n; ++i) out.push_back({prefix + std::to_string(i), "desc " + std::to_string(i)});
  return out;
}

GoalTree table_tree() {
  GoalTree t(Actor{"Owner of a GitHub account", ""});
  auto highs = t.ingest(std::nullopt, drafts(6), 1);
  for (const auto &h : highs) t.ingest(h, drafts(2, "sub"), 1);
  return t;
}

} // namespace

TEST_CASE("goal ids parse, print and order numerically", "[goals]") {
  CHECK(GoalId::parse("1.2").str() == "1.2");
  CHECK(GoalId::parse("1.9") < GoalId::parse("1.10"));
  CHECK(GoalId::parse("2") < GoalId::parse("2.1"));
  CHECK(GoalId::parse("3.1").parent() == GoalId::parse("3"));
  CHECK_FALSE(GoalId::parse("3").parent());
  CHECK(GoalId::parse("3").child(4).str() == "3.4");
  for (const char *bad : {"", "0", "1.", ".1", "a", "1.-2", "1..2"}) CHECK_FALSE(GoalId::try_parse(bad));
}

TEST_CASE("ingest assigns sequential ids", "[goals]") {
  GoalTree t(Actor{"actor", ""});
  auto ids = t.ingest(std::nullopt, drafts(6), 1);
  REQUIRE(ids.size() == 6);
  CHECK(ids.front().str() == "1");
  CHECK(ids.back().str() == "6");
  auto subs = t.ingest(GoalId::parse("1"), drafts(2), 1);
  CHECK(subs[0].str() == "1.1");
  CHECK(subs[1].str() == "1.2");
  CHECK(t.find(subs[0])->level == Level::low);
  CHECK(t.find(subs[0])->kind == Kind::unknown);
  CHECK(t.find(subs[0])->status == Status::proposed);

  const auto before = t;
  CHECK(t.ingest(GoalId::parse("2"), {}, 1).empty());
  CHECK(t == before);
}

TEST_CASE("ingest errors", "[goals]") {
  auto t = table_tree();
  CHECK(code_of([&] { t.ingest(GoalId::parse("9"), drafts(1), 1); }) == ErrorCode::UnknownParent);
  CHECK(code_of([&] { t.ingest(GoalId::parse("1.1"), drafts(1), 1); }) == ErrorCode::LowLevelParent);
}

TEST_CASE("discarding a high-level goal discards its proposed children", "[goals]") {
  auto t = table_tree();
  t.apply(GoalId::parse("4"), Decision::discard, std::string("non-functional"));
  for (const char *id : {"4", "4.1", "4.2"}) CHECK(t.find(GoalId::parse(id))->status == Status::discarded);
  CHECK(t.find(GoalId::parse("4.1"))->discard_reason == "parent discarded");
  CHECK(t.find(GoalId::parse("4"))->discard_reason == "non-functional");
}

TEST_CASE("accepting touches only the goal", "[goals]") {
  auto t = table_tree();
  auto before = t;
  t.apply(GoalId::parse("1.1"), Decision::accept, std::nullopt);
  CHECK(t.find(GoalId::parse("1.1"))->status == Status::accepted);
  for (const auto &[id, g] : t.goals()) {
    if (id.str() != "1.1") CHECK(g == *before.find(id));
  }
}

TEST_CASE("decision errors", "[goals]") {
  auto t = table_tree();
  CHECK(code_of([&] { t.apply(GoalId::parse("9.9"), Decision::accept, std::nullopt); }) == ErrorCode::UnknownGoal);
  CHECK(code_of([&] { t.apply(GoalId::parse("1"), Decision::discard, std::nullopt); }) == ErrorCode::MissingReason);
  CHECK(code_of([&] { t.apply(GoalId::parse("1"), Decision::discard, std::string("")); }) == ErrorCode::MissingReason);
  t.apply(GoalId::parse("2"), Decision::discard, std::string("dup"));
  CHECK(code_of([&] { t.apply(GoalId::parse("2"), Decision::accept, std::nullopt); }) == ErrorCode::AlreadyDiscarded);
  CHECK(code_of([&] { t.set_kind(GoalId::parse("7"), Kind::functional); }) == ErrorCode::UnknownGoal);
}

TEST_CASE("mappable goals", "[goals]") {
  CHECK(GoalTree{}.mappable().empty());
  GoalTree highs_only(Actor{"a", ""});
  highs_only.ingest(std::nullopt, drafts(3), 1);
  CHECK(highs_only.mappable().empty());

  auto t = table_tree();
  for (int h = 1; h <= 6; ++h) {
    const auto kind = (h == 4 || h == 5) ? Kind::non_functional : Kind::functional;
    t.set_kind(GoalId({h}), kind);
    for (const auto &c : t.children_of(GoalId({h}))) t.set_kind(c.id, kind);
  }
  t.apply(GoalId::parse("4"), Decision::discard, std::string("security is a quality"));
  const auto m = t.mappable();
  std::vector<std::string> ids;
  for (const auto &g : m) ids.push_back(g.id.str());
  CHECK(ids == std::vector<std::string>{"1.1", "1.2", "2.1", "2.2", "3.1", "3.2", "6.1", "6.2"});
  CHECK(mappable_goals(t) == m);
}

TEST_CASE("json round trip and restore checks", "[goals]") {
  auto t = table_tree();
  t.set_kind(GoalId::parse("1"), Kind::functional);
  t.apply(GoalId::parse("3"), Decision::discard, std::string("later"));
  CHECK(tree_from_json(to_json(t)) == t);

  auto j = to_json(t);
  auto broken = j;
  for (auto &g : broken["goals"]) {
    if (g["id"] == "3") g.erase("discard_reason");
  }
  CHECK(code_of([&] { tree_from_json(broken); }) == ErrorCode::CorruptSession);
}

TEST_CASE("property: ingest never reuses or reorders ids", "[goals]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    GoalTree t(Actor{"a", ""});
    for (int step = 0; step < 12; ++step) {
      const auto before = t.goals();
      std::optional<GoalId> parent;
      auto highs = t.high_goals();
      if (!highs.empty() && std::bernoulli_distribution(0.6)(rng)) {
        parent = highs[std::uniform_int_distribution<std::size_t>(0, highs.size() - 1)(rng)].id;
      }
      const int n = std::uniform_int_distribution<int>(0, 3)(rng);
      auto ids = t.ingest(parent, drafts(n), 1);
      for (const auto &[id, g] : before) REQUIRE(t.goals().at(id) == g);
      for (const auto &id : ids) {
        REQUIRE_FALSE(before.contains(id));
        for (const auto &[old, g] : before) {
          if (old.parent() == id.parent()) REQUIRE(old < id);
        }
      }
      REQUIRE(std::is_sorted(ids.begin(), ids.end()));
    }
  }
}

TEST_CASE("property: decisions are idempotent", "[goals]") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    auto t = table_tree();
    std::vector<GoalId> all;
    for (const auto &[id, g] : t.goals()) all.push_back(id);
    for (int k = 0; k < 5; ++k) {
      const auto id = all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
      const auto decision = std::bernoulli_distribution(0.5)(rng) ? Decision::accept : Decision::discard;
      const std::optional<std::string> reason = decision == Decision::discard ? std::optional<std::string>("r") : std::nullopt;
      GoalTree once, twice;
      try {
        once = apply_decision(t, id, decision, reason);
      } catch (const Error &e) {
        REQUIRE(e.code() == ErrorCode::AlreadyDiscarded);
        continue;
      }
      twice = apply_decision(once, id, decision, reason);
      REQUIRE(once == twice);
      t = once;
    }
    for (const auto &g : t.mappable()) {
      REQUIRE(g.status != Status::discarded);
      REQUIRE(g.kind != Kind::non_functional);
      REQUIRE(g.level == Level::low);
    }
  }
}
