#include "support.hpp"

#include "seal/alignment.hpp"
#include "seal/error.hpp"
#include "seal/openapi_catalog.hpp"

#include <catch_amalgamated.hpp>

using namespace seal;
using namespace seal::alignment;
using goals::GoalId;
using openapi::Verb;

namespace {

openapi::EndpointCatalog catwatch() { return openapi::parse_spec(test::catwatch_text("swagger.json")); }

CallStep step(Verb v, std::string path, std::map<std::string, Binding> bindings = {}) {
  return CallStep{{v, std::move(path)}, std::move(bindings)};
}

bool has_issue(const PlanValidation &v, const std::string &code, bool advisory) {
  return std::any_of(v.issues.begin(), v.issues.end(),
                     [&](const Issue &i) { return i.code == code && i.advisory == advisory; });
}

} // namespace

TEST_CASE("valid plans pass and missing required parameters are auto-bound", "[alignment]") {
  const auto c = catwatch();
  auto v = validate_call_plan({step(Verb::GET, "/projects"), step(Verb::GET, "/projects/{projectId}",
                                                                  {{"projectId", Binding::make_output_of(1, "id")}})},
                              c);
  REQUIRE(v.plan);
  CHECK(v.issues.empty());

  v = validate_call_plan({step(Verb::GET, "/projects/{projectId}")}, c);
  REQUIRE(v.plan);
  CHECK(has_issue(v, "AutoBound", true));
  CHECK(v.plan->steps[0].bindings.at("projectId").source == Binding::Source::actor_input);
}

TEST_CASE("invalid plans are rejected with named issues", "[alignment]") {
  const auto c = catwatch();
  auto v = validate_call_plan({step(Verb::GET, "/foo")}, c);
  CHECK_FALSE(v.plan);
  REQUIRE(has_issue(v, "EndpointUnknown", false));
  CHECK(v.issues[0].subject == "GET /foo");

  v = validate_call_plan({step(Verb::DELETE, "/projects")}, c); // path exists, verb does not
  CHECK_FALSE(v.plan);

  v = validate_call_plan({step(Verb::GET, "/projects", {{"color", Binding::make_literal("red")}})}, c);
  CHECK(has_issue(v, "UnknownParameter", false));

  v = validate_call_plan({step(Verb::GET, "/projects", {{"limit", Binding::make_output_of(1, "n")}})}, c);
  CHECK(has_issue(v, "ForwardReference", false));
  v = validate_call_plan({step(Verb::GET, "/projects"), step(Verb::GET, "/projects", {{"limit", Binding::make_output_of(3, "n")}})}, c);
  CHECK(has_issue(v, "ForwardReference", false));

  v = validate_call_plan(std::vector<CallStep>{}, c);
  CHECK(has_issue(v, "EmptyPlan", false));
}

TEST_CASE("report before map is an error", "[alignment]") {
  auto s = test::catwatch_session();
  try {
    build_report(s);
    FAIL("expected MapNotRun");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::MapNotRun);
  }
}

TEST_CASE("report buckets and coverage", "[alignment]") {
  auto s = test::catwatch_session();
  s.catalog = catwatch();
  s.goal_tree.ingest(std::nullopt, {{"A", "a"}, {"B", "b"}}, 1);
  s.goal_tree.ingest(GoalId::parse("1"), {{"a1", ""}, {"a2", ""}, {"a3", ""}, {"a4", ""}}, 1);
  s.goal_tree.ingest(GoalId::parse("2"), {{"b1", ""}}, 1);
  s.goal_tree.set_kind(GoalId::parse("2.1"), goals::Kind::non_functional);
  s.goal_tree.apply(GoalId::parse("1.4"), goals::Decision::discard, std::string("duplicate"));
  s.stage_status[kStageMap] = StageState::done;
  MappingOutcome plan;
  plan.plan = CallPlan{{step(Verb::GET, "/projects")}};
  s.alignment[GoalId::parse("1.1")] = plan;
  s.alignment[GoalId::parse("1.2")] = MappingOutcome{MappingOutcome::Source::model_unmappable, std::nullopt, "no endpoint", 1};
  s.alignment[GoalId::parse("1.3")] = MappingOutcome{MappingOutcome::Source::validation_failed, std::nullopt, kValidationFailedReason, 1};

  const auto r = build_report(s);
  CHECK(r.coverage == Ratio{1, 5});
  CHECK(r.mapped_goals == std::vector<GoalId>{GoalId::parse("1.1")});
  CHECK(r.unmapped_goals == std::vector<GoalId>{GoalId::parse("1.2"), GoalId::parse("1.3")});
  CHECK(r.excluded_discarded == std::vector<GoalId>{GoalId::parse("1.4")});
  CHECK(r.excluded_non_functional == std::vector<GoalId>{GoalId::parse("2.1")});
  REQUIRE(r.entries.size() == 5);
  CHECK(std::get<Unmappable>(r.entries[1].outcome).reason == "no endpoint");
  CHECK(std::get<Unmappable>(r.entries[2].outcome).reason == "mapping validation failed");
  CHECK(std::get<Unmappable>(r.entries[3].outcome).reason == "excluded: discarded (duplicate)");
  CHECK(std::get<Unmappable>(r.entries[4].outcome).reason == "excluded: non-functional");
  CHECK(r.unused_endpoints.size() == 23);
  CHECK(test::trichotomy_violations(s).empty());

  const auto j = report_to_json(r);
  CHECK(j["coverage"]["numerator"] == 1);
  CHECK(j["coverage"]["denominator"] == 5);
  const auto text = render_report_text(r, s);
  for (const char *section : {"\nMapped\n", "\nUnmappable\n", "\nAPI Gaps\n"}) CHECK(text.find(section) != std::string::npos);
}

TEST_CASE("property: report buckets partition the low-level goals", "[alignment]") {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    auto s = test::random_mappable_session(rng);
    s.stage_status[kStageMap] = StageState::done;
    for (const auto &g : s.goal_tree.low_goals()) {
      const int roll = std::uniform_int_distribution<int>(0, 4)(rng);
      if (roll == 0) continue;
      MappingOutcome o;
      o.source = static_cast<MappingOutcome::Source>(roll - 1);
      if (o.source == MappingOutcome::Source::plan) {
        const auto &ep = s.catalog->endpoints.front();
        o.plan = validate_call_plan({step(ep.verb, ep.path)}, *s.catalog).plan;
      } else {
        o.reason = "r";
      }
      s.alignment[g.id] = o;
    }
    const auto problems = test::trichotomy_violations(s);
    INFO((problems.empty() ? std::string() : problems.front()));
    REQUIRE(problems.empty());
  }
}
