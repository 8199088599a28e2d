#include "support.hpp"

#include "seal/util.hpp"

namespace seal::test {

namespace fs = std::filesystem;

fs::path source_dir() { return SEAL_SOURCE_DIR; }
fs::path catwatch_dir() { return source_dir() / "fixtures" / "catwatch"; }

std::string catwatch_text(const std::string &file) { return read_file(catwatch_dir() / file); }

Session catwatch_session(const std::string &id) {
  auto actor = catwatch_text("actor.txt");
  while (!actor.empty() && (actor.back() == '\n' || actor.back() == '\r')) actor.pop_back();
  return new_session(catwatch_text("brief.txt"), goals::Actor{actor, ""}, catwatch_text("swagger.json"), "json", id);
}

llm::ReplayFixture fixture_file(const fs::path &path) { return llm::load_replay_fixture(read_file(path)); }

TempDir::TempDir() {
  static std::mt19937_64 rng{std::random_device{}()};
  path_ = fs::temp_directory_path() / ("seal-test-" + std::to_string(rng()));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<json> EventLog::of(const std::string &kind) const {
  std::vector<json> out;
  for (const auto &[k, payload] : events) {
    if (k == kind) out.push_back(payload);
  }
  return out;
}

std::string fenced(const json &payload) { return "Answer:\n\n```json\n" + payload.dump(2) + "\n```\n"; }

std::string all_text(const llm::ChatRequest &request) {
  std::string text;
  for (const auto &m : request.messages) text += m.content + "\n";
  return text;
}

} // namespace seal::test

#include "seal/alignment.hpp"
#include "seal/openapi_catalog.hpp"
#include "seal/prompt_pipeline.hpp"

#include <yaml-cpp/yaml.h>

#include <map>
#include <set>

namespace seal::test {

namespace {

int uniform(std::mt19937_64 &rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(std::mt19937_64 &rng, double p) { return std::bernoulli_distribution(p)(rng); }

template <typename T> const T &pick(std::mt19937_64 &rng, const std::vector<T> &items) {
  return items[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(items.size()) - 1))];
}

} // namespace

std::string random_swagger(std::mt19937_64 &rng) {
  static const std::vector<std::string> kVerbs{"get", "post", "put", "delete", "patch", "head", "options"};
  static const std::vector<std::string> kTypes{"string", "integer", "boolean", "number"};
  json paths = json::object();
  const int resources = uniform(rng, 1, 6);
  for (int r = 0; r < resources; ++r) {
    std::string path = "/r" + std::to_string(r);
    const bool templated = chance(rng, 0.4);
    if (templated) path += "/{id" + std::to_string(r) + "}";
    json item = json::object();
    std::vector<std::string> verbs = kVerbs;
    std::shuffle(verbs.begin(), verbs.end(), rng);
    const int nverbs = uniform(rng, 1, 3);
    for (int v = 0; v < nverbs; ++v) {
      json params = json::array();
      if (templated) {
        params.push_back({{"name", "id" + std::to_string(r)}, {"in", "path"}, {"required", true}, {"type", "integer"}});
      }
      const int nparams = uniform(rng, 0, 3);
      for (int p = 0; p < nparams; ++p) {
        params.push_back({{"name", "q" + std::to_string(p)},
                          {"in", chance(rng, 0.8) ? "query" : "header"},
                          {"required", chance(rng, 0.3)},
                          {"type", pick(rng, kTypes)}});
      }
      item[verbs[static_cast<std::size_t>(v)]] = {
          {"summary", "op " + std::to_string(r) + "." + std::to_string(v)},
          {"parameters", params},
          {"responses", {{"200", {{"description", "OK"}}}}}};
    }
    paths[path] = item;
  }
  return json{{"swagger", "2.0"}, {"info", {{"title", "random"}, {"version", "1"}}}, {"paths", paths}}.dump(2);
}

Session random_mappable_session(std::mt19937_64 &rng) {
  auto s = new_session("random brief " + std::to_string(rng()), goals::Actor{"User", ""}, random_swagger(rng), "json",
                       "random");
  s.catalog = openapi::parse_spec(s.spec_text, openapi::Format::json);
  s.stage_status[kStageExtract] = StageState::done;
  const int highs = uniform(rng, 1, 4);
  std::vector<goals::Draft> drafts;
  for (int i = 0; i < highs; ++i) drafts.push_back({"High " + std::to_string(i), "High-level goal " + std::to_string(i)});
  auto high_ids = s.goal_tree.ingest(std::nullopt, drafts, 1);
  for (const auto &h : high_ids) {
    const auto kind = chance(rng, 0.7) ? goals::Kind::functional : goals::Kind::non_functional;
    s.goal_tree.set_kind(h, kind);
    std::vector<goals::Draft> lows;
    const int n = uniform(rng, 0, 4);
    for (int i = 0; i < n; ++i) lows.push_back({"Low " + std::to_string(i), "Do thing " + std::to_string(i)});
    for (const auto &l : s.goal_tree.ingest(h, lows, 1)) {
      s.goal_tree.set_kind(l, chance(rng, 0.85) ? kind : goals::Kind::non_functional);
    }
    s.decomposed.insert(h);
  }
  // Review decisions: discard whole subtrees or single goals, accept others.
  for (const auto &g : s.goal_tree.high_goals()) {
    if (chance(rng, 0.15)) s.goal_tree.apply(g.id, goals::Decision::discard, std::string("not relevant"));
  }
  for (const auto &g : s.goal_tree.low_goals()) {
    if (g.status != goals::Status::proposed) continue;
    if (chance(rng, 0.15)) {
      s.goal_tree.apply(g.id, goals::Decision::discard, std::string("duplicate"));
    } else if (chance(rng, 0.5)) {
      s.goal_tree.apply(g.id, goals::Decision::accept, std::nullopt);
    }
  }
  s.stage_status[kStageElicit] = StageState::done;
  s.stage_status[kStageCritique] = StageState::done;
  s.stage_status[kStageDecompose] = StageState::done;
  s.round = 1;
  return s;
}

FunctionProvider::Fn random_mapping_answers(std::mt19937_64 &rng, const Session &session) {
  std::vector<std::string> ids;
  for (const auto &g : session.goal_tree.mappable()) ids.push_back(g.id.str());
  auto catalog = *session.catalog;
  return [&rng, ids, catalog](const llm::ChatRequest &request) {
    // Only goals that the prompt lists are requested; the prompt names them as "id. name".
    const std::string text = all_text(request);
    std::vector<std::string> requested;
    for (const auto &id : ids) {
      if (text.find("\n" + id + ". ") != std::string::npos) requested.push_back(id);
    }
    if (chance(rng, 0.05)) return llm::ChatResponse{"I cannot produce JSON today."};
    json mappings = json::array();
    for (const auto &id : requested) {
      const int roll = uniform(rng, 0, 9);
      if (roll == 0) continue; // omitted
      if (roll <= 2) {
        mappings.push_back({{"goal_id", id}, {"unmappable_reason", "no endpoint covers it"}});
        continue;
      }
      json steps = json::array();
      const int nsteps = uniform(rng, 1, 3);
      for (int k = 0; k < nsteps; ++k) {
        const auto &ep = pick(rng, catalog.endpoints);
        json bindings = json::object();
        for (const auto &p : ep.parameters) {
          if (!p.required && chance(rng, 0.5)) continue;
          if (k > 0 && chance(rng, 0.3)) {
            bindings[p.name] = {{"output_of", {{"step", uniform(rng, 1, k)}, {"field", "id"}}}};
          } else {
            bindings[p.name] = {{"literal", 1}};
          }
        }
        std::string path = ep.path;
        if (roll == 3 && k == 0) path = "/nowhere";                        // unknown endpoint
        if (roll == 4 && k == 0) bindings["bogus"] = {{"literal", "x"}};   // unknown parameter
        if (roll == 5 && k == 0) bindings["q0"] = {{"output_of", {{"step", 2}, {"field", "id"}}}}; // forward
        steps.push_back({{"verb", std::string(openapi::to_string(ep.verb))}, {"path", path}, {"bindings", bindings}});
      }
      mappings.push_back({{"goal_id", id}, {"steps", steps}});
    }
    if (chance(rng, 0.05)) mappings.push_back({{"goal_id", "99.9"}, {"unmappable_reason", "stray"}});
    return llm::ChatResponse{fenced({{"mappings", mappings}})};
  };
}

std::vector<std::string> trichotomy_violations(const Session &session) {
  std::vector<std::string> problems;
  const auto report = alignment::build_report(session);
  std::map<goals::GoalId, int> seen;
  for (const auto *bucket : {&report.mapped_goals, &report.unmapped_goals, &report.excluded_non_functional,
                             &report.excluded_discarded}) {
    for (const auto &id : *bucket) ++seen[id];
  }
  const auto lows = session.goal_tree.low_goals();
  for (const auto &g : lows) {
    if (seen[g.id] != 1) {
      problems.push_back(g.id.str() + " appears in " + std::to_string(seen[g.id]) + " buckets");
    }
  }
  if (seen.size() != lows.size()) problems.push_back("report names goals that are not low-level goals");
  if (report.entries.size() != lows.size()) problems.push_back("entry count differs from low-level goal count");
  std::set<goals::GoalId> mapped(report.mapped_goals.begin(), report.mapped_goals.end());
  for (const auto &e : report.entries) {
    if (const auto *plan = std::get_if<CallPlan>(&e.outcome)) {
      if (!mapped.contains(e.goal_id)) problems.push_back(e.goal_id.str() + " has a plan but is not mapped");
      auto check = alignment::validate_call_plan(plan->steps, *session.catalog);
      if (!check.plan) problems.push_back(e.goal_id.str() + " carries an invalid plan");
    } else {
      const auto &u = std::get<alignment::Unmappable>(e.outcome);
      if (mapped.contains(e.goal_id)) problems.push_back(e.goal_id.str() + " mapped without a plan");
      if (u.reason.empty()) problems.push_back(e.goal_id.str() + " unmappable with no reason");
    }
  }
  const auto c = alignment::coverage_of(session);
  if (c.numerator != static_cast<std::int64_t>(report.mapped_goals.size()) ||
      c.denominator != static_cast<std::int64_t>(lows.size())) {
    problems.push_back("coverage does not match bucket sizes");
  }
  return problems;
}

namespace {

const std::set<std::string> kOracleVerbs{"get", "put", "post", "delete", "options", "head", "patch"};

YAML::Node follow(const YAML::Node &root, YAML::Node node) {
  for (int hops = 0; hops < 16 && node.IsMap() && node["$ref"]; ++hops) {
    std::string ref = node["$ref"].as<std::string>();
    YAML::Node cur = root;
    std::size_t pos = 2; // skip "#/"
    while (pos <= ref.size()) {
      auto next = ref.find('/', pos);
      if (next == std::string::npos) next = ref.size();
      cur.reset(cur[ref.substr(pos, next - pos)]);
      pos = next + 1;
    }
    node.reset(cur);
  }
  return node;
}

} // namespace

OracleCounts oracle_counts(const std::string &document_text) {
  const YAML::Node root = YAML::Load(document_text);
  OracleCounts counts;
  for (const auto &path_entry : root["paths"]) {
    const YAML::Node item = path_entry.second;
    std::set<std::pair<std::string, std::string>> shared;
    if (item["parameters"]) {
      for (const auto &p : item["parameters"]) {
        auto r = follow(root, p);
        shared.insert({r["name"].as<std::string>(), r["in"].as<std::string>()});
      }
    }
    for (const auto &op_entry : item) {
      const auto verb = op_entry.first.as<std::string>();
      if (!kOracleVerbs.contains(verb)) continue;
      ++counts.endpoints;
      auto params = shared;
      if (op_entry.second["parameters"]) {
        for (const auto &p : op_entry.second["parameters"]) {
          auto r = follow(root, p);
          params.insert({r["name"].as<std::string>(), r["in"].as<std::string>()});
        }
      }
      counts.parameters += params.size();
      if (op_entry.second["requestBody"]) ++counts.parameters;
    }
  }
  return counts;
}

BudgetUse budget_use(const EventLog &log) {
  BudgetUse use;
  std::map<std::string, int> per_task;
  for (const auto &[kind, payload] : log.events) {
    if (kind == "task_started") {
      const auto key = std::to_string(payload.value("round", 0)) + "/" + payload.value("task", std::string{});
      use.max_attempts = std::max(use.max_attempts, ++per_task[key]);
    } else if (kind == "reflection") {
      ++use.reflections;
    }
  }
  return use;
}

} // namespace seal::test
