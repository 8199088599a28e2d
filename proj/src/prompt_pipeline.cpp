#include "seal/prompt_pipeline.hpp"

#include "seal/error.hpp"
#include "seal/embedded_templates.hpp"

#include <algorithm>

namespace seal::prompts {

namespace {

constexpr const char *kSystemMessage =
    "You are an assistant supporting goal-oriented requirements engineering. "
    "Follow the output format exactly.";

constexpr const char *kGoalContract =
    "Output format: answer with exactly one fenced JSON block (```json ... ```) of this shape:\n"
    "{\"goals\": [{\"name\": \"<short name>\", \"description\": \"<one sentence>\", "
    "\"kind\": \"functional | non_functional | unknown\"}]}\n";

constexpr const char *kCritiqueContract =
    "Output format: answer with exactly one fenced JSON block (```json ... ```) of this shape:\n"
    "{\"verdicts\": [{\"goal_id\": \"<id from the list>\", \"kind\": \"functional | non_functional\"}]}\n"
    "Give exactly one verdict for every goal listed.\n";

constexpr const char *kMappingContract =
    "Output format: answer with exactly one fenced JSON block (```json ... ```) of this shape:\n"
    "{\"mappings\": [\n"
    "  {\"goal_id\": \"<id>\", \"steps\": [{\"verb\": \"GET\", \"path\": \"/path/exactly/as/listed\", "
    "\"bindings\": {\"<parameter>\": {\"literal\": <value>} | {\"output_of\": {\"step\": <earlier step number>, "
    "\"field\": \"<response field>\"}} | {\"actor_input\": \"<what the actor supplies>\"}}}]},\n"
    "  {\"goal_id\": \"<id>\", \"unmappable_reason\": \"<why the current endpoints cannot enforce it>\"}\n"
    "]}\n"
    "Include every goal exactly once. Use only verb and path pairs from the endpoint list. "
    "Steps are numbered from 1; bindings are optional.\n";

std::string stakeholder_text(const goals::Actor &actor) {
  return actor.description.empty() ? actor.name : actor.name + ": " + actor.description;
}

std::string goal_line(const goals::Goal &g) {
  return g.id.str() + ". " + g.name + ": " + g.description;
}

std::vector<goals::Goal> live_high_goals(const goals::GoalTree &tree) {
  std::vector<goals::Goal> out;
  for (const auto &g : tree.high_goals()) {
    if (g.status != goals::Status::discarded) out.push_back(g);
  }
  return out;
}

std::string substitute(const std::string &body, const std::map<std::string, std::optional<std::string>> &values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = body.find("{{", pos);
    if (open == std::string::npos) {
      out.append(body, pos);
      break;
    }
    auto close = body.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(body, pos);
      break;
    }
    out.append(body, pos, open - pos);
    const std::string name = body.substr(open + 2, close - open - 2);
    auto it = values.find(name);
    if (it == values.end()) {
      out.append(body, open, close + 2 - open);
    } else if (!it->second) {
      throw Error(ErrorCode::MissingContext, "no value for placeholder {{" + name + "}}");
    } else {
      out += *it->second;
    }
    pos = close + 2;
  }
  return out;
}

[[noreturn]] void schema_violation(std::vector<std::string> details) {
  std::string summary = details.empty() ? "response does not match the stage schema" : details.front();
  if (details.size() > 1) summary += " (+" + std::to_string(details.size() - 1) + " more)";
  throw Error(ErrorCode::SchemaViolation, summary, std::move(details));
}

const json &require_array(const json &doc, const char *key) {
  if (!doc.is_object() || !doc.contains(key) || !doc[key].is_array()) {
    schema_violation({std::string("$.") + key + ": expected an array"});
  }
  return doc[key];
}

void check_requested(const std::vector<goals::GoalId> &ids, const std::optional<std::set<goals::GoalId>> &requested) {
  if (!requested) return;
  std::vector<std::string> unknown;
  for (const auto &id : ids) {
    if (!requested->contains(id)) unknown.push_back(id.str());
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto &u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw Error(ErrorCode::UnknownGoalIdInResponse, "response names goals not in the request: " + list, unknown);
  }
}

std::optional<goals::GoalId> read_goal_id(const json &item, const std::string &where, std::vector<std::string> &errors) {
  if (!item.contains("goal_id") || !item["goal_id"].is_string()) {
    errors.push_back(where + ".goal_id: expected a string");
    return std::nullopt;
  }
  auto id = goals::GoalId::try_parse(item["goal_id"].get<std::string>());
  if (!id) errors.push_back(where + ".goal_id: not a dotted goal id");
  return id;
}

} // namespace

std::string_view to_string(Stage s) {
  switch (s) {
  case Stage::P1: return "P1";
  case Stage::P2: return "P2";
  case Stage::P4: return "P4";
  case Stage::CRITIQUE: return "CRITIQUE";
  }
  return "P1";
}

llm::StageTag stage_tag(Stage s) {
  switch (s) {
  case Stage::P1: return llm::StageTag::P1;
  case Stage::P2: return llm::StageTag::P2;
  case Stage::P4: return llm::StageTag::P4;
  case Stage::CRITIQUE: return llm::StageTag::CRITIQUE;
  }
  return llm::StageTag::P1;
}

std::vector<std::string> required_placeholders(Stage stage) {
  switch (stage) {
  case Stage::P1: return {"brief", "stakeholder"};
  case Stage::P2: return {"high_goals", "parent_goal"};
  case Stage::P4: return {"low_goals", "endpoint_digest"};
  case Stage::CRITIQUE: return {"high_goals"};
  }
  return {};
}

TemplateSet::TemplateSet(std::map<Stage, PromptTemplate> templates, std::string base_version)
    : templates_(std::move(templates)) {
  std::string all;
  for (auto stage : {Stage::P1, Stage::P2, Stage::P4, Stage::CRITIQUE}) {
    auto it = templates_.find(stage);
    if (it == templates_.end()) {
      throw Error(ErrorCode::InvalidTemplate, "missing template for stage " + std::string(to_string(stage)));
    }
    for (const auto &name : required_placeholders(stage)) {
      if (it->second.body.find("{{" + name + "}}") == std::string::npos) {
        throw Error(ErrorCode::InvalidTemplate,
                    std::string(to_string(stage)) + " template lacks {{" + name + "}}");
      }
    }
    all += it->second.body;
    all.push_back('\0');
  }
  version_ = base_version + "+" + sha256_hex(all).substr(0, 8);
}

TemplateSet TemplateSet::builtin() {
  return TemplateSet({{Stage::P1, {Stage::P1, embedded::kP1}},
                      {Stage::P2, {Stage::P2, embedded::kP2}},
                      {Stage::P4, {Stage::P4, embedded::kP4}},
                      {Stage::CRITIQUE, {Stage::CRITIQUE, embedded::kCritique}}},
                     embedded::kVersion);
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path &dir) {
  std::string version = read_file(dir / "VERSION");
  version.erase(std::remove_if(version.begin(), version.end(), [](char c) { return c == '\n' || c == '\r'; }),
                version.end());
  return TemplateSet({{Stage::P1, {Stage::P1, read_file(dir / "p1.txt")}},
                      {Stage::P2, {Stage::P2, read_file(dir / "p2.txt")}},
                      {Stage::P4, {Stage::P4, read_file(dir / "p4.txt")}},
                      {Stage::CRITIQUE, {Stage::CRITIQUE, read_file(dir / "critique.txt")}}},
                     version);
}

std::string render_goal_list(const std::vector<goals::Goal> &goals) {
  std::string out;
  for (const auto &g : goals) {
    out += goal_line(g) + "\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

llm::ChatRequest render_stage(Stage stage, const StageContext &ctx, const TemplateSet &templates) {
  std::map<std::string, std::optional<std::string>> values;
  auto nonempty = [](const std::string &s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
  values["brief"] = nonempty(ctx.brief);
  values["stakeholder"] = nonempty(stakeholder_text(ctx.actor));
  values["high_goals"] = std::nullopt;
  values["parent_goal"] = std::nullopt;
  values["low_goals"] = std::nullopt;
  values["endpoint_digest"] = nonempty(ctx.endpoint_digest);

  if (ctx.tree) {
    values["high_goals"] = nonempty(render_goal_list(live_high_goals(*ctx.tree)));
    if (ctx.parent) {
      const auto *parent = ctx.tree->find(*ctx.parent);
      if (parent) values["parent_goal"] = goal_line(*parent);
    }
  }
  if (stage == Stage::P2 && !values["parent_goal"]) {
    throw Error(ErrorCode::MissingContext, "P2 needs an existing parent high-level goal");
  }
  if (stage == Stage::P4) {
    if (ctx.goals_to_map.empty()) {
      throw Error(ErrorCode::EmptyMappableSet, "no mappable low-level goals to map");
    }
    values["low_goals"] = render_goal_list(ctx.goals_to_map);
  }
  for (const auto &name : required_placeholders(stage)) {
    if (!values[name]) {
      throw Error(ErrorCode::MissingContext, std::string(to_string(stage)) + " needs {{" + name + "}}");
    }
  }

  const char *contract = stage == Stage::P4 ? kMappingContract
                         : stage == Stage::CRITIQUE ? kCritiqueContract
                                                    : kGoalContract;
  std::string user = substitute(templates.get(stage).body, values);
  while (!user.empty() && user.back() == '\n') user.pop_back();
  user += "\n\n";
  user += contract;

  llm::ChatRequest request;
  request.messages = {{llm::Role::system, kSystemMessage}, {llm::Role::user, user}};
  request.model_id = ctx.model_id;
  request.stage_tag = stage_tag(stage);
  return request;
}

// ---------------------------------------------------------------------------
// Parsing

json extract_json_block(std::string_view content) {
  std::size_t pos = 0;
  while ((pos = content.find("```", pos)) != std::string_view::npos) {
    auto line_end = content.find('\n', pos + 3);
    if (line_end == std::string_view::npos) break;
    std::string lang(content.substr(pos + 3, line_end - pos - 3));
    lang.erase(std::remove_if(lang.begin(), lang.end(), [](unsigned char c) { return std::isspace(c); }), lang.end());
    auto close = content.find("```", line_end + 1);
    if (close == std::string_view::npos) break;
    if (lang.empty() || lang == "json" || lang == "JSON") {
      auto body = content.substr(line_end + 1, close - line_end - 1);
      try {
        return json::parse(body);
      } catch (const json::parse_error &e) {
        throw Error(ErrorCode::SchemaViolation, "fenced block is not valid JSON", {std::string("$: ") + e.what()});
      }
    }
    pos = close + 3;
  }
  // No fenced block: take the first balanced object that parses.
  for (std::size_t start = content.find('{'); start != std::string_view::npos; start = content.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escape = false;
    for (std::size_t i = start; i < content.size(); ++i) {
      char c = content[i];
      if (in_string) {
        if (escape) escape = false;
        else if (c == '\\') escape = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        try {
          return json::parse(content.substr(start, i - start + 1));
        } catch (const json::parse_error &) {
          break;
        }
      }
    }
  }
  throw Error(ErrorCode::NoStructuredBlock, "response contains no JSON block");
}

std::vector<GoalDraft> parse_goal_drafts(std::string_view content) {
  const json doc = extract_json_block(content);
  const json &items = require_array(doc, "goals");
  std::vector<std::string> errors;
  std::vector<GoalDraft> drafts;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = "$.goals[" + std::to_string(i) + "]";
    const auto &item = items[i];
    if (!item.is_object()) {
      errors.push_back(where + ": expected an object");
      continue;
    }
    GoalDraft d;
    if (!item.contains("name") || !item["name"].is_string() || item["name"].get<std::string>().empty()) {
      errors.push_back(where + ".name: expected a non-empty string");
    } else {
      d.name = item["name"].get<std::string>();
    }
    if (!item.contains("description") || !item["description"].is_string()) {
      errors.push_back(where + ".description: expected a string");
    } else {
      d.description = item["description"].get<std::string>();
    }
    if (item.contains("kind")) {
      auto kind = item["kind"].is_string() ? goals::parse_kind(item["kind"].get<std::string>()) : std::nullopt;
      if (!kind) errors.push_back(where + ".kind: expected functional, non_functional or unknown");
      else d.kind = *kind;
    }
    drafts.push_back(std::move(d));
  }
  if (!errors.empty()) schema_violation(std::move(errors));
  return drafts;
}

std::vector<KindVerdict> parse_kind_verdicts(std::string_view content,
                                             const std::optional<std::set<goals::GoalId>> &requested_ids) {
  const json doc = extract_json_block(content);
  const json &items = require_array(doc, "verdicts");
  std::vector<std::string> errors;
  std::vector<KindVerdict> verdicts;
  std::set<goals::GoalId> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = "$.verdicts[" + std::to_string(i) + "]";
    const auto &item = items[i];
    if (!item.is_object()) {
      errors.push_back(where + ": expected an object");
      continue;
    }
    auto id = read_goal_id(item, where, errors);
    std::optional<goals::Kind> kind;
    if (item.contains("kind") && item["kind"].is_string()) kind = goals::parse_kind(item["kind"].get<std::string>());
    if (!kind || *kind == goals::Kind::unknown) {
      errors.push_back(where + ".kind: expected functional or non_functional");
      continue;
    }
    if (id) {
      if (!seen.insert(*id).second) errors.push_back(where + ".goal_id: duplicate verdict for " + id->str());
      verdicts.push_back({*id, *kind});
    }
  }
  if (!errors.empty()) schema_violation(std::move(errors));
  std::vector<goals::GoalId> ids;
  for (const auto &v : verdicts) ids.push_back(v.goal_id);
  check_requested(ids, requested_ids);
  return verdicts;
}

std::vector<MappingDraft> parse_mapping_drafts(std::string_view content,
                                               const std::optional<std::set<goals::GoalId>> &requested_ids) {
  const json doc = extract_json_block(content);
  const json &items = require_array(doc, "mappings");
  std::vector<std::string> errors;
  std::vector<MappingDraft> drafts;
  std::set<goals::GoalId> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string where = "$.mappings[" + std::to_string(i) + "]";
    const auto &item = items[i];
    if (!item.is_object()) {
      errors.push_back(where + ": expected an object");
      continue;
    }
    auto id = read_goal_id(item, where, errors);
    const bool has_steps = item.contains("steps");
    const bool has_reason = item.contains("unmappable_reason");
    if (has_steps == has_reason) {
      errors.push_back(where + ": exactly one of steps or unmappable_reason is required");
      continue;
    }
    MappingDraft draft;
    if (has_reason) {
      if (!item["unmappable_reason"].is_string() || item["unmappable_reason"].get<std::string>().empty()) {
        errors.push_back(where + ".unmappable_reason: expected a non-empty string");
        continue;
      }
      draft.outcome = item["unmappable_reason"].get<std::string>();
    } else {
      const auto &steps = item["steps"];
      if (!steps.is_array() || steps.empty()) {
        errors.push_back(where + ".steps: expected a non-empty array");
        continue;
      }
      std::vector<CallStep> parsed;
      for (std::size_t s = 0; s < steps.size(); ++s) {
        const std::string swhere = where + ".steps[" + std::to_string(s) + "]";
        const auto &step = steps[s];
        if (!step.is_object()) {
          errors.push_back(swhere + ": expected an object");
          continue;
        }
        std::optional<openapi::Verb> verb;
        if (step.contains("verb") && step["verb"].is_string()) verb = openapi::parse_verb(step["verb"].get<std::string>());
        if (!verb) errors.push_back(swhere + ".verb: expected an HTTP verb");
        if (!step.contains("path") || !step["path"].is_string() || step["path"].get<std::string>().empty()) {
          errors.push_back(swhere + ".path: expected a non-empty string");
          continue;
        }
        CallStep cs;
        cs.endpoint = {verb.value_or(openapi::Verb::GET), step["path"].get<std::string>()};
        if (step.contains("bindings")) {
          if (!step["bindings"].is_object()) {
            errors.push_back(swhere + ".bindings: expected an object");
          } else {
            for (const auto &[name, b] : step["bindings"].items()) {
              try {
                cs.bindings.emplace(name, binding_from_json(b));
              } catch (const std::exception &e) {
                errors.push_back(swhere + ".bindings." + name + ": " + e.what());
              }
            }
          }
        }
        parsed.push_back(std::move(cs));
      }
      draft.outcome = std::move(parsed);
    }
    if (id) {
      if (!seen.insert(*id).second) errors.push_back(where + ".goal_id: duplicate mapping for " + id->str());
      draft.goal_id = *id;
      drafts.push_back(std::move(draft));
    }
  }
  if (!errors.empty()) schema_violation(std::move(errors));
  std::vector<goals::GoalId> ids;
  for (const auto &d : drafts) ids.push_back(d.goal_id);
  check_requested(ids, requested_ids);
  return drafts;
}

StageResult parse_stage_response(Stage stage, std::string_view content,
                                 const std::optional<std::set<goals::GoalId>> &requested_ids) {
  switch (stage) {
  case Stage::P1:
  case Stage::P2: return parse_goal_drafts(content);
  case Stage::P4: return parse_mapping_drafts(content, requested_ids);
  case Stage::CRITIQUE: return parse_kind_verdicts(content, requested_ids);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown stage");
}

json goal_drafts_to_contract(const std::vector<GoalDraft> &drafts) {
  json items = json::array();
  for (const auto &d : drafts) {
    items.push_back({{"name", d.name}, {"description", d.description}, {"kind", goals::to_string(d.kind)}});
  }
  return json{{"goals", items}};
}

json mapping_drafts_to_contract(const std::vector<MappingDraft> &drafts) {
  json items = json::array();
  for (const auto &d : drafts) {
    json item{{"goal_id", d.goal_id.str()}};
    if (d.mapped()) {
      json steps = json::array();
      for (const auto &s : d.steps()) steps.push_back(to_json(s));
      item["steps"] = steps;
    } else {
      item["unmappable_reason"] = d.unmappable_reason();
    }
    items.push_back(std::move(item));
  }
  return json{{"mappings", items}};
}

json kind_verdicts_to_contract(const std::vector<KindVerdict> &verdicts) {
  json items = json::array();
  for (const auto &v : verdicts) {
    items.push_back({{"goal_id", v.goal_id.str()}, {"kind", goals::to_string(v.kind)}});
  }
  return json{{"verdicts", items}};
}

} // namespace seal::prompts
