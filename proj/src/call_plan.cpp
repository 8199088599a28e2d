#include "seal/call_plan.hpp"

#include "seal/error.hpp"

namespace seal {

json to_json(const Binding &b) {
  switch (b.source) {
  case Binding::Source::literal: return json{{"literal", b.literal}};
  case Binding::Source::output_of: return json{{"output_of", {{"step", b.step}, {"field", b.field}}}};
  case Binding::Source::actor_input: return json{{"actor_input", b.description}};
  }
  return json::object();
}

Binding binding_from_json(const json &j) {
  if (!j.is_object() || j.size() != 1) {
    throw std::invalid_argument("binding must have exactly one of literal, output_of, actor_input");
  }
  if (j.contains("literal")) {
    return Binding::make_literal(j["literal"]);
  }
  if (j.contains("output_of")) {
    const auto &o = j["output_of"];
    if (!o.is_object() || !o.contains("step") || !o["step"].is_number_integer() || !o.contains("field") ||
        !o["field"].is_string()) {
      throw std::invalid_argument("output_of needs integer step and string field");
    }
    return Binding::make_output_of(o["step"].get<int>(), o["field"].get<std::string>());
  }
  if (j.contains("actor_input") && j["actor_input"].is_string()) {
    return Binding::make_actor_input(j["actor_input"].get<std::string>());
  }
  throw std::invalid_argument("binding must have exactly one of literal, output_of, actor_input");
}

json to_json(const CallStep &s) {
  json bindings = json::object();
  for (const auto &[name, b] : s.bindings) {
    bindings[name] = to_json(b);
  }
  return json{{"verb", openapi::to_string(s.endpoint.verb)}, {"path", s.endpoint.path}, {"bindings", bindings}};
}

CallStep call_step_from_json(const json &j) {
  CallStep step;
  auto verb = openapi::parse_verb(j.at("verb").get<std::string>());
  if (!verb) {
    throw std::invalid_argument("unknown verb");
  }
  step.endpoint = {*verb, j.at("path").get<std::string>()};
  if (j.contains("bindings")) {
    for (const auto &[name, b] : j["bindings"].items()) {
      step.bindings.emplace(name, binding_from_json(b));
    }
  }
  return step;
}

json to_json(const CallPlan &p) {
  json steps = json::array();
  for (const auto &s : p.steps) {
    steps.push_back(to_json(s));
  }
  return json{{"steps", steps}};
}

CallPlan call_plan_from_json(const json &j) {
  CallPlan plan;
  for (const auto &s : j.at("steps")) {
    plan.steps.push_back(call_step_from_json(s));
  }
  return plan;
}

json to_json(const Issue &i) {
  return json{{"code", i.code}, {"message", i.message}, {"subject", i.subject}, {"advisory", i.advisory}};
}

namespace {
constexpr std::pair<MappingOutcome::Source, const char *> kSources[] = {
    {MappingOutcome::Source::plan, "plan"},
    {MappingOutcome::Source::model_unmappable, "model_unmappable"},
    {MappingOutcome::Source::validation_failed, "validation_failed"},
    {MappingOutcome::Source::task_failed, "task_failed"},
};
}

json to_json(const MappingOutcome &o) {
  const char *source = "plan";
  for (const auto &[s, name] : kSources) {
    if (s == o.source) source = name;
  }
  return json{{"source", source},
              {"plan", o.plan ? to_json(*o.plan) : json(nullptr)},
              {"reason", o.reason},
              {"round", o.round}};
}

MappingOutcome mapping_outcome_from_json(const json &j) {
  MappingOutcome o;
  const auto source = j.at("source").get<std::string>();
  bool known = false;
  for (const auto &[s, name] : kSources) {
    if (source == name) {
      o.source = s;
      known = true;
    }
  }
  if (!known) {
    throw Error(ErrorCode::CorruptSession, "unknown mapping source " + source);
  }
  if (!j.at("plan").is_null()) {
    o.plan = call_plan_from_json(j["plan"]);
  }
  o.reason = j.at("reason").get<std::string>();
  o.round = j.at("round").get<int>();
  return o;
}

} // namespace seal
