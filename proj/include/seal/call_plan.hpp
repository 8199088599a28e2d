#pragma once

#include "seal/goal_model.hpp"
#include "seal/openapi_catalog.hpp"
#include "seal/util.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace seal {

/// Where a call argument comes from.
struct Binding {
  enum class Source { literal, output_of, actor_input };

  Source source = Source::actor_input;
  json literal;            ///< Source::literal
  int step = 0;            ///< Source::output_of, 1-based step index
  std::string field;       ///< Source::output_of, response field path
  std::string description; ///< Source::actor_input

  static Binding make_literal(json value) { return {Source::literal, std::move(value), 0, {}, {}}; }
  static Binding make_output_of(int step, std::string field) {
    return {Source::output_of, nullptr, step, std::move(field), {}};
  }
  static Binding make_actor_input(std::string description) {
    return {Source::actor_input, nullptr, 0, {}, std::move(description)};
  }
  friend bool operator==(const Binding &, const Binding &) = default;
};

struct CallStep {
  openapi::EndpointKey endpoint;
  std::map<std::string, Binding> bindings;
  friend bool operator==(const CallStep &, const CallStep &) = default;
};

struct CallPlan {
  std::vector<CallStep> steps;
  friend bool operator==(const CallPlan &, const CallPlan &) = default;
};

/// A finding from validation or observation. Advisory issues never block.
struct Issue {
  std::string code;
  std::string message;
  std::string subject; ///< goal id, "VERB /path", or empty
  bool advisory = false;
  friend bool operator==(const Issue &, const Issue &) = default;
};

/// Per-goal mapping state kept in the session between rounds.
struct MappingOutcome {
  enum class Source {
    plan,              ///< validated call plan
    model_unmappable,  ///< model said the API cannot enforce the goal
    validation_failed, ///< inner loop exhausted on invalid drafts
    task_failed,       ///< provider or parse failure; re-openable
  };
  Source source = Source::plan;
  std::optional<CallPlan> plan;
  std::string reason;
  int round = 1;
  friend bool operator==(const MappingOutcome &, const MappingOutcome &) = default;
};

inline constexpr const char *kValidationFailedReason = "mapping validation failed";

json to_json(const Binding &b);
Binding binding_from_json(const json &j); ///< throws json::exception on bad shape
json to_json(const CallStep &s);
CallStep call_step_from_json(const json &j);
json to_json(const CallPlan &p);
CallPlan call_plan_from_json(const json &j);
json to_json(const Issue &i);
json to_json(const MappingOutcome &o);
MappingOutcome mapping_outcome_from_json(const json &j);

} // namespace seal
