#pragma once

#include "seal/call_plan.hpp"
#include "seal/openapi_catalog.hpp"
#include "seal/prompt_pipeline.hpp"
#include "seal/session.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace seal::alignment {

struct PlanValidation {
  std::optional<CallPlan> plan; ///< present iff no blocking issue
  std::vector<Issue> issues;    ///< blocking and advisory findings
};

/// Resolves every step against the catalog, checks binding names and
/// output_of ordering, and binds missing required parameters to actor_input
/// placeholders (reported as advisory AutoBound issues).
PlanValidation validate_call_plan(const std::vector<CallStep> &steps, const openapi::EndpointCatalog &catalog);
PlanValidation validate_call_plan(const prompts::MappingDraft &draft, const openapi::EndpointCatalog &catalog);

struct Unmappable {
  std::string reason;
  friend bool operator==(const Unmappable &, const Unmappable &) = default;
};

struct AlignmentEntry {
  goals::GoalId goal_id;
  std::variant<CallPlan, Unmappable> outcome;
  friend bool operator==(const AlignmentEntry &, const AlignmentEntry &) = default;
};

inline constexpr const char *kExcludedNonFunctional = "excluded: non-functional";
inline constexpr const char *kNotMapped = "not mapped";

struct AlignmentReport {
  std::string session_id;
  std::vector<AlignmentEntry> entries; ///< one per low-level goal, id order
  Ratio coverage;                      ///< mapped / all low-level goals
  std::vector<goals::GoalId> mapped_goals;
  std::vector<goals::GoalId> unmapped_goals;          ///< mappable, no plan
  std::vector<goals::GoalId> excluded_non_functional; ///< kind non_functional
  std::vector<goals::GoalId> excluded_discarded;      ///< discarded by review
  std::vector<openapi::EndpointKey> unused_endpoints; ///< catalog order
  std::string template_version;
  std::string provider_identity;
  std::string generated_at;
};

/// Coverage rule shared by the report and the Reflector: goals with a
/// validated plan over every low-level goal in the tree (0/0 when none).
Ratio coverage_of(const Session &session);

/// Pure function of the session. Throws MapNotRun.
AlignmentReport build_report(const Session &session);

json report_to_json(const AlignmentReport &report);
/// Mapped, Unmappable and API Gaps sections.
std::string render_report_text(const AlignmentReport &report, const Session &session);

} // namespace seal::alignment
