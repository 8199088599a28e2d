#pragma once

#include "seal/call_plan.hpp"
#include "seal/goal_model.hpp"
#include "seal/llm_provider.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seal::prompts {

enum class Stage { P1, P2, P4, CRITIQUE };

std::string_view to_string(Stage s);
llm::StageTag stage_tag(Stage s);

struct PromptTemplate {
  Stage stage = Stage::P1;
  std::string body;
};

/// Placeholders a template body must contain for its stage.
std::vector<std::string> required_placeholders(Stage stage);

class TemplateSet {
public:
  /// Templates compiled into the library from templates/.
  static TemplateSet builtin();
  /// Reads p1.txt, p2.txt, p4.txt, critique.txt and VERSION from `dir`.
  /// Throws InvalidTemplate or IoFailure.
  static TemplateSet load_dir(const std::filesystem::path &dir);
  /// Throws InvalidTemplate when a required placeholder is missing.
  TemplateSet(std::map<Stage, PromptTemplate> templates, std::string base_version);

  [[nodiscard]] const PromptTemplate &get(Stage stage) const { return templates_.at(stage); }
  /// "<base>+<hash prefix of all bodies>", so edited templates get a new id.
  [[nodiscard]] const std::string &version() const { return version_; }

private:
  std::map<Stage, PromptTemplate> templates_;
  std::string version_;
};

struct StageContext {
  std::string brief;
  goals::Actor actor;
  const goals::GoalTree *tree = nullptr;
  std::optional<goals::GoalId> parent;   ///< P2
  std::vector<goals::Goal> goals_to_map; ///< P4
  std::string endpoint_digest;           ///< P4
  std::string model_id;
};

/// Throws MissingContext or EmptyMappableSet.
llm::ChatRequest render_stage(Stage stage, const StageContext &context, const TemplateSet &templates);

using GoalDraft = goals::Draft;

struct MappingDraft {
  goals::GoalId goal_id;
  std::variant<std::vector<CallStep>, std::string> outcome; ///< steps or unmappable reason

  [[nodiscard]] bool mapped() const { return outcome.index() == 0; }
  [[nodiscard]] const std::vector<CallStep> &steps() const { return std::get<0>(outcome); }
  [[nodiscard]] const std::string &unmappable_reason() const { return std::get<1>(outcome); }
  friend bool operator==(const MappingDraft &, const MappingDraft &) = default;
};

struct KindVerdict {
  goals::GoalId goal_id;
  goals::Kind kind = goals::Kind::unknown;
  friend bool operator==(const KindVerdict &, const KindVerdict &) = default;
};

using StageResult = std::variant<std::vector<GoalDraft>, std::vector<MappingDraft>, std::vector<KindVerdict>>;

/// The first ```json fenced block, else the first balanced {...} that parses.
/// Throws NoStructuredBlock, or SchemaViolation when a fenced block is not JSON.
json extract_json_block(std::string_view content);

/// Throws NoStructuredBlock, SchemaViolation (details carry field paths) or
/// UnknownGoalIdInResponse when `requested_ids` is given and the response
/// names an id outside it (CRITIQUE and P4 only).
StageResult parse_stage_response(Stage stage, std::string_view content,
                                 const std::optional<std::set<goals::GoalId>> &requested_ids = std::nullopt);

std::vector<GoalDraft> parse_goal_drafts(std::string_view content);
std::vector<MappingDraft> parse_mapping_drafts(std::string_view content,
                                               const std::optional<std::set<goals::GoalId>> &requested_ids);
std::vector<KindVerdict> parse_kind_verdicts(std::string_view content,
                                             const std::optional<std::set<goals::GoalId>> &requested_ids);

/// Contract-schema serialization, the inverse of the parsers.
json goal_drafts_to_contract(const std::vector<GoalDraft> &drafts);
json mapping_drafts_to_contract(const std::vector<MappingDraft> &drafts);
json kind_verdicts_to_contract(const std::vector<KindVerdict> &verdicts);

/// Numbered text block of goals as injected into prompts.
std::string render_goal_list(const std::vector<goals::Goal> &goals);

} // namespace seal::prompts
