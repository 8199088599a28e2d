#pragma once

#include "seal/util.hpp"

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seal::goals {

/// Dotted hierarchical label ("1", "1.2"). Orders numerically per segment so
/// "1.10" sorts after "1.9".
class GoalId {
public:
  GoalId() = default;
  explicit GoalId(std::vector<int> segments);

  /// Throws Error(InvalidArgument) unless every segment is a positive integer.
  static GoalId parse(std::string_view text);
  static std::optional<GoalId> try_parse(std::string_view text);

  [[nodiscard]] const std::vector<int> &segments() const { return segments_; }
  [[nodiscard]] std::size_t depth() const { return segments_.size(); }
  [[nodiscard]] std::optional<GoalId> parent() const;
  [[nodiscard]] GoalId child(int index) const;
  [[nodiscard]] std::string str() const;

  friend auto operator<=>(const GoalId &, const GoalId &) = default;
  friend bool operator==(const GoalId &, const GoalId &) = default;

private:
  std::vector<int> segments_;
};

enum class Level { high, low };
enum class Kind { functional, non_functional, unknown };
enum class Status { proposed, accepted, discarded };
enum class Decision { accept, discard };

std::string_view to_string(Level v);
std::string_view to_string(Kind v);
std::string_view to_string(Status v);
std::string_view to_string(Decision v);
std::optional<Kind> parse_kind(std::string_view text);
std::optional<Decision> parse_decision(std::string_view text);

struct Actor {
  std::string name;
  std::string description;
  friend bool operator==(const Actor &, const Actor &) = default;
};

struct Goal {
  GoalId id;
  std::string name;
  std::string description;
  Level level = Level::high;
  Kind kind = Kind::unknown;
  std::optional<GoalId> parent;
  Status status = Status::proposed;
  std::optional<std::string> discard_reason;
  int origin_round = 1;

  friend bool operator==(const Goal &, const Goal &) = default;
};

struct Draft {
  std::string name;
  std::string description;
  Kind kind = Kind::unknown;
  friend bool operator==(const Draft &, const Draft &) = default;
};

class GoalTree {
public:
  GoalTree() = default;
  explicit GoalTree(Actor actor) : actor_(std::move(actor)) {}

  [[nodiscard]] const Actor &actor() const { return actor_; }
  [[nodiscard]] const std::map<GoalId, Goal> &goals() const { return goals_; }
  [[nodiscard]] const Goal *find(const GoalId &id) const;
  [[nodiscard]] std::vector<Goal> high_goals() const;
  [[nodiscard]] std::vector<Goal> low_goals() const;
  [[nodiscard]] std::vector<Goal> children_of(const GoalId &parent) const;
  [[nodiscard]] bool empty() const { return goals_.empty(); }

  /// Appends drafts under `parent` (or as high-level goals when absent) with
  /// the next free child indices. New goals start proposed with kind unknown.
  /// Throws UnknownParent or LowLevelParent.
  std::vector<GoalId> ingest(const std::optional<GoalId> &parent, const std::vector<Draft> &drafts,
                             int round);

  /// Accept or discard. Discarding a high-level goal discards its still
  /// proposed children with reason "parent discarded".
  /// Throws UnknownGoal, MissingReason, AlreadyDiscarded (accepting a
  /// discarded goal).
  void apply(const GoalId &id, Decision decision, const std::optional<std::string> &reason);

  /// Classification from the critique stage or a human. Throws UnknownGoal.
  void set_kind(const GoalId &id, Kind kind);

  /// Low-level, not discarded, not non-functional; id order.
  [[nodiscard]] std::vector<Goal> mappable() const;

  /// Rebuilds a tree from stored goals, checking every invariant.
  /// Throws Error(CorruptSession) on violation.
  static GoalTree restore(Actor actor, std::vector<Goal> goals);

  friend bool operator==(const GoalTree &, const GoalTree &) = default;

private:
  Actor actor_;
  std::map<GoalId, Goal> goals_;
};

/// Free-function forms of the tree operations.
std::vector<GoalId> ingest_goals(GoalTree &tree, const std::optional<GoalId> &parent,
                                 const std::vector<Draft> &drafts, int round);
GoalTree apply_decision(GoalTree tree, const GoalId &goal, Decision decision,
                        const std::optional<std::string> &reason);
std::vector<Goal> mappable_goals(const GoalTree &tree);

json to_json(const GoalTree &tree);
GoalTree tree_from_json(const json &j);
json to_json(const Goal &goal);

} // namespace seal::goals
