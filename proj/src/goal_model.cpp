#include "seal/goal_model.hpp"

#include "seal/error.hpp"

#include <charconv>

namespace seal::goals {

GoalId::GoalId(std::vector<int> segments) : segments_(std::move(segments)) {}

std::optional<GoalId> GoalId::try_parse(std::string_view text) {
  std::vector<int> segments;
  std::size_t start = 0;
  while (true) {
    auto dot = text.find('.', start);
    auto part = text.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size() || value <= 0) {
      return std::nullopt;
    }
    segments.push_back(value);
    if (dot == std::string_view::npos) {
      break;
    }
    start = dot + 1;
  }
  return GoalId(std::move(segments));
}

GoalId GoalId::parse(std::string_view text) {
  auto id = try_parse(text);
  if (!id) {
    throw Error(ErrorCode::InvalidArgument, "malformed goal id '" + std::string(text) + "'");
  }
  return *id;
}

std::optional<GoalId> GoalId::parent() const {
  if (segments_.size() <= 1) {
    return std::nullopt;
  }
  return GoalId(std::vector<int>(segments_.begin(), segments_.end() - 1));
}

GoalId GoalId::child(int index) const {
  auto segments = segments_;
  segments.push_back(index);
  return GoalId(std::move(segments));
}

std::string GoalId::str() const {
  std::string out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (i) out.push_back('.');
    out += std::to_string(segments_[i]);
  }
  return out;
}

std::string_view to_string(Level v) { return v == Level::high ? "high" : "low"; }

std::string_view to_string(Kind v) {
  switch (v) {
  case Kind::functional: return "functional";
  case Kind::non_functional: return "non_functional";
  case Kind::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Status v) {
  switch (v) {
  case Status::proposed: return "proposed";
  case Status::accepted: return "accepted";
  case Status::discarded: return "discarded";
  }
  return "proposed";
}

std::string_view to_string(Decision v) { return v == Decision::accept ? "accept" : "discard"; }

std::optional<Kind> parse_kind(std::string_view text) {
  for (auto k : {Kind::functional, Kind::non_functional, Kind::unknown}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<Decision> parse_decision(std::string_view text) {
  if (text == "accept") return Decision::accept;
  if (text == "discard") return Decision::discard;
  return std::nullopt;
}

const Goal *GoalTree::find(const GoalId &id) const {
  auto it = goals_.find(id);
  return it == goals_.end() ? nullptr : &it->second;
}

std::vector<Goal> GoalTree::high_goals() const {
  std::vector<Goal> out;
  for (const auto &[id, g] : goals_) {
    if (g.level == Level::high) out.push_back(g);
  }
  return out;
}

std::vector<Goal> GoalTree::low_goals() const {
  std::vector<Goal> out;
  for (const auto &[id, g] : goals_) {
    if (g.level == Level::low) out.push_back(g);
  }
  return out;
}

std::vector<Goal> GoalTree::children_of(const GoalId &parent) const {
  std::vector<Goal> out;
  for (const auto &[id, g] : goals_) {
    if (g.parent == parent) out.push_back(g);
  }
  return out;
}

std::vector<GoalId> GoalTree::ingest(const std::optional<GoalId> &parent,
                                     const std::vector<Draft> &drafts, int round) {
  if (parent) {
    const Goal *p = find(*parent);
    if (!p) {
      throw Error(ErrorCode::UnknownParent, "no goal " + parent->str());
    }
    if (p->level != Level::high) {
      throw Error(ErrorCode::LowLevelParent,
                  "goal " + parent->str() + " is low-level; hierarchy depth is two");
    }
  }
  int next = 0;
  for (const auto &[id, g] : goals_) {
    if (g.parent == parent) {
      next = std::max(next, id.segments().back());
    }
  }
  std::vector<GoalId> assigned;
  for (const auto &draft : drafts) {
    if (draft.name.empty()) {
      throw Error(ErrorCode::InvalidArgument, "goal draft without a name");
    }
    ++next;
    GoalId id = parent ? parent->child(next) : GoalId({next});
    Goal goal;
    goal.id = id;
    goal.name = draft.name;
    goal.description = draft.description;
    goal.level = parent ? Level::low : Level::high;
    goal.kind = Kind::unknown;
    goal.parent = parent;
    goal.origin_round = std::max(round, 1);
    goals_.emplace(id, std::move(goal));
    assigned.push_back(id);
  }
  return assigned;
}

void GoalTree::apply(const GoalId &id, Decision decision, const std::optional<std::string> &reason) {
  auto it = goals_.find(id);
  if (it == goals_.end()) {
    throw Error(ErrorCode::UnknownGoal, "no goal " + id.str());
  }
  Goal &goal = it->second;
  if (decision == Decision::accept) {
    if (goal.status == Status::discarded) {
      throw Error(ErrorCode::AlreadyDiscarded, "goal " + id.str() + " was discarded");
    }
    goal.status = Status::accepted;
    return;
  }
  if (!reason || reason->empty()) {
    throw Error(ErrorCode::MissingReason, "discarding " + id.str() + " requires a reason");
  }
  if (goal.status != Status::discarded) {
    goal.status = Status::discarded;
    goal.discard_reason = *reason;
  }
  if (goal.level == Level::high) {
    for (auto &[cid, child] : goals_) {
      if (child.parent == id && child.status == Status::proposed) {
        child.status = Status::discarded;
        child.discard_reason = "parent discarded";
      }
    }
  }
}

void GoalTree::set_kind(const GoalId &id, Kind kind) {
  auto it = goals_.find(id);
  if (it == goals_.end()) {
    throw Error(ErrorCode::UnknownGoal, "no goal " + id.str());
  }
  it->second.kind = kind;
}

std::vector<Goal> GoalTree::mappable() const {
  std::vector<Goal> out;
  for (const auto &[id, g] : goals_) {
    if (g.level == Level::low && g.status != Status::discarded && g.kind != Kind::non_functional) {
      out.push_back(g);
    }
  }
  return out;
}

GoalTree GoalTree::restore(Actor actor, std::vector<Goal> goals) {
  auto corrupt = [](const std::string &msg) { throw Error(ErrorCode::CorruptSession, msg); };
  GoalTree tree(std::move(actor));
  for (auto &g : goals) {
    if (g.id.depth() == 0 || g.id.depth() > 2) corrupt("goal id depth out of range: " + g.id.str());
    if ((g.level == Level::high) != !g.parent.has_value()) corrupt("level/parent mismatch at " + g.id.str());
    if (g.parent && g.id.parent() != g.parent) corrupt("parent does not prefix id at " + g.id.str());
    if ((g.status == Status::discarded) != g.discard_reason.has_value())
      corrupt("discard reason mismatch at " + g.id.str());
    if (!tree.goals_.emplace(g.id, g).second) corrupt("duplicate goal id " + g.id.str());
  }
  for (const auto &[id, g] : tree.goals_) {
    if (g.parent) {
      const Goal *p = tree.find(*g.parent);
      if (!p || p->level != Level::high) corrupt("missing high-level parent for " + id.str());
    }
  }
  return tree;
}

std::vector<GoalId> ingest_goals(GoalTree &tree, const std::optional<GoalId> &parent,
                                 const std::vector<Draft> &drafts, int round) {
  return tree.ingest(parent, drafts, round);
}

GoalTree apply_decision(GoalTree tree, const GoalId &goal, Decision decision,
                        const std::optional<std::string> &reason) {
  tree.apply(goal, decision, reason);
  return tree;
}

std::vector<Goal> mappable_goals(const GoalTree &tree) { return tree.mappable(); }

json to_json(const Goal &g) {
  return json{{"id", g.id.str()},
              {"name", g.name},
              {"description", g.description},
              {"level", to_string(g.level)},
              {"kind", to_string(g.kind)},
              {"parent", g.parent ? json(g.parent->str()) : json(nullptr)},
              {"status", to_string(g.status)},
              {"discard_reason", g.discard_reason ? json(*g.discard_reason) : json(nullptr)},
              {"origin_round", g.origin_round}};
}

json to_json(const GoalTree &tree) {
  json goals = json::array();
  for (const auto &[id, g] : tree.goals()) {
    goals.push_back(to_json(g));
  }
  return json{{"actor", {{"name", tree.actor().name}, {"description", tree.actor().description}}},
              {"goals", goals}};
}

GoalTree tree_from_json(const json &j) {
  try {
    Actor actor{j.at("actor").at("name").get<std::string>(),
                j.at("actor").at("description").get<std::string>()};
    std::vector<Goal> goals;
    for (const auto &gj : j.at("goals")) {
      Goal g;
      g.id = GoalId::parse(gj.at("id").get<std::string>());
      g.name = gj.at("name").get<std::string>();
      g.description = gj.at("description").get<std::string>();
      g.level = gj.at("level").get<std::string>() == "high" ? Level::high : Level::low;
      g.kind = parse_kind(gj.at("kind").get<std::string>()).value_or(Kind::unknown);
      if (!gj.at("parent").is_null()) g.parent = GoalId::parse(gj.at("parent").get<std::string>());
      const auto status = gj.at("status").get<std::string>();
      g.status = status == "accepted" ? Status::accepted
                 : status == "discarded" ? Status::discarded
                                         : Status::proposed;
      if (!gj.at("discard_reason").is_null()) g.discard_reason = gj.at("discard_reason").get<std::string>();
      g.origin_round = gj.at("origin_round").get<int>();
      goals.push_back(std::move(g));
    }
    return GoalTree::restore(std::move(actor), std::move(goals));
  } catch (const json::exception &e) {
    throw Error(ErrorCode::CorruptSession, std::string("goal tree: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == ErrorCode::CorruptSession) throw;
    throw Error(ErrorCode::CorruptSession, e.message());
  }
}

} // namespace seal::goals
