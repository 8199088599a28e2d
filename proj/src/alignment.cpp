#include "seal/alignment.hpp"

#include "seal/error.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

namespace seal::alignment {

PlanValidation validate_call_plan(const std::vector<CallStep> &steps, const openapi::EndpointCatalog &catalog) {
  PlanValidation result;
  bool blocked = false;
  auto block = [&](std::string code, std::string message, std::string subject) {
    result.issues.push_back({std::move(code), std::move(message), std::move(subject), false});
    blocked = true;
  };
  if (steps.empty()) {
    block("EmptyPlan", "a call plan needs at least one step", "");
  }
  CallPlan plan;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const int index = static_cast<int>(i) + 1;
    CallStep step = steps[i];
    const auto key = step.endpoint.str();
    auto endpoint = openapi::lookup_endpoint(catalog, step.endpoint.verb, step.endpoint.path);
    if (!endpoint) {
      block("EndpointUnknown", "step " + std::to_string(index) + " calls " + key + ", which is not in the catalog",
            key);
      continue;
    }
    for (const auto &[name, binding] : step.bindings) {
      auto param = std::find_if(endpoint->parameters.begin(), endpoint->parameters.end(),
                                [&](const openapi::Parameter &p) { return p.name == name; });
      if (param == endpoint->parameters.end()) {
        block("UnknownParameter", "step " + std::to_string(index) + " binds '" + name + "', which " + key +
                                      " does not declare",
              key);
      }
      if (binding.source == Binding::Source::output_of && (binding.step < 1 || binding.step >= index)) {
        block("ForwardReference", "step " + std::to_string(index) + " parameter '" + name +
                                      "' reads the output of step " + std::to_string(binding.step) +
                                      ", which does not precede it",
              key);
      }
    }
    for (const auto &param : endpoint->parameters) {
      if (param.required && !step.bindings.contains(param.name)) {
        step.bindings.emplace(param.name,
                              Binding::make_actor_input(param.name + " (" + std::string(openapi::to_string(param.location)) +
                                                        ", " + param.schema_type + ")"));
        result.issues.push_back({"AutoBound",
                                 "step " + std::to_string(index) + " required parameter '" + param.name +
                                     "' bound to actor input",
                                 key, true});
      }
    }
    plan.steps.push_back(std::move(step));
  }
  if (!blocked) {
    result.plan = std::move(plan);
  }
  return result;
}

PlanValidation validate_call_plan(const prompts::MappingDraft &draft, const openapi::EndpointCatalog &catalog) {
  if (!draft.mapped()) {
    return PlanValidation{std::nullopt, {{"NoSteps", "draft is an unmappable verdict", draft.goal_id.str(), false}}};
  }
  return validate_call_plan(draft.steps(), catalog);
}

Ratio coverage_of(const Session &session) {
  Ratio r;
  for (const auto &g : session.goal_tree.low_goals()) {
    ++r.denominator;
    const bool excluded = g.status == goals::Status::discarded || g.kind == goals::Kind::non_functional;
    auto it = session.alignment.find(g.id);
    if (!excluded && it != session.alignment.end() && it->second.source == MappingOutcome::Source::plan) {
      ++r.numerator;
    }
  }
  return r;
}

AlignmentReport build_report(const Session &session) {
  if (session.stage(kStageMap) == StageState::not_run) {
    throw Error(ErrorCode::MapNotRun, "the map stage has not run for session " + session.id);
  }
  AlignmentReport report;
  report.session_id = session.id;
  report.template_version = session.template_version;
  report.provider_identity = session.provider_identity;
  report.generated_at = session.last_run_at;

  std::set<openapi::EndpointKey> used;
  for (const auto &g : session.goal_tree.low_goals()) {
    AlignmentEntry entry{g.id, Unmappable{kNotMapped}};
    if (g.status == goals::Status::discarded) {
      entry.outcome = Unmappable{"excluded: discarded (" + g.discard_reason.value_or("") + ")"};
      report.excluded_discarded.push_back(g.id);
    } else if (g.kind == goals::Kind::non_functional) {
      entry.outcome = Unmappable{kExcludedNonFunctional};
      report.excluded_non_functional.push_back(g.id);
    } else {
      auto it = session.alignment.find(g.id);
      if (it == session.alignment.end()) {
        report.unmapped_goals.push_back(g.id);
      } else if (it->second.source == MappingOutcome::Source::plan && it->second.plan) {
        entry.outcome = *it->second.plan;
        report.mapped_goals.push_back(g.id);
        for (const auto &step : it->second.plan->steps) {
          used.insert(step.endpoint);
        }
      } else {
        entry.outcome = Unmappable{it->second.source == MappingOutcome::Source::validation_failed
                                       ? std::string(kValidationFailedReason)
                                       : it->second.reason};
        report.unmapped_goals.push_back(g.id);
      }
    }
    report.entries.push_back(std::move(entry));
  }
  report.coverage = coverage_of(session);
  if (session.catalog) {
    for (const auto &ep : session.catalog->endpoints) {
      if (!used.contains(ep.key())) {
        report.unused_endpoints.push_back(ep.key());
      }
    }
  }
  return report;
}

json report_to_json(const AlignmentReport &report) {
  auto ids = [](const std::vector<goals::GoalId> &list) {
    json out = json::array();
    for (const auto &id : list) out.push_back(id.str());
    return out;
  };
  json entries = json::array();
  for (const auto &e : report.entries) {
    json entry{{"goal_id", e.goal_id.str()}};
    if (const auto *plan = std::get_if<CallPlan>(&e.outcome)) {
      entry["outcome"] = "mapped";
      entry["plan"] = to_json(*plan);
    } else {
      entry["outcome"] = "unmappable";
      entry["reason"] = std::get<Unmappable>(e.outcome).reason;
    }
    entries.push_back(std::move(entry));
  }
  json unused = json::array();
  for (const auto &k : report.unused_endpoints) {
    unused.push_back({{"verb", openapi::to_string(k.verb)}, {"path", k.path}});
  }
  return json{{"session_id", report.session_id},
              {"entries", entries},
              {"coverage", ratio_to_json(report.coverage)},
              {"mapped_goals", ids(report.mapped_goals)},
              {"unmapped_goals", ids(report.unmapped_goals)},
              {"excluded_non_functional", ids(report.excluded_non_functional)},
              {"excluded_discarded", ids(report.excluded_discarded)},
              {"unused_endpoints", unused},
              {"template_version", report.template_version},
              {"provider", report.provider_identity},
              {"generated_at", report.generated_at}};
}

std::string render_report_text(const AlignmentReport &report, const Session &session) {
  auto name_of = [&](const goals::GoalId &id) {
    const auto *g = session.goal_tree.find(id);
    return g ? g->name : std::string{};
  };
  std::ostringstream out;
  out << "Alignment report for session " << report.session_id << "\n";
  out << "Actor: " << session.actor().name << "\n";
  out << "Coverage: " << report.coverage.numerator << "/" << report.coverage.denominator << " ("
      << std::fixed << std::setprecision(1) << report.coverage.value() * 100.0 << "%)\n";

  out << "\nMapped\n";
  if (report.mapped_goals.empty()) out << "  (none)\n";
  for (const auto &e : report.entries) {
    const auto *plan = std::get_if<CallPlan>(&e.outcome);
    if (!plan) continue;
    out << "  " << e.goal_id.str() << " " << name_of(e.goal_id) << "\n";
    for (std::size_t i = 0; i < plan->steps.size(); ++i) {
      const auto &step = plan->steps[i];
      out << "    " << i + 1 << ". " << step.endpoint.str();
      if (!step.bindings.empty()) {
        out << "  [";
        bool first = true;
        for (const auto &[param, b] : step.bindings) {
          out << (first ? "" : ", ") << param << " <- ";
          first = false;
          switch (b.source) {
          case Binding::Source::literal: out << b.literal.dump(); break;
          case Binding::Source::output_of: out << "step " << b.step << "." << b.field; break;
          case Binding::Source::actor_input: out << "actor input"; break;
          }
        }
        out << "]";
      }
      out << "\n";
    }
  }

  out << "\nUnmappable\n";
  if (report.mapped_goals.size() == report.entries.size()) out << "  (none)\n";
  for (const auto &e : report.entries) {
    if (const auto *u = std::get_if<Unmappable>(&e.outcome)) {
      out << "  " << e.goal_id.str() << " " << name_of(e.goal_id) << ": " << u->reason << "\n";
    }
  }

  out << "\nAPI Gaps\n";
  out << "  Functional goals the current endpoints cannot enforce:\n";
  if (report.unmapped_goals.empty()) out << "    (none)\n";
  for (const auto &id : report.unmapped_goals) {
    out << "    " << id.str() << " " << name_of(id) << "\n";
  }
  out << "  Endpoints no goal uses:\n";
  if (report.unused_endpoints.empty()) out << "    (none)\n";
  for (const auto &k : report.unused_endpoints) {
    out << "    " << k.str() << "\n";
  }
  return out.str();
}

} // namespace seal::alignment
