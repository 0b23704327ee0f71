#pragma once

// Events carve a region out of a model; chronologies order events into a
// directed graph (cycles allowed for rework loops).

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tmkit/model.hpp"

namespace tmkit {

/// A model subgraph. Arcs are identified by index into Model::flows /
/// Model::triggers so identity survives re-serialization.
struct Region {
  std::set<std::string> machines;
  std::set<StageRef> stages;
  std::set<std::size_t> flows;
  std::set<std::size_t> triggers;

  bool empty() const {
    return machines.empty() && stages.empty() && flows.empty() &&
           triggers.empty();
  }

  friend bool operator==(const Region&, const Region&) = default;
};

/// Boolean state-flag update carried by zero-duration bookkeeping events
/// (set busy / set not busy).
struct FlagAssign {
  std::string flag;  // e.g. "Coloring.busy"
  bool value = false;

  friend bool operator==(const FlagAssign&, const FlagAssign&) = default;
};

struct Event {
  std::string id;    // e.g. "E1"
  std::string name;  // display string
  Region region;
  int duration = 1;  // periods; 0 = bookkeeping, invisible in tables
  std::optional<double> intensity;
  std::vector<FlagAssign> effects;

  friend bool operator==(const Event&, const Event&) = default;
};

struct RegionSelector {
  // dotted paths ("Coloring", "Coloring.process") and arc patterns
  // ("A.release -> B.transfer")
  std::vector<std::string> entries;

  friend bool operator==(const RegionSelector&, const RegionSelector&) =
      default;
};

namespace detail {

inline void include_machine(const Model& model, const Machine& m, Region& r) {
  r.machines.insert(m.id);
  for (const auto& s : m.stages) r.stages.insert({m.id, s.kind, s.lane});
  for (const auto& sub : m.submachines)
    if (const Machine* child = model.find_machine(sub))
      include_machine(model, *child, r);
}

inline std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t");
  std::size_t b = s.find_last_not_of(" \t");
  if (a == std::string_view::npos) return "";
  return std::string(s.substr(a, b - a + 1));
}

}  // namespace detail

/// Resolves a selector to a closed subgraph. Arcs whose endpoints fall
/// inside the selected stage set are pulled in automatically; an arc
/// pattern with an endpoint outside the region is dropped and reported
/// through `warnings`.
inline Event carve_event(const Model& model, const std::string& id,
                         const RegionSelector& selector, int duration = 1,
                         std::vector<std::string>* warnings = nullptr) {
  if (duration < 0) throw TmError(Errc::InvalidModel, "negative duration");
  Event ev;
  ev.id = id;
  ev.duration = duration;

  std::vector<std::pair<StageRef, StageRef>> wanted_arcs;
  for (const auto& raw : selector.entries) {
    if (auto arrow = raw.find("->"); arrow != std::string::npos) {
      auto lhs = resolve_path(model, detail::trim(raw.substr(0, arrow)));
      auto rhs = resolve_path(model, detail::trim(raw.substr(arrow + 2)));
      for (const auto* side : {&lhs, &rhs}) {
        if (const auto* err = std::get_if<PathError>(side))
          throw TmError(Errc::PathNotFound,
                        "arc pattern endpoint in '" + raw +
                            "' (longest prefix: '" + err->longest_prefix +
                            "')");
      }
      const auto& l = std::get<ResolvedPath>(lhs);
      const auto& r = std::get<ResolvedPath>(rhs);
      if (!l.stage || !r.stage)
        throw TmError(Errc::PathNotFound,
                      "arc pattern '" + raw + "' must name two stages");
      wanted_arcs.emplace_back(*l.stage, *r.stage);
      continue;
    }
    auto res = resolve_path(model, raw);
    if (const auto* err = std::get_if<PathError>(&res))
      throw TmError(Errc::PathNotFound, "'" + raw + "' (longest prefix: '" +
                                            err->longest_prefix + "')");
    const auto& ok = std::get<ResolvedPath>(res);
    switch (ok.kind) {
      case ResolvedPath::Kind::Root:
        for (const Machine* root : model.roots())
          detail::include_machine(model, *root, ev.region);
        break;
      case ResolvedPath::Kind::MachineRef:
        detail::include_machine(model, *ok.machine, ev.region);
        break;
      case ResolvedPath::Kind::StageRef_:
        ev.region.stages.insert(*ok.stage);
        break;
    }
  }

  auto stage_in = [&](const StageRef& r) { return ev.region.stages.count(r); };
  for (std::size_t i = 0; i < model.flows.size(); ++i)
    if (stage_in(model.flows[i].from) && stage_in(model.flows[i].to))
      ev.region.flows.insert(i);
  for (std::size_t i = 0; i < model.triggers.size(); ++i)
    if (stage_in(model.triggers[i].from) && stage_in(model.triggers[i].to))
      ev.region.triggers.insert(i);

  for (const auto& [from, to] : wanted_arcs) {
    bool found = false;
    for (std::size_t i = 0; i < model.flows.size(); ++i)
      if (model.flows[i].from == from && model.flows[i].to == to) {
        found = true;
        if (stage_in(from) && stage_in(to))
          ev.region.flows.insert(i);
        else if (warnings)
          warnings->push_back("arc " + to_string(from) + " -> " +
                              to_string(to) +
                              " excluded: endpoint outside the region");
      }
    for (std::size_t i = 0; i < model.triggers.size(); ++i)
      if (model.triggers[i].from == from && model.triggers[i].to == to) {
        found = true;
        if (stage_in(from) && stage_in(to))
          ev.region.triggers.insert(i);
        else if (warnings)
          warnings->push_back("arc " + to_string(from) + " -> " +
                              to_string(to) +
                              " excluded: endpoint outside the region");
      }
    if (!found)
      throw TmError(Errc::PathNotFound, "no arc " + to_string(from) + " -> " +
                                            to_string(to) + " in the model");
  }

  if (ev.region.empty())
    throw TmError(Errc::EmptyRegion, "selector for event '" + id +
                                         "' selects no model elements");
  return ev;
}

// ---------------------------------------------------------------------------
// Coverage

/// Stable string key per model element, used by coverage reports.
inline std::vector<std::string> model_elements(const Model& model) {
  std::vector<std::string> out;
  for (const auto& m : model.machines) {
    out.push_back("machine " + m.id);
    for (const auto& s : m.stages)
      out.push_back("stage " + to_string(StageRef{m.id, s.kind, s.lane}));
  }
  for (std::size_t i = 0; i < model.flows.size(); ++i)
    out.push_back("flow#" + std::to_string(i));
  for (std::size_t i = 0; i < model.triggers.size(); ++i)
    out.push_back("trigger#" + std::to_string(i));
  return out;
}

struct CoverageReport {
  std::vector<std::string> uncovered;  // elements in no region
  // element key -> ids of the events whose regions share it (size >= 2)
  std::map<std::string, std::vector<std::string>> overlaps;
};

/// Alternative slicings of one model are first-class: overlap is reported
/// but is not an error (subevents may be subsumed into larger events).
inline CoverageReport check_coverage(const Model& model,
                                     const std::vector<Event>& events) {
  std::map<std::string, std::vector<std::string>> owners;
  for (const auto& ev : events) {
    for (const auto& m : ev.region.machines)
      owners["machine " + m].push_back(ev.id);
    for (const auto& s : ev.region.stages)
      owners["stage " + to_string(s)].push_back(ev.id);
    for (auto i : ev.region.flows)
      owners["flow#" + std::to_string(i)].push_back(ev.id);
    for (auto i : ev.region.triggers)
      owners["trigger#" + std::to_string(i)].push_back(ev.id);
  }
  CoverageReport rep;
  for (const auto& el : model_elements(model)) {
    auto it = owners.find(el);
    if (it == owners.end())
      rep.uncovered.push_back(el);
    else if (it->second.size() > 1)
      rep.overlaps[el] = it->second;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Chronology

struct ChronEdge {
  std::string from;
  std::string to;
  std::optional<std::string> guard;    // both set or both empty
  std::optional<std::string> outcome;  // label the guard must produce

  friend bool operator==(const ChronEdge&, const ChronEdge&) = default;
};

struct Chronology {
  std::vector<Event> events;  // declaration order
  std::vector<ChronEdge> edges;
  std::string initial;

  const Event* find_event(std::string_view id) const {
    for (const auto& e : events)
      if (e.id == id) return &e;
    return nullptr;
  }

  std::vector<const ChronEdge*> out_edges(std::string_view from) const {
    std::vector<const ChronEdge*> out;
    for (const auto& e : edges)
      if (e.from == from) out.push_back(&e);
    return out;
  }

  friend bool operator==(const Chronology&, const Chronology&) = default;
};

/// Validates and assembles a chronology. Branching out-edges must carry
/// outcome labels of a single guard and cover every declared outcome of
/// that guard exactly once. Every event must be reachable from `initial`.
inline Chronology build_chronology(const Model& model,
                                   std::vector<Event> events,
                                   std::vector<ChronEdge> edges,
                                   std::string initial) {
  Chronology chr{std::move(events), std::move(edges), std::move(initial)};
  auto known = [&](std::string_view id) { return chr.find_event(id); };

  if (!known(chr.initial))
    throw TmError(Errc::UnknownEvent,
                  "initial event '" + chr.initial + "' is not declared");
  for (const auto& e : chr.edges) {
    for (const auto* end : {&e.from, &e.to})
      if (!known(*end))
        throw TmError(Errc::UnknownEvent,
                      "edge endpoint '" + *end + "' is not declared");
    if (e.guard && !model.find_guard(*e.guard))
      throw TmError(Errc::UnknownEvent,
                    "edge guard '" + *e.guard + "' is not declared");
  }

  // Exhaustive branches: every outcome of the guard on exactly one edge.
  for (const auto& ev : chr.events) {
    auto outs = chr.out_edges(ev.id);
    bool any_labeled = std::any_of(outs.begin(), outs.end(),
                                   [](auto* e) { return e->guard.has_value(); });
    if (!any_labeled) {
      if (outs.size() > 1)
        throw TmError(Errc::NonexhaustiveBranch,
                      "event '" + ev.id +
                          "' has several out-edges but no guard labels");
      continue;
    }
    std::string guard_id;
    std::map<std::string, int> seen;
    for (const auto* e : outs) {
      if (!e->guard || !e->outcome)
        throw TmError(Errc::NonexhaustiveBranch,
                      "event '" + ev.id +
                          "' mixes labeled and unlabeled out-edges");
      if (guard_id.empty())
        guard_id = *e->guard;
      else if (guard_id != *e->guard)
        throw TmError(Errc::NonexhaustiveBranch,
                      "event '" + ev.id + "' branches on two guards");
      seen[*e->outcome]++;
    }
    const Guard* g = model.find_guard(guard_id);
    for (const auto& outcome : g->outcomes()) {
      auto it = seen.find(outcome);
      if (it == seen.end() || it->second != 1)
        throw TmError(Errc::NonexhaustiveBranch,
                      "event '" + ev.id + "': outcome '" + outcome +
                          "' of guard '" + guard_id +
                          "' must appear on exactly one out-edge");
    }
    // edges beyond the declared outcomes are permitted: a config script
    // override may produce them at runtime
    for (const auto& [outcome, count] : seen)
      if (count > 1)
        throw TmError(Errc::NonexhaustiveBranch,
                      "event '" + ev.id + "': outcome '" + outcome +
                          "' appears on several out-edges");
  }

  // Reachability from initial.
  std::set<std::string> reached{chr.initial};
  std::vector<std::string> stack{chr.initial};
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    for (const auto* e : chr.out_edges(cur))
      if (reached.insert(e->to).second) stack.push_back(e->to);
  }
  for (const auto& ev : chr.events)
    if (!reached.count(ev.id))
      throw TmError(Errc::UnreachableEvent,
                    "event '" + ev.id + "' is unreachable from '" +
                        chr.initial + "'");
  return chr;
}

}  // namespace tmkit
