#pragma once

// Random valid-model generator for round-trip and invariant property
// tests. Every produced model passes validate() with zero errors.

#include <random>
#include <string>
#include <vector>

#include "tmkit/model.hpp"

namespace testsupport {

class ModelGen {
 public:
  explicit ModelGen(std::uint64_t seed) : rng_(seed) {}

  tmkit::Model operator()() {
    tmkit::Model model;
    counter_ = 0;
    int roots = pick(1, 3);
    for (int i = 0; i < roots; ++i) gen_machine(model, "", 0);

    // sorts: lane names plus the occasional machine-backed sort
    std::set<std::string> lanes;
    for (const auto& m : model.machines)
      for (const auto& s : m.stages) lanes.insert(s.lane);
    for (const auto& lane : lanes) {
      if (lane == "default") continue;
      tmkit::ThingSort sort;
      sort.name = lane;
      if (chance(3)) sort.machine_ref = model.machines[0].id;
      if (chance(2))
        sort.attributes.push_back(
            {"a" + std::to_string(pick(0, 9)), tmkit::AttributeSlot::Kind::Int});
      model.sorts.push_back(std::move(sort));
    }

    int n_guards = pick(0, 3);
    for (int i = 0; i < n_guards; ++i) {
      tmkit::Guard g;
      g.id = "g" + std::to_string(i);
      switch (pick(0, 2)) {
        case 0: {
          long lo = pick(-5, 5);
          g.kind = tmkit::RangeCheck{"attr", lo, lo + pick(0, 10)};
          break;
        }
        case 1: {
          tmkit::Scripted sc;
          int n = pick(1, 3);
          for (int k = 0; k < n; ++k)
            sc.outcomes.push_back(chance(2) ? "pass" : "fail");
          g.kind = sc;
          break;
        }
        default:
          g.kind = tmkit::Bernoulli{pick(0, 10) / 10.0};
      }
      if (chance(2)) g.description = "guard number " + std::to_string(i);
      model.guards.push_back(std::move(g));
    }

    // same-machine flows over the legal adjacency pairs
    for (const auto& m : model.machines)
      for (const auto& from : m.stages)
        for (const auto& to : m.stages) {
          if (from.lane != to.lane) continue;
          if (!tmkit::legal_flow(from.kind, to.kind, true)) continue;
          if (!chance(2)) continue;
          tmkit::FlowArc f;
          f.from = {m.id, from.kind, from.lane};
          f.to = {m.id, to.kind, to.lane};
          if (from.kind == tmkit::StageKind::Process && !model.guards.empty() &&
              chance(3))
            f.guard = model.guards[static_cast<std::size_t>(
                                       pick(0, static_cast<int>(
                                                   model.guards.size()) -
                                                   1))]
                          .id;
          if (chance(4)) f.label = "f" + std::to_string(pick(0, 99));
          model.flows.push_back(std::move(f));
        }

    // cross-machine transfer-to-transfer flows between lane-compatible pairs
    std::vector<tmkit::StageRef> transfers;
    for (const auto& m : model.machines)
      for (const auto& s : m.stages)
        if (s.kind == tmkit::StageKind::Transfer)
          transfers.push_back({m.id, s.kind, s.lane});
    for (const auto& a : transfers)
      for (const auto& b : transfers) {
        if (a.machine == b.machine || a.lane != b.lane) continue;
        if (!chance(4)) continue;
        model.flows.push_back({a, b, std::nullopt, std::nullopt});
      }

    // a few triggers between arbitrary stages (cross-sort is the point)
    std::vector<tmkit::StageRef> all_stages;
    for (const auto& m : model.machines)
      for (const auto& s : m.stages) all_stages.push_back({m.id, s.kind, s.lane});
    if (all_stages.size() >= 2) {
      int n_triggers = pick(0, 2);
      for (int i = 0; i < n_triggers; ++i) {
        const auto& from = all_stages[static_cast<std::size_t>(
            pick(0, static_cast<int>(all_stages.size()) - 1))];
        const auto& to = all_stages[static_cast<std::size_t>(
            pick(0, static_cast<int>(all_stages.size()) - 1))];
        model.triggers.push_back({from, to, std::nullopt});
      }
    }
    return model;
  }

 private:
  int pick(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  }
  bool chance(int one_in) { return pick(1, one_in) == 1; }

  void gen_machine(tmkit::Model& model, const std::string& parent, int depth) {
    tmkit::Machine m;
    m.name = "m" + std::to_string(counter_++);
    m.id = parent.empty() ? m.name : parent + "." + m.name;
    if (!parent.empty()) m.parent = parent;
    std::string lane = chance(2) ? "default" : "track" + std::to_string(pick(0, 2));
    for (tmkit::StageKind k : tmkit::kAllStageKinds) {
      if (!chance(2)) continue;
      tmkit::Stage st;
      st.kind = k;
      st.lane = lane;
      if (k == tmkit::StageKind::Receive && chance(3)) {
        st.has_queue = true;
        if (chance(2)) st.queue_capacity = pick(1, 5);
      }
      if (k == tmkit::StageKind::Process && chance(4)) st.state_flag = "busy";
      m.stages.push_back(st);
    }
    std::string id = m.id;
    std::size_t index = model.machines.size();
    model.machines.push_back(std::move(m));
    if (!parent.empty())
      for (auto& pm : model.machines)
        if (pm.id == parent) pm.submachines.push_back(id);
    if (depth < 2) {
      int children = pick(0, 2);
      for (int i = 0; i < children; ++i) gen_machine(model, id, depth + 1);
      // submachine registration happens as children are created, so the
      // machines vector stays in pre-order (parse order)
      (void)index;
    }
  }

  std::mt19937_64 rng_;
  int counter_ = 0;
};

}  // namespace testsupport
