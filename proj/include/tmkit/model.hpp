#pragma once

// Core metamodel: machines with five-stage flow semantics, flow and
// trigger arcs, guards, thing sorts, and structural validation.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tmkit {

enum class StageKind { Create, Process, Receive, Release, Transfer };

inline constexpr std::array<StageKind, 5> kAllStageKinds = {
    StageKind::Create, StageKind::Process, StageKind::Receive,
    StageKind::Release, StageKind::Transfer};

inline std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::Create: return "create";
    case StageKind::Process: return "process";
    case StageKind::Receive: return "receive";
    case StageKind::Release: return "release";
    case StageKind::Transfer: return "transfer";
  }
  return "?";
}

inline std::optional<StageKind> stage_kind_from(std::string_view s) {
  for (StageKind k : kAllStageKinds)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

enum class Errc {
  InvalidModel,
  EmptyRegion,
  PathNotFound,
  UnknownEvent,
  UnreachableEvent,
  NonexhaustiveBranch,
  ConfigMismatch,
  ZeroDurationCycle,
  HorizonExceeded,
  MissingAttribute,
  RegionMismatch,
};

inline std::string_view to_string(Errc c) {
  switch (c) {
    case Errc::InvalidModel: return "INVALID_MODEL";
    case Errc::EmptyRegion: return "EMPTY_REGION";
    case Errc::PathNotFound: return "PATH_NOT_FOUND";
    case Errc::UnknownEvent: return "UNKNOWN_EVENT";
    case Errc::UnreachableEvent: return "UNREACHABLE_EVENT";
    case Errc::NonexhaustiveBranch: return "NONEXHAUSTIVE_BRANCH";
    case Errc::ConfigMismatch: return "CONFIG_MISMATCH";
    case Errc::ZeroDurationCycle: return "ZERO_DURATION_CYCLE";
    case Errc::HorizonExceeded: return "HORIZON_EXCEEDED";
    case Errc::MissingAttribute: return "MISSING_ATTRIBUTE";
    case Errc::RegionMismatch: return "REGION_MISMATCH";
  }
  return "?";
}

class TmError : public std::runtime_error {
 public:
  TmError(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Identifies one stage box: owning machine path, kind, and lane.
/// The lane names the thing sort flowing through that track; a machine
/// carrying several sorts has one stage per (kind, lane).
struct StageRef {
  std::string machine;  // dotted machine path, e.g. "Time.hour"
  StageKind kind = StageKind::Create;
  std::string lane = "default";

  friend bool operator==(const StageRef&, const StageRef&) = default;
  friend auto operator<=>(const StageRef&, const StageRef&) = default;
};

inline std::string to_string(const StageRef& r) {
  std::string s = r.machine;
  if (!s.empty()) s += '.';
  s += to_string(r.kind);
  if (r.lane != "default") s += ':' + r.lane;
  return s;
}

struct Stage {
  StageKind kind = StageKind::Create;
  std::string lane = "default";
  bool has_queue = false;                 // receive stages may buffer arrivals
  std::optional<int> queue_capacity;      // empty with has_queue => unbounded
  std::optional<std::string> state_flag;  // busy-flag name on process stages

  friend bool operator==(const Stage&, const Stage&) = default;
};

struct Machine {
  std::string id;    // dotted path; doubles as the unique identifier
  std::string name;  // last path segment
  std::optional<std::string> parent;
  std::vector<std::string> submachines;  // child ids, declaration order
  std::vector<Stage> stages;             // declaration order

  const Stage* find_stage(StageKind kind, std::string_view lane) const {
    for (const auto& s : stages)
      if (s.kind == kind && s.lane == lane) return &s;
    return nullptr;
  }

  friend bool operator==(const Machine&, const Machine&) = default;
};

struct AttributeSlot {
  enum class Kind { Int, String, Bool };
  std::string name;
  Kind kind = Kind::Int;

  friend bool operator==(const AttributeSlot&, const AttributeSlot&) = default;
};

inline std::string_view to_string(AttributeSlot::Kind k) {
  switch (k) {
    case AttributeSlot::Kind::Int: return "int";
    case AttributeSlot::Kind::String: return "string";
    case AttributeSlot::Kind::Bool: return "bool";
  }
  return "?";
}

struct ThingSort {
  std::string name;
  std::optional<std::string> machine_ref;  // thing/machine duality
  std::vector<AttributeSlot> attributes;

  friend bool operator==(const ThingSort&, const ThingSort&) = default;
};

struct RangeCheck {
  std::string attribute;
  long min = 0;
  long max = 0;
  friend bool operator==(const RangeCheck&, const RangeCheck&) = default;
};

struct Scripted {
  std::vector<std::string> outcomes;  // consumed cyclically at runtime
  friend bool operator==(const Scripted&, const Scripted&) = default;
};

struct Bernoulli {
  double p = 0.0;
  friend bool operator==(const Bernoulli&, const Bernoulli&) = default;
};

struct Guard {
  std::string id;
  std::variant<RangeCheck, Scripted, Bernoulli> kind;
  std::string description;

  /// Distinct outcome labels this guard can produce, in a stable order.
  std::vector<std::string> outcomes() const {
    if (const auto* s = std::get_if<Scripted>(&kind)) {
      std::vector<std::string> out;
      for (const auto& o : s->outcomes)
        if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
      return out;
    }
    return {"pass", "fail"};
  }

  friend bool operator==(const Guard&, const Guard&) = default;
};

struct FlowArc {
  StageRef from;
  StageRef to;
  std::optional<std::string> guard;
  std::optional<std::string> label;

  friend bool operator==(const FlowArc&, const FlowArc&) = default;
};

struct TriggerArc {
  StageRef from;
  StageRef to;
  std::optional<std::string> label;

  friend bool operator==(const TriggerArc&, const TriggerArc&) = default;
};

struct Model {
  std::vector<Machine> machines;  // declaration order, parents before children
  std::vector<ThingSort> sorts;
  std::vector<Guard> guards;
  std::vector<FlowArc> flows;
  std::vector<TriggerArc> triggers;

  const Machine* find_machine(std::string_view id) const {
    for (const auto& m : machines)
      if (m.id == id) return &m;
    return nullptr;
  }

  const Stage* find_stage(const StageRef& r) const {
    const Machine* m = find_machine(r.machine);
    return m ? m->find_stage(r.kind, r.lane) : nullptr;
  }

  const Guard* find_guard(std::string_view id) const {
    for (const auto& g : guards)
      if (g.id == id) return &g;
    return nullptr;
  }

  const ThingSort* find_sort(std::string_view name) const {
    for (const auto& s : sorts)
      if (s.name == name) return &s;
    return nullptr;
  }

  std::vector<const Machine*> roots() const {
    std::vector<const Machine*> out;
    for (const auto& m : machines)
      if (!m.parent) out.push_back(&m);
    return out;
  }

  friend bool operator==(const Model&, const Model&) = default;
};

// ---------------------------------------------------------------------------
// legal_flow

/// The stage-adjacency relation for flow arcs. Receive only accepts flow
/// from outside (via the boundary transfer pair); Release buffers outbound
/// things until Transfer exports them; Create feeds the internal stream.
inline constexpr bool legal_flow(StageKind from, StageKind to,
                                 bool same_machine) {
  using K = StageKind;
  if (!same_machine) return from == K::Transfer && to == K::Transfer;
  if (from == K::Transfer && to == K::Receive) return true;
  if (from == K::Receive && (to == K::Process || to == K::Release)) return true;
  if (from == K::Process && to == K::Release) return true;
  if (from == K::Create && (to == K::Process || to == K::Release)) return true;
  if (from == K::Release && to == K::Transfer) return true;
  return false;
}

// ---------------------------------------------------------------------------
// validate

struct Violation {
  enum class Severity { Error, Warning };
  std::string code;      // e.g. "ILLEGAL_ADJACENCY"
  std::string location;  // dotted path or arc description
  std::string message;
  Severity severity = Severity::Error;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const {
    return std::none_of(violations.begin(), violations.end(), [](auto& v) {
      return v.severity == Violation::Severity::Error;
    });
  }
  bool empty() const { return violations.empty(); }
  std::size_t error_count() const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [](auto& v) {
          return v.severity == Violation::Severity::Error;
        }));
  }
};

namespace detail {

inline void add(ValidationReport& rep, std::string code, std::string loc,
                std::string msg,
                Violation::Severity sev = Violation::Severity::Error) {
  rep.violations.push_back(
      {std::move(code), std::move(loc), std::move(msg), sev});
}

}  // namespace detail

/// Structural well-formedness. Malformed models yield violations, never
/// throws. Deterministic: the report is ordered by location path.
inline ValidationReport validate(const Model& model) {
  ValidationReport rep;

  // Containment forest and sibling name uniqueness.
  for (const auto& m : model.machines) {
    if (m.parent && !model.find_machine(*m.parent))
      detail::add(rep, "UNKNOWN_REFERENCE", m.id,
                  "parent machine '" + *m.parent + "' does not exist");
    std::set<std::string> seen;
    for (const auto& sub : m.submachines) {
      const Machine* child = model.find_machine(sub);
      if (!child) {
        detail::add(rep, "UNKNOWN_REFERENCE", m.id,
                    "submachine '" + sub + "' does not exist");
        continue;
      }
      if (!child->parent || *child->parent != m.id)
        detail::add(rep, "BROKEN_CONTAINMENT", sub,
                    "submachine does not name '" + m.id + "' as parent");
      if (!seen.insert(child->name).second)
        detail::add(rep, "DUPLICATE_NAME", m.id,
                    "duplicate submachine name '" + child->name + "'");
    }
    // ancestor walk; bounded by machine count, so a cycle is detectable
    std::set<std::string> visited{m.id};
    const Machine* cur = &m;
    while (cur->parent) {
      const Machine* p = model.find_machine(*cur->parent);
      if (!p) break;
      if (!visited.insert(p->id).second) {
        detail::add(rep, "CONTAINMENT_CYCLE", m.id,
                    "machine is its own ancestor");
        break;
      }
      cur = p;
    }
  }
  {
    std::set<std::string> seen;
    for (const Machine* r : model.roots())
      if (!seen.insert(r->name).second)
        detail::add(rep, "DUPLICATE_NAME", r->id,
                    "duplicate top-level machine name '" + r->name + "'");
  }

  // Stages: (kind, lane) uniqueness, lane names, queue/state placement.
  for (const auto& m : model.machines) {
    std::set<std::pair<StageKind, std::string>> seen;
    for (const auto& s : m.stages) {
      std::string loc = m.id + "." + std::string(to_string(s.kind));
      if (s.lane.empty())
        detail::add(rep, "EMPTY_LANE", loc, "lane sort name must be nonempty");
      if (!seen.insert({s.kind, s.lane}).second)
        detail::add(rep, "DUPLICATE_STAGE", loc,
                    "duplicate stage for lane '" + s.lane + "'");
      if (s.has_queue && s.kind != StageKind::Receive)
        detail::add(rep, "MISPLACED_QUEUE", loc,
                    "queues attach to receive stages only");
      if (s.has_queue && s.queue_capacity && *s.queue_capacity < 1)
        detail::add(rep, "BAD_QUEUE", loc, "queue capacity must be positive");
      if (s.state_flag && s.kind != StageKind::Process)
        detail::add(rep, "MISPLACED_STATE", loc,
                    "state flags attach to process stages only",
                    Violation::Severity::Warning);
    }
    if (m.stages.empty() && m.submachines.empty())
      detail::add(rep, "EMPTY_MACHINE", m.id,
                  "machine declares no stages and no submachines",
                  Violation::Severity::Warning);
  }

  // Sorts and guards.
  for (const auto& s : model.sorts) {
    if (s.machine_ref && !model.find_machine(*s.machine_ref))
      detail::add(rep, "UNKNOWN_REFERENCE", "sort " + s.name,
                  "machine_ref '" + *s.machine_ref + "' does not exist");
  }
  for (const auto& g : model.guards) {
    std::string loc = "guard " + g.id;
    if (const auto* r = std::get_if<RangeCheck>(&g.kind)) {
      if (r->min > r->max)
        detail::add(rep, "BAD_GUARD", loc, "range min exceeds max");
    } else if (const auto* sc = std::get_if<Scripted>(&g.kind)) {
      if (sc->outcomes.empty())
        detail::add(rep, "BAD_GUARD", loc, "script outcome list is empty");
    } else if (const auto* b = std::get_if<Bernoulli>(&g.kind)) {
      if (b->p < 0.0 || b->p > 1.0)
        detail::add(rep, "BAD_GUARD", loc, "probability outside [0, 1]");
    }
  }

  // Flow arcs: endpoints, adjacency, lane preservation, guard references.
  for (std::size_t i = 0; i < model.flows.size(); ++i) {
    const auto& f = model.flows[i];
    std::string loc =
        "flow " + to_string(f.from) + " -> " + to_string(f.to);
    bool endpoints_ok = true;
    for (const StageRef* r : {&f.from, &f.to}) {
      if (!model.find_stage(*r)) {
        detail::add(rep, "UNKNOWN_STAGE", loc,
                    "stage '" + to_string(*r) + "' does not exist");
        endpoints_ok = false;
      }
    }
    if (endpoints_ok) {
      bool same = f.from.machine == f.to.machine;
      if (!legal_flow(f.from.kind, f.to.kind, same))
        detail::add(rep, "ILLEGAL_ADJACENCY", loc,
                    std::string(to_string(f.from.kind)) + " -> " +
                        std::string(to_string(f.to.kind)) +
                        (same ? " inside one machine" : " across machines") +
                        " is not a legal flow");
      if (f.from.lane != f.to.lane)
        detail::add(rep, "LANE_MISMATCH", loc,
                    "flow changes lane sort '" + f.from.lane + "' -> '" +
                        f.to.lane + "'");
    }
    if (f.guard) {
      if (!model.find_guard(*f.guard))
        detail::add(rep, "UNKNOWN_GUARD", loc,
                    "guard '" + *f.guard + "' is not declared");
      if (endpoints_ok && f.from.kind != StageKind::Process)
        detail::add(rep, "GUARD_PLACEMENT", loc,
                    "guards belong on arcs leaving a process stage",
                    Violation::Severity::Warning);
    }
  }

  // Trigger arcs: endpoints exist; unusual targets are a lint only.
  for (const auto& t : model.triggers) {
    std::string loc =
        "trigger " + to_string(t.from) + " -.-> " + to_string(t.to);
    bool endpoints_ok = true;
    for (const StageRef* r : {&t.from, &t.to}) {
      if (!model.find_stage(*r)) {
        detail::add(rep, "UNKNOWN_STAGE", loc,
                    "stage '" + to_string(*r) + "' does not exist");
        endpoints_ok = false;
      }
    }
    if (endpoints_ok && t.to.kind != StageKind::Create)
      detail::add(rep, "UNUSUAL_TRIGGER_TARGET", loc,
                  "triggers usually target a create stage",
                  Violation::Severity::Warning);
  }

  std::stable_sort(rep.violations.begin(), rep.violations.end(),
                   [](const Violation& a, const Violation& b) {
                     return a.location < b.location;
                   });
  return rep;
}

// ---------------------------------------------------------------------------
// resolve_path

struct ResolvedPath {
  enum class Kind { Root, MachineRef, StageRef_ };
  Kind kind = Kind::Root;
  const Machine* machine = nullptr;  // set for MachineRef and StageRef_
  std::optional<StageRef> stage;     // set for StageRef_
};

struct PathError {
  std::string longest_prefix;
};

namespace detail {

inline std::vector<std::string> split_dotted(std::string_view path) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t dot = path.find('.', start);
    if (dot == std::string_view::npos) {
      out.emplace_back(path.substr(start));
      break;
    }
    out.emplace_back(path.substr(start, dot - start));
    start = dot + 1;
  }
  return out;
}

}  // namespace detail

/// Dotted-path lookup. "Time.hour" names a machine, "Time.hour.receive"
/// its receive stage (default lane; a ":lane" suffix on the last segment
/// selects another lane). The empty path is the model root scope.
inline std::variant<ResolvedPath, PathError> resolve_path(
    const Model& model, std::string_view path) {
  if (path.empty()) return ResolvedPath{ResolvedPath::Kind::Root, nullptr, {}};

  auto segments = detail::split_dotted(path);
  std::string lane = "default";
  bool lane_explicit = false;
  {
    auto& last = segments.back();
    if (auto colon = last.find(':'); colon != std::string::npos) {
      lane = last.substr(colon + 1);
      if (!lane.empty() && lane.front() == '"' && lane.back() == '"' &&
          lane.size() >= 2)
        lane = lane.substr(1, lane.size() - 2);
      last = last.substr(0, colon);
      lane_explicit = true;
    }
  }

  const Machine* cur = nullptr;
  std::string prefix;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string& seg = segments[i];
    bool is_last = i + 1 == segments.size();

    if (is_last) {
      if (auto kind = stage_kind_from(seg)) {
        if (!cur) return PathError{""};
        if (lane_explicit) {
          if (cur->find_stage(*kind, lane))
            return ResolvedPath{ResolvedPath::Kind::StageRef_, cur,
                                StageRef{cur->id, *kind, lane}};
          return PathError{prefix};
        }
        // default lane first, else a sole stage of that kind
        if (cur->find_stage(*kind, "default"))
          return ResolvedPath{ResolvedPath::Kind::StageRef_, cur,
                              StageRef{cur->id, *kind, "default"}};
        const Stage* sole = nullptr;
        for (const auto& s : cur->stages)
          if (s.kind == *kind) {
            if (sole) return PathError{prefix};  // ambiguous lane
            sole = &s;
          }
        if (sole)
          return ResolvedPath{ResolvedPath::Kind::StageRef_, cur,
                              StageRef{cur->id, *kind, sole->lane}};
        return PathError{prefix};
      }
    }

    const Machine* next = nullptr;
    if (!cur) {
      for (const Machine* r : model.roots())
        if (r->name == seg) next = r;
    } else {
      for (const auto& sub : cur->submachines) {
        const Machine* child = model.find_machine(sub);
        if (child && child->name == seg) next = child;
      }
    }
    if (!next) return PathError{prefix};
    cur = next;
    prefix = cur->id;
  }
  return ResolvedPath{ResolvedPath::Kind::MachineRef, cur, {}};
}

}  // namespace tmkit
