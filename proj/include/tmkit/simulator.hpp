#pragma once

// Deterministic discrete-event engine over a model and a chronology.
// Time is integer periods. Tokens flow through stages; zero-duration
// bookkeeping events update busy flags within a period; a token whose
// next station is busy waits in a queue or stays in the release buffer.

#include <deque>
#include <map>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmkit/eventing.hpp"
#include "tmkit/model.hpp"

namespace tmkit {

using AttrValue = std::variant<long, std::string, bool>;

inline std::string to_string(const AttrValue& v) {
  if (const auto* i = std::get_if<long>(&v)) return std::to_string(*i);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<bool>(v) ? "true" : "false";
}

struct Location {
  enum class Kind { Stage, Queue, ReleaseBuffer, Sink };
  Kind kind = Kind::Stage;
  StageRef stage;  // unused for Sink

  friend bool operator==(const Location&, const Location&) = default;
};

inline std::string to_string(const Location& loc) {
  switch (loc.kind) {
    case Location::Kind::Stage: return "stage " + to_string(loc.stage);
    case Location::Kind::Queue: return "queue " + to_string(loc.stage);
    case Location::Kind::ReleaseBuffer:
      return "release " + to_string(loc.stage);
    case Location::Kind::Sink: return "SINK";
  }
  return "?";
}

struct Token {
  int instance_id = 0;
  std::string sort;
  std::map<std::string, AttrValue> attributes;
  Location location;
};

struct ArrivalEntry {
  int period = 0;
  int count = 0;

  friend bool operator==(const ArrivalEntry&, const ArrivalEntry&) = default;
};

struct SimConfig {
  std::vector<ArrivalEntry> arrivals;
  std::map<std::string, std::vector<std::string>> scripts;  // guard overrides
  std::map<std::string, AttrValue> attributes;  // initial token attributes
  std::string sort;                             // sort of created tokens
  int horizon = 100;
  unsigned long long seed = 0;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// ---------------------------------------------------------------------------
// Guard evaluation

struct GuardEvalState {
  std::map<std::string, std::size_t> script_cursors;
  std::map<std::string, std::vector<std::string>> script_overrides;
  std::mt19937_64 rng;
};

/// Deterministic given seed and call order. Scripted guards pop the next
/// outcome, cycling past the end.
inline std::string evaluate_guard(const Guard& guard, const Token& token,
                                  GuardEvalState& state) {
  if (const auto* rc = std::get_if<RangeCheck>(&guard.kind)) {
    auto it = token.attributes.find(rc->attribute);
    if (it == token.attributes.end())
      throw TmError(Errc::MissingAttribute,
                    "token " + std::to_string(token.instance_id) +
                        " lacks attribute '" + rc->attribute +
                        "' required by guard '" + guard.id + "'");
    long v = 0;
    if (const auto* i = std::get_if<long>(&it->second))
      v = *i;
    else if (const auto* b = std::get_if<bool>(&it->second))
      v = *b ? 1 : 0;
    else
      throw TmError(Errc::MissingAttribute,
                    "attribute '" + rc->attribute + "' is not numeric");
    return (v >= rc->min && v <= rc->max) ? "pass" : "fail";
  }
  if (const auto* sc = std::get_if<Scripted>(&guard.kind)) {
    const std::vector<std::string>* script = &sc->outcomes;
    if (auto it = state.script_overrides.find(guard.id);
        it != state.script_overrides.end())
      script = &it->second;
    std::size_t& cursor = state.script_cursors[guard.id];
    const std::string& out = (*script)[cursor % script->size()];
    ++cursor;
    return out;
  }
  const auto& b = std::get<Bernoulli>(guard.kind);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(state.rng) < b.p || b.p >= 1.0 ? "pass" : "fail";
}

// ---------------------------------------------------------------------------
// Trace

struct ActiveRecord {
  int period = 0;
  int instance = 0;
  std::string event;

  friend bool operator==(const ActiveRecord&, const ActiveRecord&) = default;
};

struct MoveRecord {
  int period = 0;
  int instance = 0;
  std::string from;
  std::string to;
};

struct GuardRecord {
  int period = 0;
  int instance = 0;
  std::string guard;
  std::string outcome;
};

struct FlagRecord {
  int period = 0;
  int instance = 0;
  std::string flag;
  bool value = false;
};

struct FiringRecord {  // zero-duration bookkeeping events
  int period = 0;
  int instance = 0;
  std::string event;
};

struct StepAccounting {
  int period = 0;
  int created = 0;
  int sunk = 0;
  int tokens_before = 0;
  int tokens_after = 0;
};

struct Trace {
  std::vector<ActiveRecord> active;
  std::vector<FiringRecord> firings;
  std::vector<MoveRecord> moves;
  std::vector<GuardRecord> guard_outcomes;
  std::vector<FlagRecord> flag_changes;
  std::vector<StepAccounting> accounting;
  int max_period = 0;    // highest period with visible activity
  int max_instance = 0;  // highest instance id created
  bool complete = false;

  /// Visible event ids for one instance, in period order.
  std::vector<std::string> instance_sequence(int instance) const {
    std::vector<std::string> out;
    for (const auto& r : active)
      if (r.instance == instance) out.push_back(r.event);
    return out;
  }
};

inline nlohmann::ordered_json trace_to_json(const Trace& trace) {
  nlohmann::ordered_json j;
  j["max_period"] = trace.max_period;
  j["max_instance"] = trace.max_instance;
  j["complete"] = trace.complete;
  j["active"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.active)
    j["active"].push_back(
        {{"period", r.period}, {"instance", r.instance}, {"event", r.event}});
  j["firings"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.firings)
    j["firings"].push_back(
        {{"period", r.period}, {"instance", r.instance}, {"event", r.event}});
  j["moves"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.moves)
    j["moves"].push_back({{"period", r.period},
                          {"instance", r.instance},
                          {"from", r.from},
                          {"to", r.to}});
  j["guards"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.guard_outcomes)
    j["guards"].push_back({{"period", r.period},
                           {"instance", r.instance},
                           {"guard", r.guard},
                           {"outcome", r.outcome}});
  j["flags"] = nlohmann::ordered_json::array();
  for (const auto& r : trace.flag_changes)
    j["flags"].push_back({{"period", r.period},
                          {"instance", r.instance},
                          {"flag", r.flag},
                          {"value", r.value}});
  j["accounting"] = nlohmann::ordered_json::array();
  for (const auto& a : trace.accounting)
    j["accounting"].push_back({{"period", a.period},
                               {"created", a.created},
                               {"sunk", a.sunk},
                               {"tokens_before", a.tokens_before},
                               {"tokens_after", a.tokens_after}});
  return j;
}

// ---------------------------------------------------------------------------
// Schedule table

struct ScheduleTable {
  int periods = 0;    // rows; row r is period r+1
  int instances = 0;  // columns
  std::vector<std::vector<std::string>> cells;  // [row][instance-1]

  std::vector<std::string> column(int instance) const {
    std::vector<std::string> out;
    for (const auto& row : cells) out.push_back(row[instance - 1]);
    return out;
  }
};

/// Rows are periods 1..max_period (period 0 is the arrival row and is not
/// tabulated); cells carry the visible event id or stay blank.
inline ScheduleTable schedule_table(const Trace& trace) {
  ScheduleTable t;
  t.periods = trace.max_period;
  t.instances = trace.max_instance;
  t.cells.assign(static_cast<std::size_t>(t.periods),
                 std::vector<std::string>(
                     static_cast<std::size_t>(t.instances), ""));
  for (const auto& r : trace.active)
    if (r.period >= 1 && r.period <= t.periods && r.instance >= 1 &&
        r.instance <= t.instances)
      t.cells[static_cast<std::size_t>(r.period - 1)]
             [static_cast<std::size_t>(r.instance - 1)] = r.event;
  return t;
}

// ---------------------------------------------------------------------------
// SimState

struct StepResult {
  int period = 0;
  std::vector<ActiveRecord> fired;
  std::vector<MoveRecord> moves;
  std::vector<FlagRecord> flag_changes;
  int created = 0;
  int sunk = 0;
  int tokens_before = 0;
  int tokens_after = 0;
};

class SimState {
 public:
  SimState(const Model& model, const Chronology& chronology, SimConfig config)
      : model_(&model), chron_(&chronology), config_(std::move(config)) {
    if (config_.horizon < 1)
      throw TmError(Errc::ConfigMismatch, "horizon must be >= 1");
    for (const auto& [gid, script] : config_.scripts) {
      if (!model.find_guard(gid))
        throw TmError(Errc::ConfigMismatch,
                      "script for undeclared guard '" + gid + "'");
      if (script.empty())
        throw TmError(Errc::ConfigMismatch,
                      "empty script for guard '" + gid + "'");
    }
    guard_state_.script_overrides = config_.scripts;
    guard_state_.rng.seed(config_.seed);

    // Flag and queue registries, in model declaration order.
    for (const auto& m : model.machines)
      for (const auto& s : m.stages) {
        if (s.state_flag) flags_[m.id + "." + *s.state_flag] = false;
        if (s.has_queue && s.kind == StageKind::Receive)
          queues_.push_back({StageRef{m.id, s.kind, s.lane},
                             s.queue_capacity, {}});
      }
    for (const auto& ev : chronology.events)
      for (const auto& fx : ev.effects)
        if (!flags_.count(fx.flag))
          throw TmError(Errc::ConfigMismatch,
                        "event '" + ev.id + "' sets undeclared flag '" +
                            fx.flag + "'");

    if (!chronology.find_event(chronology.initial))
      throw TmError(Errc::ConfigMismatch, "chronology has no initial event");

    create_arrivals(0);
  }

  int period() const { return period_; }
  const Trace& trace() const { return trace_; }
  const std::map<std::string, bool>& flags() const { return flags_; }
  /// Test hook: force a flag (e.g. to model an external busy window).
  void set_flag(const std::string& name, bool value) {
    flags_.at(name) = value;
  }
  const std::vector<Token>& tokens() const {
    tokens_view_.clear();
    for (const auto& rt : runtime_) tokens_view_.push_back(rt.token);
    return tokens_view_;
  }
  GuardEvalState& guard_state() { return guard_state_; }

  bool all_sunk() const {
    for (const auto& rt : runtime_)
      if (rt.status != Status::Done) return false;
    return pending_arrivals_after(period_ - 1) == 0;
  }

  std::deque<int> queue_contents(const StageRef& receive_stage) const {
    for (const auto& q : queues_)
      if (q.stage == receive_stage) return q.contents;
    return {};
  }

  /// Advances one period: records visible activity, then runs the period
  /// boundary (completions, guard routing, zero-duration chains, blocked
  /// retries in FIFO order).
  StepResult step() {
    if (period_ >= config_.horizon)
      throw TmError(Errc::HorizonExceeded,
                    "period " + std::to_string(period_) + " is past horizon " +
                        std::to_string(config_.horizon));
    StepResult res;
    res.period = period_;
    res.tokens_before = live_count();
    step_moves_ = &res.moves;
    step_flags_ = &res.flag_changes;

    if (period_ > 0) res.created = create_arrivals(period_);
    sunk_this_step_ = 0;

    // Visible activity for this period.
    for (const auto& rt : runtime_)
      if (rt.status == Status::Active && rt.remaining > 0) {
        const Event* ev = chron_->find_event(rt.event);
        if (ev->duration > 0) {
          trace_.active.push_back({period_, rt.token.instance_id, rt.event});
          res.fired.push_back({period_, rt.token.instance_id, rt.event});
          if (period_ > trace_.max_period) trace_.max_period = period_;
        }
      }

    // Boundary: completions in instance order.
    for (auto& rt : runtime_) {
      if (rt.status != Status::Active) continue;
      if (--rt.remaining > 0) continue;
      zero_chain_guard_.clear();
      route_from(rt, rt.event);
    }
    retry_blocked();

    res.sunk = sunk_this_step_;
    res.tokens_after = live_count();
    trace_.accounting.push_back({period_, res.created, res.sunk,
                                 res.tokens_before + res.created,
                                 res.tokens_after});
    step_moves_ = nullptr;
    step_flags_ = nullptr;
    ++period_;
    if (all_sunk()) trace_.complete = true;
    return res;
  }

  /// Steps until `horizon` or until every token has reached SINK.
  const Trace& run(int horizon) {
    if (horizon < 1) throw TmError(Errc::ConfigMismatch, "horizon must be >= 1");
    config_.horizon = horizon;
    while (period_ < horizon && !all_sunk()) step();
    trace_.complete = trace_.complete || all_sunk();
    return trace_;
  }

 private:
  enum class Status { Active, Blocked, Done };

  struct TokenRuntime {
    Token token;
    Status status = Status::Active;
    std::string event;  // active: current; blocked: pending entry
    int remaining = 0;
  };

  struct QueueRt {
    StageRef stage;
    std::optional<int> capacity;
    std::deque<int> contents;  // instance ids, FIFO

    bool full() const {
      return capacity && static_cast<int>(contents.size()) >= *capacity;
    }
  };

  int live_count() const {
    int n = 0;
    for (const auto& rt : runtime_)
      if (rt.status != Status::Done) ++n;
    return n;
  }

  int pending_arrivals_after(int period) const {
    int n = 0;
    for (const auto& a : config_.arrivals)
      if (a.period > period) n += a.count;
    return n;
  }

  int create_arrivals(int period) {
    int created = 0;
    for (const auto& a : config_.arrivals) {
      if (a.period != period) continue;
      if (a.count < 0)
        throw TmError(Errc::ConfigMismatch, "negative arrival count");
      for (int i = 0; i < a.count; ++i) {
        TokenRuntime rt;
        rt.token.instance_id = ++next_instance_;
        rt.token.sort = config_.sort.empty()
                            ? (model_->sorts.empty() ? "thing"
                                                     : model_->sorts[0].name)
                            : config_.sort;
        rt.token.attributes = config_.attributes;
        rt.token.location = {Location::Kind::Sink, {}};
        runtime_.push_back(rt);
        trace_.max_instance = next_instance_;
        zero_chain_guard_.clear();
        try_enter(runtime_.back(), chron_->initial);
        ++created;
      }
    }
    return created;
  }

  QueueRt* queue_at(const StageRef& r) {
    for (auto& q : queues_)
      if (q.stage == r) return &q;
    return nullptr;
  }

  QueueRt* queue_of_machine(std::string_view machine_id) {
    for (auto& q : queues_)
      if (q.stage.machine == machine_id) return &q;
    return nullptr;
  }

  void log_move(TokenRuntime& rt, const Location& to) {
    if (rt.token.location == to) return;
    MoveRecord rec{period_, rt.token.instance_id,
                   to_string(rt.token.location), to_string(to)};
    trace_.moves.push_back(rec);
    if (step_moves_) step_moves_->push_back(rec);
    if (rt.token.location.kind == Location::Kind::Queue)
      if (QueueRt* q = queue_at(rt.token.location.stage)) {
        auto& c = q->contents;
        std::erase(c, rt.token.instance_id);
      }
    rt.token.location = to;
  }

  /// Anchor stage of an event's region: Process wins, then the enum order.
  std::optional<StageRef> anchor_stage(const Event& ev) const {
    for (StageKind k : {StageKind::Process, StageKind::Create,
                        StageKind::Receive, StageKind::Release,
                        StageKind::Transfer})
      for (const auto& s : ev.region.stages)
        if (s.kind == k) return s;
    return std::nullopt;
  }

  void sink(TokenRuntime& rt) {
    log_move(rt, {Location::Kind::Sink, {}});
    rt.status = Status::Done;
    rt.event.clear();
    rt.remaining = 0;
    ++sunk_this_step_;
  }

  /// Picks the out-edge for a completed event, evaluating the guard when
  /// the edges are outcome-labeled. No out-edge means run completion.
  void route_from(TokenRuntime& rt, const std::string& event_id) {
    auto outs = chron_->out_edges(event_id);
    if (outs.empty()) {
      sink(rt);
      return;
    }
    const ChronEdge* chosen = nullptr;
    if (outs.size() == 1 && !outs[0]->guard) {
      chosen = outs[0];
    } else {
      const Guard* g = model_->find_guard(*outs[0]->guard);
      std::string outcome = evaluate_guard(*g, rt.token, guard_state_);
      trace_.guard_outcomes.push_back(
          {period_, rt.token.instance_id, g->id, outcome});
      for (const auto* e : outs)
        if (e->outcome == outcome) chosen = e;
      if (!chosen)
        throw TmError(Errc::ConfigMismatch,
                      "guard '" + g->id + "' produced outcome '" + outcome +
                          "' with no matching edge out of '" + event_id + "'");
    }
    try_enter(rt, chosen->to);
  }

  /// Attempts to make `event_id` the token's current event. Zero-duration
  /// events apply their flag effects and chain onward in the same period;
  /// a set-to-true on an already-true flag blocks the token instead.
  bool try_enter(TokenRuntime& rt, const std::string& event_id) {
    const Event* ev = chron_->find_event(event_id);

    if (ev->duration == 0) {
      for (const auto& fx : ev->effects)
        if (fx.value && flags_.at(fx.flag)) {
          block(rt, event_id);
          return false;
        }
      if (!zero_chain_guard_.insert(event_id).second)
        throw TmError(Errc::ZeroDurationCycle,
                      "zero-duration events cycle through '" + event_id +
                          "' within one period");
      for (const auto& fx : ev->effects) {
        flags_.at(fx.flag) = fx.value;
        FlagRecord rec{period_, rt.token.instance_id, fx.flag, fx.value};
        trace_.flag_changes.push_back(rec);
        if (step_flags_) step_flags_->push_back(rec);
      }
      trace_.firings.push_back({period_, rt.token.instance_id, event_id});
      rt.status = Status::Active;
      rt.event = event_id;
      route_from(rt, event_id);
      return true;
    }

    // Visible event: claim its entry location (queue entry may be full).
    Location loc{Location::Kind::Stage, {}};
    if (auto anchor = anchor_stage(*ev)) {
      loc.stage = *anchor;
      if (anchor->kind == StageKind::Receive) {
        if (QueueRt* q = queue_at(*anchor)) {
          if (q->full()) {
            block(rt, event_id);
            return false;
          }
          loc.kind = Location::Kind::Queue;
          log_move(rt, loc);
          q->contents.push_back(rt.token.instance_id);
        } else {
          log_move(rt, loc);
        }
      } else if (anchor->kind == StageKind::Release) {
        loc.kind = Location::Kind::ReleaseBuffer;
        log_move(rt, loc);
      } else {
        log_move(rt, loc);
      }
    }
    rt.status = Status::Active;
    rt.event = event_id;
    rt.remaining = ev->duration;
    return true;
  }

  /// A blocked token waits in the busy station's queue when one exists;
  /// otherwise it stays where it is — for a token that just left a release
  /// stage, that is the release buffer.
  void block(TokenRuntime& rt, const std::string& event_id) {
    rt.status = Status::Blocked;
    rt.event = event_id;
    rt.remaining = 0;
    if (rt.token.location.kind == Location::Kind::Queue) return;

    const Event* ev = chron_->find_event(event_id);
    std::string target_machine;
    for (const auto& fx : ev->effects)
      if (fx.value)
        if (auto dot = fx.flag.rfind('.'); dot != std::string::npos)
          target_machine = fx.flag.substr(0, dot);
    if (!target_machine.empty()) {
      if (QueueRt* q = queue_of_machine(target_machine); q && !q->full()) {
        log_move(rt, {Location::Kind::Queue, q->stage});
        q->contents.push_back(rt.token.instance_id);
        return;
      }
    }
    if (rt.token.location.kind == Location::Kind::Stage) {
      const Machine* m = model_->find_machine(rt.token.location.stage.machine);
      if (m)
        for (const auto& s : m->stages)
          if (s.kind == StageKind::Release) {
            log_move(rt, {Location::Kind::ReleaseBuffer,
                          StageRef{m->id, s.kind, s.lane}});
            return;
          }
    }
  }

  TokenRuntime* runtime_of(int instance) {
    for (auto& rt : runtime_)
      if (rt.token.instance_id == instance) return &rt;
    return nullptr;
  }

  /// Blocked tokens retry to a fixed point: queue heads in model order
  /// first (FIFO within a queue), then stragglers in instance order.
  void retry_blocked() {
    bool progress = true;
    while (progress) {
      progress = false;
      for (auto& q : queues_) {
        while (!q.contents.empty()) {
          TokenRuntime* rt = runtime_of(q.contents.front());
          if (!rt || rt->status != Status::Blocked) break;
          zero_chain_guard_.clear();
          if (!try_enter(*rt, rt->event)) break;
          progress = true;
        }
      }
      for (auto& rt : runtime_) {
        if (rt.status != Status::Blocked) continue;
        if (rt.token.location.kind == Location::Kind::Queue) continue;
        zero_chain_guard_.clear();
        if (try_enter(rt, rt.event)) progress = true;
      }
    }
  }

  const Model* model_;
  const Chronology* chron_;
  SimConfig config_;
  GuardEvalState guard_state_;
  std::map<std::string, bool> flags_;
  std::vector<QueueRt> queues_;
  std::vector<TokenRuntime> runtime_;
  int next_instance_ = 0;
  int period_ = 0;
  int sunk_this_step_ = 0;
  Trace trace_;
  std::set<std::string> zero_chain_guard_;
  std::vector<MoveRecord>* step_moves_ = nullptr;
  std::vector<FlagRecord>* step_flags_ = nullptr;
  mutable std::vector<Token> tokens_view_;
};

}  // namespace tmkit
