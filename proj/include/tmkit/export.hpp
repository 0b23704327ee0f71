#pragma once

// Renderers: models to DOT (nested clusters per machine, dashed trigger
// arcs), event overlays, and schedule tables to CSV / Markdown. All
// output is deterministic and byte-stable for identical inputs.

#include <cctype>
#include <string>
#include <vector>

#include "tmkit/eventing.hpp"
#include "tmkit/model.hpp"
#include "tmkit/simulator.hpp"

namespace tmkit {

enum class RenderFormat { Dot, Csv, Markdown };

struct RenderOptions {
  bool show_lanes = false;
  std::vector<std::string> highlight_events;
  RenderFormat format = RenderFormat::Dot;
};

namespace export_detail {

inline std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  return out;
}

inline std::string node_id(const StageRef& r) {
  return sanitize(r.machine) + "__" + std::string(to_string(r.kind)) + "__" +
         sanitize(r.lane);
}

inline std::string kind_label(StageKind k) {
  std::string s(to_string(k));
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string escape_label(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

inline void emit_machine(const Model& model, const Machine& m, int indent,
                         const RenderOptions& opts, const Region* highlight,
                         std::string& out) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  out += pad + "subgraph cluster_" + sanitize(m.id) + " {\n";
  out += pad + "  label=\"" + escape_label(m.name) + "\";\n";
  if (highlight && highlight->machines.count(m.id))
    out += pad + "  color=red;\n";
  for (const auto& s : m.stages) {
    StageRef ref{m.id, s.kind, s.lane};
    std::string label = kind_label(s.kind);
    if (opts.show_lanes && s.lane != "default") label += "\\n[" + s.lane + "]";
    std::string attrs = "label=\"" + escape_label(label) + "\"";
    if (highlight && highlight->stages.count(ref))
      attrs += ", style=filled, fillcolor=gold";
    out += pad + "  " + node_id(ref) + " [" + attrs + "];\n";
  }
  for (const auto& sub : m.submachines)
    if (const Machine* child = model.find_machine(sub))
      emit_machine(model, *child, indent + 1, opts, highlight, out);
  out += pad + "}\n";
}

inline std::string emit_dot(const Model& model, const RenderOptions& opts,
                            const Region* highlight, bool with_event_nodes,
                            const std::string& event_id) {
  std::string out = "digraph model {\n";
  out += "  compound=true;\n";
  out += "  node [shape=box];\n";
  for (const Machine* root : model.roots())
    emit_machine(model, *root, 1, opts, highlight, out);
  for (std::size_t i = 0; i < model.flows.size(); ++i) {
    const auto& f = model.flows[i];
    std::string attrs;
    if (f.guard) attrs = "label=\"" + escape_label(*f.guard) + "\"";
    if (f.label)
      attrs += std::string(attrs.empty() ? "" : ", ") + "label=\"" +
               escape_label(*f.label) + "\"";
    if (highlight && highlight->flows.count(i))
      attrs += std::string(attrs.empty() ? "" : ", ") + "color=red";
    out += "  " + node_id(f.from) + " -> " + node_id(f.to);
    if (!attrs.empty()) out += " [" + attrs + "]";
    out += ";\n";
  }
  for (std::size_t i = 0; i < model.triggers.size(); ++i) {
    const auto& t = model.triggers[i];
    std::string attrs = "style=dashed";
    if (t.label) attrs += ", label=\"" + escape_label(*t.label) + "\"";
    if (highlight && highlight->triggers.count(i)) attrs += ", color=red";
    out += "  " + node_id(t.from) + " -> " + node_id(t.to) + " [" + attrs +
           "];\n";
  }
  if (with_event_nodes) {
    // the event's three submachines: region (highlighted), time, and the
    // event itself
    out += "  subgraph cluster_event_" + sanitize(event_id) + " {\n";
    out += "    label=\"event " + escape_label(event_id) + "\";\n";
    out += "    event_time [label=\"time\", shape=ellipse];\n";
    out += "    event_self [label=\"event\", shape=ellipse];\n";
    out += "  }\n";
    out += "  event_time -> event_self [style=dotted];\n";
    if (highlight && !highlight->stages.empty())
      out += "  event_self -> " + node_id(*highlight->stages.begin()) +
             " [style=dotted];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace export_detail

/// Machines as nested clusters, stages as kind-labeled nodes, flows solid,
/// triggers dashed. Layout is left to DOT tooling.
inline std::string to_dot(const Model& model, const RenderOptions& options) {
  ValidationReport rep = validate(model);
  if (!rep.ok())
    throw TmError(Errc::InvalidModel,
                  "cannot render a model with " +
                      std::to_string(rep.error_count()) + " violation(s)");
  return export_detail::emit_dot(model, options, nullptr, false, "");
}

/// Fig-style event view: the region highlighted inside the full model,
/// plus synthetic "time" and "event" nodes.
inline std::string event_overlay(const Model& model, const Event& event,
                                 const RenderOptions& options) {
  for (const auto& mid : event.region.machines)
    if (!model.find_machine(mid))
      throw TmError(Errc::RegionMismatch,
                    "region machine '" + mid + "' is not in this model");
  for (const auto& s : event.region.stages)
    if (!model.find_stage(s))
      throw TmError(Errc::RegionMismatch,
                    "region stage '" + to_string(s) + "' is not in this model");
  for (auto i : event.region.flows)
    if (i >= model.flows.size())
      throw TmError(Errc::RegionMismatch, "region flow index out of range");
  for (auto i : event.region.triggers)
    if (i >= model.triggers.size())
      throw TmError(Errc::RegionMismatch, "region trigger index out of range");
  return export_detail::emit_dot(model, options, &event.region, true,
                                 event.id);
}

/// CSV (RFC-4180 style: comma separators, LF line ends) or a Markdown
/// pipe table. Header is "period, car 1 .. car n"; blank cells stay empty.
inline std::string table_render(const ScheduleTable& table,
                                RenderFormat format) {
  std::string out;
  if (format == RenderFormat::Csv) {
    out += "period";
    for (int i = 1; i <= table.instances; ++i)
      out += ",car " + std::to_string(i);
    out += "\n";
    for (int p = 1; p <= table.periods; ++p) {
      out += std::to_string(p);
      for (int i = 1; i <= table.instances; ++i)
        out += "," + table.cells[static_cast<std::size_t>(p - 1)]
                                [static_cast<std::size_t>(i - 1)];
      out += "\n";
    }
    return out;
  }
  if (format == RenderFormat::Markdown) {
    out += "| period |";
    for (int i = 1; i <= table.instances; ++i)
      out += " car " + std::to_string(i) + " |";
    out += "\n|---|";
    for (int i = 1; i <= table.instances; ++i) out += "---|";
    out += "\n";
    for (int p = 1; p <= table.periods; ++p) {
      out += "| " + std::to_string(p) + " |";
      for (int i = 1; i <= table.instances; ++i) {
        const std::string& cell = table.cells[static_cast<std::size_t>(p - 1)]
                                             [static_cast<std::size_t>(i - 1)];
        out += " " + cell + " |";
      }
      out += "\n";
    }
    return out;
  }
  throw TmError(Errc::InvalidModel, "tables render as csv or markdown");
}

}  // namespace tmkit
