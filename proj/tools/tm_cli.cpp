// Command-line front door: validate, format, render, and simulate .tm
// files. Exit codes are stable: 0 success, 1 validation/parse errors,
// 2 usage errors, 3 simulation runtime errors.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tmkit/tmkit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitModelError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSimError = 3;

bool use_color() {
  const char* v = std::getenv("TM_COLOR");
  return !(v && std::string_view(v) == "0");
}

void diag(const std::string& msg) {
  if (use_color())
    std::cerr << "\033[31merror:\033[0m " << msg << "\n";
  else
    std::cerr << "error: " << msg << "\n";
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

void print_parse_errors(const std::string& path,
                        const std::vector<tmkit::ParseError>& errors) {
  for (const auto& e : errors)
    std::cerr << path << ":" << e.span.line << ":" << e.span.column << " "
              << tmkit::to_string(e.code) << " " << e.message << "\n";
}

void print_violations(const std::string& path,
                      const tmkit::ValidationReport& rep) {
  for (const auto& v : rep.violations) {
    auto& out =
        v.severity == tmkit::Violation::Severity::Error ? std::cout : std::cerr;
    out << path << ": " << v.code << " " << v.location << ": " << v.message
        << (v.severity == tmkit::Violation::Severity::Warning ? " (warning)"
                                                              : "")
        << "\n";
  }
}

// Loads and parses a .tm file; on failure prints and returns an exit code.
int load_document(const std::string& path, tmkit::Document& doc) {
  std::string text;
  if (!read_file(path, text)) {
    diag("cannot read '" + path + "'");
    return kExitUsage;
  }
  tmkit::ParseResult res = tmkit::parse(text);
  if (!res.ok()) {
    print_parse_errors(path, res.errors);
    return kExitModelError;
  }
  doc = std::move(*res.document);
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  tmkit::Document doc;
  if (int rc = load_document(path, doc)) return rc;
  tmkit::ValidationReport rep = tmkit::validate(doc.model);
  print_violations(path, rep);
  if (!rep.ok()) return kExitModelError;
  if (doc.has_events) {
    try {
      doc.build_chronology_checked();
    } catch (const tmkit::TmError& e) {
      std::cout << path << ": " << e.what() << "\n";
      return kExitModelError;
    }
  }
  std::cout << "OK\n";
  return kExitOk;
}

int cmd_fmt(const std::string& path, bool check, bool to_stdout) {
  std::string text;
  if (!read_file(path, text)) {
    diag("cannot read '" + path + "'");
    return kExitUsage;
  }
  tmkit::ParseResult res = tmkit::parse(text);
  if (!res.ok()) {
    print_parse_errors(path, res.errors);
    return kExitModelError;
  }
  std::string canonical;
  try {
    canonical = tmkit::serialize(*res.document);
  } catch (const tmkit::TmError& e) {
    diag(e.what());
    return kExitModelError;
  }
  if (check) {
    if (canonical != text) {
      std::cerr << path << ": not canonically formatted\n";
      return kExitModelError;
    }
    return kExitOk;
  }
  if (to_stdout) {
    std::cout << canonical;
    return kExitOk;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    diag("cannot write '" + path + "'");
    return kExitUsage;
  }
  out << canonical;
  return kExitOk;
}

int cmd_render(const std::string& path, const std::string& format,
               const std::string& event_id, bool show_lanes,
               const std::string& out_path) {
  if (format != "dot") {
    diag("unknown render format '" + format + "'");
    return kExitUsage;
  }
  tmkit::Document doc;
  if (int rc = load_document(path, doc)) return rc;
  tmkit::ValidationReport rep = tmkit::validate(doc.model);
  if (!rep.ok()) {
    print_violations(path, rep);
    return kExitModelError;
  }
  tmkit::RenderOptions opts;
  opts.show_lanes = show_lanes;
  std::string output;
  try {
    if (event_id.empty()) {
      output = tmkit::to_dot(doc.model, opts);
    } else {
      const tmkit::EventDecl* decl = nullptr;
      for (const auto& e : doc.events)
        if (e.id == event_id) decl = &e;
      if (!decl) {
        diag("event '" + event_id + "' is not declared in " + path);
        return kExitModelError;
      }
      tmkit::Event ev = tmkit::carve_event(doc.model, decl->id, decl->selector,
                                           decl->duration);
      output = tmkit::event_overlay(doc.model, ev, opts);
    }
  } catch (const tmkit::TmError& e) {
    diag(e.what());
    return kExitModelError;
  }
  if (out_path.empty()) {
    std::cout << output;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      diag("cannot write '" + out_path + "'");
      return kExitUsage;
    }
    out << output;
  }
  return kExitOk;
}

bool apply_json_config(const nlohmann::json& j, tmkit::SimConfig& cfg,
                       std::string& err) {
  try {
    if (j.contains("arrivals")) {
      cfg.arrivals.clear();
      for (const auto& a : j["arrivals"])
        cfg.arrivals.push_back(
            {a.at("period").get<int>(), a.at("count").get<int>()});
    }
    if (j.contains("horizon")) cfg.horizon = j["horizon"].get<int>();
    if (j.contains("seed"))
      cfg.seed = j["seed"].get<unsigned long long>();
    if (j.contains("sort")) cfg.sort = j["sort"].get<std::string>();
    if (j.contains("scripts"))
      for (auto& [gid, script] : j["scripts"].items())
        cfg.scripts[gid] = script.get<std::vector<std::string>>();
    if (j.contains("attributes"))
      for (auto& [name, value] : j["attributes"].items()) {
        if (value.is_boolean())
          cfg.attributes[name] = value.get<bool>();
        else if (value.is_number_integer())
          cfg.attributes[name] = value.get<long>();
        else
          cfg.attributes[name] = value.get<std::string>();
      }
  } catch (const std::exception& e) {
    err = e.what();
    return false;
  }
  return true;
}

int cmd_simulate(const std::string& path, int cars,
                 const std::string& arrivals_path, int horizon, long seed,
                 const std::string& table_format,
                 const std::string& config_path,
                 const std::string& trace_path) {
  tmkit::Document doc;
  if (int rc = load_document(path, doc)) return rc;
  tmkit::ValidationReport rep = tmkit::validate(doc.model);
  if (!rep.ok()) {
    print_violations(path, rep);
    return kExitModelError;
  }

  tmkit::SimConfig cfg = doc.simcfg.value_or(tmkit::SimConfig{});
  if (!config_path.empty()) {
    std::string text;
    if (!read_file(config_path, text)) {
      diag("cannot read '" + config_path + "'");
      return kExitUsage;
    }
    std::string err;
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !apply_json_config(j, cfg, err)) {
      diag("bad config file '" + config_path + "'" +
           (err.empty() ? "" : ": " + err));
      return kExitUsage;
    }
  }
  if (!arrivals_path.empty()) {
    std::string text;
    if (!read_file(arrivals_path, text)) {
      diag("cannot read '" + arrivals_path + "'");
      return kExitUsage;
    }
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
      diag("arrivals file must be a JSON array of {period, count}");
      return kExitUsage;
    }
    cfg.arrivals.clear();
    for (const auto& a : j)
      cfg.arrivals.push_back(
          {a.at("period").get<int>(), a.at("count").get<int>()});
  }
  if (cars >= 0) cfg.arrivals = {{0, cars}};
  if (horizon > 0) cfg.horizon = horizon;
  if (seed >= 0) cfg.seed = static_cast<unsigned long long>(seed);

  try {
    tmkit::Chronology chron = doc.build_chronology_checked();
    tmkit::SimState state(doc.model, chron, cfg);
    const tmkit::Trace& trace = state.run(cfg.horizon);

    std::string trace_json = tmkit::trace_to_json(trace).dump(2) + "\n";
    if (!trace_path.empty()) {
      std::ofstream out(trace_path, std::ios::binary);
      if (!out) {
        diag("cannot write '" + trace_path + "'");
        return kExitUsage;
      }
      out << trace_json;
    }
    if (!table_format.empty()) {
      tmkit::ScheduleTable table = tmkit::schedule_table(trace);
      tmkit::RenderFormat fmt;
      if (table_format == "csv")
        fmt = tmkit::RenderFormat::Csv;
      else if (table_format == "markdown")
        fmt = tmkit::RenderFormat::Markdown;
      else {
        diag("unknown table format '" + table_format + "'");
        return kExitUsage;
      }
      std::cout << tmkit::table_render(table, fmt);
    } else if (trace_path.empty()) {
      std::cout << trace_json;
    }
  } catch (const tmkit::TmError& e) {
    diag(e.what());
    return kExitSimError;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Five-stage flow machine model toolkit"};
  app.require_subcommand(1);

  std::string path;

  auto* validate_cmd =
      app.add_subcommand("validate", "Check a .tm file for well-formedness");
  validate_cmd->add_option("path", path, "model file")->required();

  bool fmt_check = false, fmt_stdout = false;
  auto* fmt_cmd = app.add_subcommand("fmt", "Rewrite in canonical form");
  fmt_cmd->add_option("path", path, "model file")->required();
  fmt_cmd->add_flag("--check", fmt_check, "exit 1 if not already canonical");
  fmt_cmd->add_flag("--stdout", fmt_stdout, "print instead of rewriting");

  std::string format = "dot", event_id, out_path;
  bool show_lanes = false;
  auto* render_cmd = app.add_subcommand("render", "Export a diagram");
  render_cmd->add_option("path", path, "model file")->required();
  render_cmd->add_option("--format,-f", format, "output format (dot)");
  render_cmd->add_option("--event,-e", event_id, "render an event overlay");
  render_cmd->add_flag("--lanes", show_lanes, "show lane sorts on stages");
  render_cmd->add_option("--output,-o", out_path, "output path (default stdout)");

  int cars = -1, horizon = 0;
  long seed = -1;
  std::string arrivals_path, table_format, config_path, trace_path;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the chronology");
  sim_cmd->add_option("path", path, "model file")->required();
  sim_cmd->add_option("--cars,-n", cars, "tokens arriving at period 0")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--arrivals", arrivals_path,
                      "JSON arrival schedule [{period, count}, ...]");
  sim_cmd->add_option("--horizon,-H", horizon, "maximum periods")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed,-s", seed, "RNG seed")
      ->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--table,-t", table_format,
                      "print the schedule table (csv|markdown)");
  sim_cmd->add_option("--config,-c", config_path, "sidecar JSON config");
  sim_cmd->add_option("--trace", trace_path, "write trace JSON to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (validate_cmd->parsed()) return cmd_validate(path);
  if (fmt_cmd->parsed()) return cmd_fmt(path, fmt_check, fmt_stdout);
  if (render_cmd->parsed())
    return cmd_render(path, format, event_id, show_lanes, out_path);
  if (sim_cmd->parsed())
    return cmd_simulate(path, cars, arrivals_path, horizon, seed, table_format,
                        config_path, trace_path);
  return kExitUsage;
}
