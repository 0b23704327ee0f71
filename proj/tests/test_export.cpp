#include <catch2/catch_amalgamated.hpp>

#include "support/dot_check.hpp"
#include "support/fixtures.hpp"
#include "tmkit/export.hpp"

using namespace tmkit;
using testsupport::parse_fixture;

namespace {

std::size_t count_occurrences(const std::string& haystack,
                              const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("dot output nests submachines as clusters") {
  Model m = parse_fixture("time.tm").model;
  std::string dot = to_dot(m, {});
  CHECK(dot.find("subgraph cluster_Time {") != std::string::npos);
  CHECK(dot.find("subgraph cluster_Time_hour {") != std::string::npos);
  // the hour cluster is indented deeper than its parent
  CHECK(dot.find("    subgraph cluster_Time_hour") != std::string::npos);
  CHECK(count_occurrences(dot, "subgraph ") == m.machines.size());
}

TEST_CASE("dashed edge count equals trigger count") {
  for (const auto& name : testsupport::fixture_names()) {
    INFO(name);
    Model m = parse_fixture(name).model;
    std::string dot = to_dot(m, {});
    CHECK(count_occurrences(dot, "style=dashed") == m.triggers.size());
  }
}

TEST_CASE("dot output is byte-stable") {
  for (const auto& name : testsupport::fixture_names()) {
    Model m = parse_fixture(name).model;
    CHECK(to_dot(m, {}) == to_dot(m, {}));
  }
}

TEST_CASE("dot output passes the grammar checker") {
  testsupport::DotChecker checker;
  for (const auto& name : testsupport::fixture_names()) {
    INFO(name);
    Model m = parse_fixture(name).model;
    std::string err;
    bool ok = checker.check(to_dot(m, {}), &err);
    INFO(err);
    CHECK(ok);
  }
}

TEST_CASE("lane labels appear only when requested") {
  Model m = parse_fixture("time.tm").model;
  RenderOptions opts;
  CHECK(to_dot(m, opts).find("[integer]") == std::string::npos);
  opts.show_lanes = true;
  CHECK(to_dot(m, opts).find("[integer]") != std::string::npos);
}

TEST_CASE("rendering an invalid model throws INVALID_MODEL") {
  Model m;
  Machine bad;
  bad.id = bad.name = "M";
  bad.stages.push_back({StageKind::Create, "default"});
  m.machines.push_back(bad);
  m.flows.push_back({StageRef{"M", StageKind::Create, "default"},
                     StageRef{"M", StageKind::Receive, "default"},
                     std::nullopt, std::nullopt});
  try {
    to_dot(m, {});
    FAIL("expected a throw");
  } catch (const TmError& e) {
    CHECK(e.code() == Errc::InvalidModel);
  }
}

TEST_CASE("event overlay adds time and event nodes and highlights") {
  Model m = parse_fixture("time.tm").model;
  Event ev = carve_event(m, "E1", {{"Time.create"}});
  std::string dot = event_overlay(m, ev, {});
  CHECK(dot.find("label=\"time\"") != std::string::npos);
  CHECK(dot.find("label=\"event\"") != std::string::npos);
  CHECK(dot.find("cluster_event_E1") != std::string::npos);
  CHECK(dot.find("fillcolor=gold") != std::string::npos);

  testsupport::DotChecker checker;
  std::string err;
  bool ok = checker.check(dot, &err);
  INFO(err);
  CHECK(ok);
}

TEST_CASE("overlay rejects regions from another model") {
  Model m = parse_fixture("time.tm").model;
  Event ev;
  ev.id = "X";
  ev.region.machines.insert("NoSuchMachine");
  try {
    event_overlay(m, ev, {});
    FAIL("expected a throw");
  } catch (const TmError& e) {
    CHECK(e.code() == Errc::RegionMismatch);
  }

  Event ev2;
  ev2.id = "Y";
  ev2.region.flows.insert(9999);
  try {
    event_overlay(m, ev2, {});
    FAIL("expected a throw");
  } catch (const TmError& e) {
    CHECK(e.code() == Errc::RegionMismatch);
  }
}

TEST_CASE("csv table rendering") {
  ScheduleTable t;
  t.periods = 2;
  t.instances = 2;
  t.cells = {{"E2", ""}, {"E3", "E2"}};
  CHECK(table_render(t, RenderFormat::Csv) ==
        "period,car 1,car 2\n"
        "1,E2,\n"
        "2,E3,E2\n");
}

TEST_CASE("markdown table rendering") {
  ScheduleTable t;
  t.periods = 2;
  t.instances = 2;
  t.cells = {{"E2", ""}, {"E3", "E2"}};
  CHECK(table_render(t, RenderFormat::Markdown) ==
        "| period | car 1 | car 2 |\n"
        "|---|---|---|\n"
        "| 1 | E2 |  |\n"
        "| 2 | E3 | E2 |\n");
}

TEST_CASE("tables do not render as dot") {
  ScheduleTable t;
  try {
    table_render(t, RenderFormat::Dot);
    FAIL("expected a throw");
  } catch (const TmError& e) {
    CHECK(e.code() == Errc::InvalidModel);
  }
}
