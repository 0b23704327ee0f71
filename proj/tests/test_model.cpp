#include <catch2/catch_amalgamated.hpp>

#include "support/fixtures.hpp"
#include "support/model_gen.hpp"
#include "tmkit/model.hpp"

using namespace tmkit;
using testsupport::parse_fixture;

TEST_CASE("legal_flow matches the stage semantics") {
  CHECK(legal_flow(StageKind::Release, StageKind::Transfer, true));
  CHECK_FALSE(legal_flow(StageKind::Create, StageKind::Receive, true));
  CHECK(legal_flow(StageKind::Transfer, StageKind::Transfer, false));
  CHECK_FALSE(legal_flow(StageKind::Process, StageKind::Create, true));

  SECTION("cross-machine flow is transfer-to-transfer only") {
    for (StageKind a : kAllStageKinds)
      for (StageKind b : kAllStageKinds) {
        bool expected =
            a == StageKind::Transfer && b == StageKind::Transfer;
        CHECK(legal_flow(a, b, false) == expected);
      }
  }
}

TEST_CASE("validate accepts the time fixture") {
  Model model = parse_fixture("time.tm").model;
  ValidationReport rep = validate(model);
  for (const auto& v : rep.violations)
    INFO(v.code << " " << v.location << ": " << v.message);
  CHECK(rep.violations.empty());
}

TEST_CASE("validate flags an illegal same-machine adjacency") {
  ParseResult res = parse(
      "machine M { create; receive; flow M.create -> M.receive; }");
  REQUIRE(res.ok());
  ValidationReport rep = validate(res.document->model);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].code == "ILLEGAL_ADJACENCY");
}

TEST_CASE("validate flags unknown stage references") {
  ParseResult res = parse(
      "machine Paint { create; release; }"
      "flow Paintt.create -> Paint.release;");
  REQUIRE(res.ok());
  ValidationReport rep = validate(res.document->model);
  bool found = false;
  for (const auto& v : rep.violations)
    if (v.code == "UNKNOWN_STAGE") found = true;
  CHECK(found);
}

TEST_CASE("validate rejects duplicate stages and bad guards") {
  Model model;
  Machine m;
  m.id = m.name = "M";
  m.stages.push_back({StageKind::Create, "default"});
  m.stages.push_back({StageKind::Create, "default"});
  model.machines.push_back(m);
  model.guards.push_back({"g", RangeCheck{"x", 5, 1}, ""});
  ValidationReport rep = validate(model);
  bool dup = false, bad = false;
  for (const auto& v : rep.violations) {
    if (v.code == "DUPLICATE_STAGE") dup = true;
    if (v.code == "BAD_GUARD") bad = true;
  }
  CHECK(dup);
  CHECK(bad);
}

TEST_CASE("validate warns on unusual trigger targets") {
  ParseResult res = parse(
      "machine A { process; } machine B { process; }"
      "trigger A.process -.-> B.process;");
  REQUIRE(res.ok());
  ValidationReport rep = validate(res.document->model);
  CHECK(rep.ok());  // warning, not error
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].code == "UNUSUAL_TRIGGER_TARGET");
  CHECK(rep.violations[0].severity == Violation::Severity::Warning);
}

TEST_CASE("validate is pure") {
  Model model = parse_fixture("car.tm").model;
  ValidationReport a = validate(model);
  ValidationReport b = validate(model);
  CHECK(a.violations == b.violations);
}

TEST_CASE("resolve_path walks the machine hierarchy") {
  Model model = parse_fixture("time.tm").model;

  auto hour = resolve_path(model, "Time.hour");
  REQUIRE(std::holds_alternative<ResolvedPath>(hour));
  auto& h = std::get<ResolvedPath>(hour);
  CHECK(h.kind == ResolvedPath::Kind::MachineRef);
  CHECK(h.machine->id == "Time.hour");

  auto root = resolve_path(model, "");
  REQUIRE(std::holds_alternative<ResolvedPath>(root));
  CHECK(std::get<ResolvedPath>(root).kind == ResolvedPath::Kind::Root);

  auto missing = resolve_path(model, "Time.year");
  REQUIRE(std::holds_alternative<PathError>(missing));
  CHECK(std::get<PathError>(missing).longest_prefix == "Time");
}

TEST_CASE("resolve_path finds stages, with and without explicit lanes") {
  Model model = parse_fixture("time.tm").model;

  // sole non-default lane resolves without an explicit suffix
  auto recv = resolve_path(model, "Time.hour.receive");
  REQUIRE(std::holds_alternative<ResolvedPath>(recv));
  auto& r = std::get<ResolvedPath>(recv);
  REQUIRE(r.stage.has_value());
  CHECK(r.stage->kind == StageKind::Receive);
  CHECK(r.stage->lane == "integer");

  auto lane = resolve_path(model, "Time.hour.process:integer");
  REQUIRE(std::holds_alternative<ResolvedPath>(lane));
  CHECK(std::get<ResolvedPath>(lane).stage->lane == "integer");

  auto bad = resolve_path(model, "Time.hour.create");
  CHECK(std::holds_alternative<PathError>(bad));
}

TEST_CASE("forest property holds on generated models") {
  testsupport::ModelGen gen(20240817);
  for (int i = 0; i < 50; ++i) {
    Model model = gen();
    REQUIRE(validate(model).ok());
    std::size_t with_parent = 0;
    for (const auto& m : model.machines)
      if (m.parent) ++with_parent;
    std::size_t edges = 0;
    for (const auto& m : model.machines) edges += m.submachines.size();
    CHECK(edges == with_parent);
  }
}

TEST_CASE("adjacency closure: valid models only carry legal flows") {
  testsupport::ModelGen gen(7);
  for (int i = 0; i < 50; ++i) {
    Model model = gen();
    REQUIRE(validate(model).ok());
    for (const auto& f : model.flows)
      CHECK(legal_flow(f.from.kind, f.to.kind,
                       f.from.machine == f.to.machine));
  }
}
