#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "support/fixtures.hpp"

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  std::string out_path = "tm_cli_test_stdout.txt";
  std::string err_path = "tm_cli_test_stderr.txt";
  std::string cmd = "TM_COLOR=0 " + std::string(TM_CLI_PATH) + " " + args +
                    " >" + out_path + " 2>" + err_path;
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string fixture(const std::string& name) {
  return std::string(TM_FIXTURE_DIR) + "/" + name;
}

std::string write_temp(const std::string& name, const std::string& content) {
  std::ofstream out(name, std::ios::binary | std::ios::trunc);
  out << content;
  return name;
}

}  // namespace

TEST_CASE("validate accepts the fixtures") {
  for (const auto& name : testsupport::fixture_names()) {
    INFO(name);
    RunResult r = run_cli("validate " + fixture(name));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("OK") != std::string::npos);
  }
}

TEST_CASE("validate rejects an illegal arc with exit 1") {
  RunResult r = run_cli("validate " + fixture("illegal_arc.tm"));
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("ILLEGAL_ADJACENCY") != std::string::npos);
}

TEST_CASE("validate reports parse errors with spans and exit 1") {
  std::string path = write_temp("tm_cli_bad.tm", "machine M {\n  crate;\n}\n");
  RunResult r = run_cli("validate " + path);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find(":2:3") != std::string::npos);
  CHECK(r.err.find("UNKNOWN_KEYWORD") != std::string::npos);
}

TEST_CASE("missing file is a usage error") {
  RunResult r = run_cli("validate no_such_file.tm");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK(r.err.find("\033") == std::string::npos);  // TM_COLOR=0
}

TEST_CASE("unknown subcommand is a usage error") {
  RunResult r = run_cli("frobnicate x.tm");
  CHECK(r.exit_code == 2);
}

TEST_CASE("fmt --stdout prints canonical text") {
  RunResult r = run_cli("fmt --stdout " + fixture("minimal.tm"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("machine M {") != std::string::npos);
  CHECK(r.out.find("flow M.create -> M.release;") != std::string::npos);
}

TEST_CASE("fmt --check distinguishes canonical from not") {
  // minimal.tm keeps its flows inside the machine body, which is legal
  // input but not the canonical layout
  RunResult check_orig = run_cli("fmt --check " + fixture("minimal.tm"));
  CHECK(check_orig.exit_code == 1);

  RunResult canon = run_cli("fmt --stdout " + fixture("minimal.tm"));
  std::string path = write_temp("tm_cli_canon.tm", canon.out);
  RunResult check_canon = run_cli("fmt --check " + path);
  CHECK(check_canon.exit_code == 0);
}

TEST_CASE("fmt rewrite is idempotent") {
  std::string path =
      write_temp("tm_cli_fmt.tm", slurp(fixture("minimal.tm")));
  CHECK(run_cli("fmt " + path).exit_code == 0);
  CHECK(run_cli("fmt --check " + path).exit_code == 0);
  std::string once = slurp(path);
  CHECK(run_cli("fmt " + path).exit_code == 0);
  CHECK(slurp(path) == once);
}

TEST_CASE("render emits dot with the machine clusters") {
  RunResult r = run_cli("render " + fixture("time.tm") + " --format dot");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("digraph model {") != std::string::npos);
  CHECK(r.out.find("cluster_Time") != std::string::npos);
}

TEST_CASE("render --event produces an overlay") {
  RunResult r = run_cli("render " + fixture("time.tm") + " --event E1");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("cluster_event_E1") != std::string::npos);
  CHECK(r.out.find("label=\"time\"") != std::string::npos);
}

TEST_CASE("render with a bad format is a usage error") {
  RunResult r = run_cli("render " + fixture("time.tm") + " --format svg");
  CHECK(r.exit_code == 2);
}

TEST_CASE("simulate prints the pipeline table") {
  RunResult r = run_cli("simulate " + fixture("car.tm") + " --table csv");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("period,car 1,car 2,car 3,car 4,car 5,car 6,car 7\n") == 0);
  CHECK(r.out.find("7,E8,E7,E6,E5,E4,E3,E2\n") != std::string::npos);
}

TEST_CASE("simulate --cars 1 ends with a released car") {
  RunResult r =
      run_cli("simulate " + fixture("car.tm") + " --cars 1 --horizon 20");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("\"complete\": true") != std::string::npos);
  CHECK(r.out.find("\"E8\"") != std::string::npos);
}

TEST_CASE("negative car count is a usage error") {
  RunResult r = run_cli("simulate " + fixture("car.tm") + " --cars -1");
  CHECK(r.exit_code == 2);
}

TEST_CASE("simulating a file without a chronology is a runtime error") {
  RunResult r = run_cli("simulate " + fixture("minimal.tm"));
  CHECK(r.exit_code == 3);
}

TEST_CASE("sidecar config overrides guard scripts") {
  std::string cfg = write_temp(
      "tm_cli_cfg.json",
      "{\"scripts\": {\"paint_ok\": [\"fail\", \"pass\"],"
      " \"dry_ok\": [\"fail\", \"pass\"]}}");
  RunResult r = run_cli("simulate " + fixture("car_rework.tm") + " --config " +
                        cfg + " --table csv");
  CHECK(r.exit_code == 0);
  // the repaint loop sends the car back through E1 at period 3
  CHECK(r.out.find("3,E1\n") != std::string::npos);
  CHECK(r.out.find("9,E7\n") != std::string::npos);
}

TEST_CASE("trace output goes to the requested file") {
  RunResult r = run_cli("simulate " + fixture("time.tm") +
                        " --trace tm_cli_trace.json");
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
  std::string trace = slurp("tm_cli_trace.json");
  CHECK(trace.find("\"complete\": true") != std::string::npos);
}
