#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmkit/dsl.hpp"

namespace testsupport {

inline std::string read_fixture(const std::string& name) {
  std::string path = std::string(TM_FIXTURE_DIR) + "/" + name;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline tmkit::Document parse_fixture(const std::string& name) {
  tmkit::ParseResult res = tmkit::parse(read_fixture(name));
  if (!res.ok()) {
    std::string msg = "fixture " + name + " does not parse:";
    for (const auto& e : res.errors)
      msg += "\n  " + std::to_string(e.span.line) + ":" +
             std::to_string(e.span.column) + " " + e.message;
    throw std::runtime_error(msg);
  }
  return *res.document;
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = {
      "time.tm", "car.tm", "car_rework.tm", "minimal.tm"};
  return names;
}

}  // namespace testsupport
