#pragma once

#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"

#include "cml/errors.hpp"

namespace cml {

// Streams a JSONL file line by line; blank lines are skipped. Parse failures
// surface as ParseError with the 1-based line number.
inline void for_each_jsonl_line(
    const std::string& path,
    const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    fn(line_no, parsed);
  }
}

}  // namespace cml
