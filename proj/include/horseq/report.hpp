#pragma once

// Machine-readable run reports: one "key: value" pair per line, ordered,
// schema-versioned by the first line. Multi-line payloads (the normalized
// inputs a report echoes so it can be re-checked without rerunning) repeat
// their key once per line. Values never contain newlines.

#include <string>
#include <utility>
#include <vector>

namespace horseq {

inline constexpr const char* kToolName = "horseq";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "horseq/1";

struct Report {
  std::vector<std::pair<std::string, std::string>> fields;

  explicit Report(const std::string& command) {
    kv("report", kReportSchema);
    kv("tool", std::string(kToolName) + " " + kToolVersion);
    kv("command", command);
  }

  void kv(std::string key, std::string value) {
    for (char& c : value)
      if (c == '\n') c = ' ';
    fields.emplace_back(std::move(key), std::move(value));
  }
  void kv(std::string key, long value) {
    kv(std::move(key), std::to_string(value));
  }

  // echo a block (a printed grammar or program) line by line
  void input(const std::string& which, const std::string& text) {
    std::string key = "input." + which;
    size_t start = 0;
    while (start <= text.size()) {
      size_t nl = text.find('\n', start);
      if (nl == std::string::npos) {
        if (start < text.size()) kv(key, text.substr(start));
        break;
      }
      kv(key, text.substr(start, nl - start));
      start = nl + 1;
    }
  }

  std::string render() const {
    std::string out;
    for (const auto& [k, v] : fields) out += k + ": " + v + "\n";
    return out;
  }

  // inverse of render, for re-checking a saved report
  static std::vector<std::pair<std::string, std::string>> parse(
      const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    size_t start = 0;
    while (start < text.size()) {
      size_t nl = text.find('\n', start);
      if (nl == std::string::npos) nl = text.size();
      std::string line = text.substr(start, nl - start);
      start = nl + 1;
      if (line.empty()) continue;
      size_t sep = line.find(": ");
      if (sep == std::string::npos)
        out.emplace_back(line, "");
      else
        out.emplace_back(line.substr(0, sep), line.substr(sep + 2));
    }
    return out;
  }
};

}  // namespace horseq
