#pragma once

// Minimal reader for the harness CSVs: data section, blank line, summary.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace csv_util {

using Row = std::vector<std::string>;

struct Sections {
  std::string header;
  std::vector<Row> rows;
  std::string summary_header;
  std::vector<Row> summary;
};

inline Row split(const std::string& line) {
  Row out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline Sections parse(const std::string& text) {
  Sections s;
  std::stringstream ss(text);
  std::string line;
  int part = 0;
  bool need_header = true;
  while (std::getline(ss, line)) {
    if (line.empty()) {
      ++part;
      need_header = true;
      continue;
    }
    if (need_header) {
      (part == 0 ? s.header : s.summary_header) = line;
      need_header = false;
      continue;
    }
    (part == 0 ? s.rows : s.summary).push_back(split(line));
  }
  return s;
}

/// Removes a named column from the data section; other lines pass through.
inline std::string drop_column(const std::string& text, const std::string& column) {
  std::stringstream ss(text);
  std::string line;
  std::string out;
  long index = -1;
  bool in_data = true;
  while (std::getline(ss, line)) {
    if (line.empty()) in_data = false;
    if (in_data) {
      Row fields = split(line);
      if (index < 0) {
        const auto it = std::find(fields.begin(), fields.end(), column);
        index = it == fields.end() ? static_cast<long>(fields.size()) : it - fields.begin();
      }
      if (index < static_cast<long>(fields.size())) fields.erase(fields.begin() + index);
      std::string joined;
      for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
      out += joined + '\n';
    } else {
      out += line + '\n';
    }
  }
  return out;
}

}  // namespace csv_util
