#pragma once

// Per-point classification files: one "index label" line per input point.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "roadforge/error.hpp"

namespace roadforge {

enum class Label { Ground, Nonground, Outlier };

inline const char* to_string(Label l) {
  switch (l) {
    case Label::Ground: return "ground";
    case Label::Nonground: return "nonground";
    case Label::Outlier: return "outlier";
  }
  return "nonground";
}

inline void write_labels(std::ostream& out, const std::vector<Label>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ' ' << to_string(labels[i]) << '\n';
}

inline void save_labels(const std::vector<Label>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  write_labels(out, labels);
  if (!out) fail(ErrorKind::Io, "write failed for '" + path + "'");
}

/// Lines must list indices 0, 1, 2, ... in order.
inline std::vector<Label> parse_labels(std::istream& in, const std::string& where = "labels") {
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::size_t index = 0;
    std::string name, extra;
    if (!(ss >> index >> name) || (ss >> extra))
      fail(ErrorKind::Parse, where + ":" + std::to_string(line_no) + ": expected 'index label'");
    if (index != labels.size())
      fail(ErrorKind::Parse, where + ":" + std::to_string(line_no) + ": expected index " + std::to_string(labels.size()));
    if (name == "ground") {
      labels.push_back(Label::Ground);
    } else if (name == "nonground") {
      labels.push_back(Label::Nonground);
    } else if (name == "outlier") {
      labels.push_back(Label::Outlier);
    } else {
      fail(ErrorKind::Parse, where + ":" + std::to_string(line_no) + ": unknown label '" + name + "'");
    }
  }
  if (labels.empty()) fail(ErrorKind::EmptyInput, where + ": no labels");
  return labels;
}

inline std::vector<Label> load_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_labels(in, path);
}

}  // namespace roadforge
