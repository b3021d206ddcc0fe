// Copyright (c) 2026 The fsbsed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fsbsed/annotations.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace fsbsed::data {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitCsv(std::string_view line) {
  std::vector<std::string_view> cells;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    cells.push_back(Trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool ParseSeconds(std::string_view cell, double& out) {
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

void SortByOnset(std::vector<AnnotatedEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const AnnotatedEvent& a, const AnnotatedEvent& b) {
                     return a.onset < b.onset;
                   });
}

}  // namespace

std::string_view LabelName(Label label) {
  switch (label) {
    case Label::kPos:
      return "POS";
    case Label::kNeg:
      return "NEG";
    case Label::kUnk:
      return "UNK";
  }
  return "?";
}

AnnotationError::AnnotationError(const std::string& source, int row,
                                 const std::string& detail)
    : DataError(row > 0 ? fmt::format("{}: row {}: {}", source, row, detail)
                        : fmt::format("{}: {}", source, detail)),
      row_(row) {}

std::vector<AnnotatedEvent> AnnotationTable::Select(std::string_view class_name,
                                                    Label label) const {
  std::vector<AnnotatedEvent> out;
  for (const auto& e : events) {
    if (e.value == label && e.class_name == class_name) out.push_back(e);
  }
  SortByOnset(out);
  return out;
}

std::vector<AnnotatedEvent> AnnotationTable::Positives() const {
  std::vector<AnnotatedEvent> out;
  for (const auto& e : events) {
    if (e.value == Label::kPos) out.push_back(e);
  }
  SortByOnset(out);
  return out;
}

int AnnotationTable::ClassIndex(std::string_view class_name) const {
  auto it = std::find(class_set.begin(), class_set.end(), class_name);
  return it == class_set.end() ? -1
                               : static_cast<int>(it - class_set.begin());
}

void AnnotationTable::CheckWithin(double duration_seconds,
                                  double slack_seconds) const {
  for (const auto& e : events) {
    if (e.offset > duration_seconds + slack_seconds) {
      throw DataError(fmt::format(
          "{}: event [{:.3f}, {:.3f}] of class '{}' ends after the recording "
          "({:.3f} s)",
          file, e.onset, e.offset, e.class_name, duration_seconds));
    }
  }
}

AnnotationTable ParseAnnotations(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) {
    throw DataError(
        fmt::format("{}: cannot open annotation file", csv_path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  AnnotationTable table = ParseAnnotationsText(buffer.str(), csv_path.string());
  if (table.file.empty()) {
    table.file = csv_path.stem().string() + ".wav";
  }
  return table;
}

AnnotationTable ParseAnnotationsText(std::string_view text,
                                     const std::string& source) {
  AnnotationTable table;
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!Trim(line).empty()) lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty()) throw AnnotationError(source, 0, "empty file");

  std::string_view header_line = lines.front();
  // Tolerate a UTF-8 byte order mark.
  if (header_line.substr(0, 3) == "\xEF\xBB\xBF") header_line.remove_prefix(3);
  const auto header = SplitCsv(header_line);
  if (header.size() < 4 || header[0] != "Audiofilename" ||
      header[1] != "Starttime" || header[2] != "Endtime") {
    throw AnnotationError(
        source, 0,
        "header must be Audiofilename,Starttime,Endtime,<class columns...>");
  }
  for (size_t c = 3; c < header.size(); ++c) {
    if (header[c].empty()) {
      throw AnnotationError(source, 0,
                            fmt::format("class column {} has no name", c + 1));
    }
    table.class_set.emplace_back(header[c]);
  }

  for (size_t i = 1; i < lines.size(); ++i) {
    const int row = static_cast<int>(i);
    const auto cells = SplitCsv(lines[i]);
    if (cells.size() != header.size()) {
      throw AnnotationError(source, row,
                            fmt::format("expected {} columns, found {}",
                                        header.size(), cells.size()));
    }
    double onset = 0.0;
    double offset = 0.0;
    if (!ParseSeconds(cells[1], onset) || !ParseSeconds(cells[2], offset)) {
      throw AnnotationError(
          source, row,
          fmt::format("non-numeric time ('{}', '{}')", cells[1], cells[2]));
    }
    if (onset < 0.0) {
      throw AnnotationError(source, row,
                            fmt::format("negative onset {}", onset));
    }
    if (!(onset < offset)) {
      throw AnnotationError(
          source, row,
          fmt::format("onset {} is not before offset {}", onset, offset));
    }
    if (table.file.empty()) {
      table.file = std::string(cells[0]);
    } else if (cells[0] != table.file) {
      throw AnnotationError(
          source, row,
          fmt::format("Audiofilename '{}' differs from '{}'", cells[0],
                      table.file));
    }
    for (size_t c = 3; c < cells.size(); ++c) {
      Label label;
      if (cells[c] == "POS") {
        label = Label::kPos;
      } else if (cells[c] == "NEG") {
        label = Label::kNeg;
      } else if (cells[c] == "UNK") {
        label = Label::kUnk;
      } else {
        throw AnnotationError(
            source, row,
            fmt::format("unknown value '{}' in column '{}'", cells[c],
                        header[c]));
      }
      table.events.push_back(
          {onset, offset, std::string(header[c]), label});
    }
  }
  return table;
}

}  // namespace fsbsed::data
