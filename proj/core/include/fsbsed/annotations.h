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

#ifndef FSBSED_ANNOTATIONS_H_
#define FSBSED_ANNOTATIONS_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fsbsed/error.h"

namespace fsbsed::data {

enum class Label { kPos, kNeg, kUnk };

std::string_view LabelName(Label label);

struct AnnotatedEvent {
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds
  std::string class_name;
  Label value = Label::kPos;
};

// Labels of one recording in the DCASE few-shot CSV layout:
//   Audiofilename,Starttime,Endtime,<class columns...>
// Every (row, class column) cell becomes one event tagged with its value.
struct AnnotationTable {
  std::string file;  // Audiofilename of the rows
  std::vector<AnnotatedEvent> events;
  std::vector<std::string> class_set;  // column order

  // Events of `class_name` with value `label`, sorted by onset.
  std::vector<AnnotatedEvent> Select(std::string_view class_name,
                                     Label label) const;
  // All POS events across classes, sorted by onset.
  std::vector<AnnotatedEvent> Positives() const;
  int ClassIndex(std::string_view class_name) const;

  // Throws DataError if an event ends after `duration_seconds` (with one
  // frame of slack for rounding in the annotation tool).
  void CheckWithin(double duration_seconds, double slack_seconds) const;
};

class AnnotationError : public DataError {
 public:
  AnnotationError(const std::string& source, int row, const std::string& detail);

  // 1-based data row (header excluded); 0 for header problems.
  int row() const { return row_; }

 private:
  int row_;
};

AnnotationTable ParseAnnotations(const std::filesystem::path& csv_path);
AnnotationTable ParseAnnotationsText(std::string_view text,
                                     const std::string& source);

}  // namespace fsbsed::data

#endif  // FSBSED_ANNOTATIONS_H_
