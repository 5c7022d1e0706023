/* Copyright 2026 The coffeelab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef COFFEELAB_ERROR_H_
#define COFFEELAB_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace coffeelab {

// Every domain failure raised by the library carries one of these kinds. The
// CLI prints ErrorKindName() so users see the same names the docs use.
enum class ErrorKind {
  kMalformedLine,
  kOutOfRange,
  kUnsupportedSchema,
  kUnknownLabel,
  kDegenerateBox,
  kImageDecode,
  kTooFewPoints,
  kDimensionMismatch,
  kAmbiguousMapping,
  kDegenerateData,
  kMissingImage,
  kGeometryMismatch,
  kNoCategories,
  kEmptyCounts,
  kUnknownStage,
  kBadTimestamp,
  kMissingPredictions,
  kBadConfig,
  kBadFile,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail);

  ErrorKind kind() const { return kind_; }
  std::string_view name() const { return ErrorKindName(kind_); }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

// Line-oriented parse errors remember the 1-based line number.
class LineError : public Error {
 public:
  LineError(ErrorKind kind, int line_no, const std::string& detail);
  int line_no() const { return line_no_; }

 private:
  int line_no_;
};

}  // namespace coffeelab

#endif  // COFFEELAB_ERROR_H_
