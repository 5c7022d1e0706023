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

#include "coffeelab/error.h"

namespace coffeelab {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kOutOfRange: return "OutOfRange";
    case ErrorKind::kUnsupportedSchema: return "UnsupportedSchema";
    case ErrorKind::kUnknownLabel: return "UnknownLabel";
    case ErrorKind::kDegenerateBox: return "DegenerateBox";
    case ErrorKind::kImageDecode: return "ImageDecode";
    case ErrorKind::kTooFewPoints: return "TooFewPoints";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kAmbiguousMapping: return "AmbiguousMapping";
    case ErrorKind::kDegenerateData: return "DegenerateData";
    case ErrorKind::kMissingImage: return "MissingImage";
    case ErrorKind::kGeometryMismatch: return "GeometryMismatch";
    case ErrorKind::kNoCategories: return "NoCategories";
    case ErrorKind::kEmptyCounts: return "EmptyCounts";
    case ErrorKind::kUnknownStage: return "UnknownStage";
    case ErrorKind::kBadTimestamp: return "BadTimestamp";
    case ErrorKind::kMissingPredictions: return "MissingPredictions";
    case ErrorKind::kBadConfig: return "BadConfig";
    case ErrorKind::kBadFile: return "BadFile";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + detail),
      kind_(kind),
      detail_(detail) {}

LineError::LineError(ErrorKind kind, int line_no, const std::string& detail)
    : Error(kind, "line " + std::to_string(line_no) + ": " + detail),
      line_no_(line_no) {}

}  // namespace coffeelab
