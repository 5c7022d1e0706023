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

#ifndef COFFEELAB_FS_UTIL_H_
#define COFFEELAB_FS_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace coffeelab {

std::string ReadTextFile(const std::filesystem::path& path);
std::vector<std::uint8_t> ReadBinaryFile(const std::filesystem::path& path);

// Writes to a sibling temp file, fsyncs, then renames over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view data);

// Appends and fsyncs before returning.
void AppendDurable(const std::filesystem::path& path, std::string_view data);

// Regular files in `dir` with the given extension (".txt"), sorted by name.
std::vector<std::filesystem::path> ListFiles(const std::filesystem::path& dir,
                                             std::string_view extension);

}  // namespace coffeelab

#endif  // COFFEELAB_FS_UTIL_H_
