// Copyright 2026 The Futur Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small shared helpers: error types, text utilities, file I/O, hashing.

#ifndef FUTUR_UTIL_H_
#define FUTUR_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace futur {

namespace fs = std::filesystem;

// Base class of every error the pipeline raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (dump records, bundles, result records, configs).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure; the message always names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Network / backend transport failure that may succeed on retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

// ---- text -----------------------------------------------------------------

std::string_view Trim(std::string_view s);
std::string ToLower(std::string_view s);
bool StartsWith(std::string_view s, std::string_view prefix);
bool EndsWith(std::string_view s, std::string_view suffix);
bool IContains(std::string_view haystack, std::string_view needle);
std::vector<std::string> Split(std::string_view s, char sep);
std::vector<std::string> SplitLines(std::string_view s);
std::string Join(const std::vector<std::string>& parts, std::string_view sep);
std::string ReplaceAll(std::string s, std::string_view from, std::string_view to);
bool IsIdentStart(char c);
bool IsIdentChar(char c);

// Replaces every byte outside [A-Za-z0-9_-] by '_'.
std::string SanitizeName(std::string_view s);

// Escapes tab/newline/backslash so a value fits in one TSV cell.
std::string TsvEscape(std::string_view s);
std::string TsvUnescape(std::string_view s);

std::string Base64Encode(std::string_view data);
// Throws ParseError on characters outside the standard alphabet.
std::string Base64Decode(std::string_view text);

// Lower-case hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

// ---- files ----------------------------------------------------------------

std::string ReadFile(const fs::path& path);
void WriteFile(const fs::path& path, std::string_view content);
// Writes to a sibling temporary and renames it over `path`.
void WriteFileAtomic(const fs::path& path, std::string_view content);
// Appends one line (a trailing '\n' is added) with a single write + fsync.
void AppendLine(const fs::path& path, std::string_view line);

// Shortest decimal text that round-trips the double.
std::string FormatDouble(double v);

}  // namespace futur

#endif  // FUTUR_UTIL_H_
