// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ameval {

using json = nlohmann::json;

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a. Stable across platforms and releases; used for seeds and
/// for deterministic mock behaviour, so it must never change.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// Calls `fn(record, line_number)` for every non-blank line of a
/// line-delimited JSON file. Line numbers are 1-based. Parse failures throw
/// Error naming the file and line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn);

std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Append-only line writer. All writes to one file go through one instance;
/// `append` is safe to call from several threads.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);

  void append(const json& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
  std::ofstream out_;
};

std::string_view trim(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);

/// Number of UTF-8 code points. Invalid lead bytes count as one each.
std::size_t utf8_length(std::string_view s);

/// Makes an arbitrary name usable as a single path component.
std::string sanitize_component(std::string_view name);

}  // namespace ameval
