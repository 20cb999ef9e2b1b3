// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include "temp_dir.hpp"

#include <atomic>
#include <random>
#include <unistd.h>

namespace ameval::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  const auto name = tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                    std::to_string(rd());
  path_ = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path copy_e2e_fixture(const std::filesystem::path& dir) {
  const std::filesystem::path src = std::filesystem::path(AMEVAL_FIXTURES) / "e2e";
  std::filesystem::create_directories(dir);
  for (const auto& entry : std::filesystem::directory_iterator(src)) {
    std::filesystem::copy_file(entry.path(), dir / entry.path().filename(),
                               std::filesystem::copy_options::overwrite_existing);
  }
  return dir / "run.json";
}

}  // namespace ameval::testing
