// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ameval/cli.hpp"

int main(int argc, char** argv) {
  // stdout carries leaderboards; logs go to stderr
  spdlog::set_default_logger(spdlog::stderr_color_mt("ameval"));
  return ameval::cli_main(argc, argv);
}
