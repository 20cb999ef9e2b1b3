// Copyright 2026 The ameval Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ameval {

/// Entry point of the `ameval` tool. `args` excludes the program name.
/// Returns the process exit code: 0 on success, 1 on a failed command,
/// 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace ameval
