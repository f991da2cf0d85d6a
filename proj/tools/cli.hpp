// SPDX-FileCopyrightText: 2026 The otibsn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace otibsn::cli {

/// Exit codes: 0 converged, 2 stopped on an iteration or time cap, 1 error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCapped = 2;

/// Entry point of `otibsn {solve|gen|bench} [flags]`; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace otibsn::cli
