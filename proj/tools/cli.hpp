// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

namespace idl::cli {

// Dispatches one subcommand. Returns 0 on success, 1 on validation errors
// (bad flags, missing prerequisites), 2 on runtime errors.
int run_command(const std::vector<std::string>& args);

}  // namespace idl::cli
