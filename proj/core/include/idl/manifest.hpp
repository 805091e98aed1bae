// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "idl/common.hpp"

namespace idl {

// Manifest file: one JSON object per line with keys
// path, speaker_id, label (integer or null), split.
std::vector<ManifestEntry> load_manifest(const std::string& path);

void save_manifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries);

}  // namespace idl
