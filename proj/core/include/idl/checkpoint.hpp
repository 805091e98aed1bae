// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <utility>

#include "idl/model.hpp"
#include "json.hpp"

namespace idl {

inline constexpr int kCheckpointFormatVersion = 1;

// Checkpoint layout: 4-byte magic "IDLC", uint32 LE header length, JSON
// header {format_version, meta, tensors: [{name, shape, offset}]}, then the
// concatenated float32 little-endian payloads. Offsets are bytes from the
// start of the payload. Round trips are bit-exact; writes go through a
// temp file and rename so a failed save leaves no partial checkpoint.
void save_checkpoint(const std::string& path, const StateDict& sd,
                     const nlohmann::json& meta);

std::pair<StateDict, nlohmann::json> load_checkpoint(const std::string& path);

}  // namespace idl
