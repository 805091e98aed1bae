// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>

#include "idl/common.hpp"

namespace idl {

// Reads a RIFF/WAVE file. Only PCM 16-bit little-endian mono at 16 kHz
// is accepted; samples are scaled by 1/32768.
Waveform decode_wav(const std::string& path);

// Writes mono PCM 16-bit; samples are clipped to [-1, 1] and scaled by 32767.
void encode_wav(const std::string& path, const Waveform& wave);

}  // namespace idl
