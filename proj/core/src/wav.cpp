// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/wav.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace idl {
namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
               char((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform decode_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav not found: " + path);

  char tag[5] = {0};
  in.read(tag, 4);
  if (std::strncmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error(path + ": not a RIFF file");
  read_u32(in);  // riff size
  in.read(tag, 4);
  if (std::strncmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error(path + ": not a WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::vector<std::int16_t> raw;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = read_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::strncmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error(path + ": data before fmt");
      raw.resize(chunk_size / 2);
      in.read(reinterpret_cast<char*>(raw.data()), chunk_size);
      if (!in) throw std::runtime_error(path + ": truncated data chunk");
      break;
    } else {
      in.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }

  if (!have_fmt) throw std::runtime_error(path + ": missing fmt chunk");
  if (format != 1 || bits != 16)
    throw std::runtime_error(path + ": unsupported encoding (need PCM16)");
  if (channels != 1)
    throw std::runtime_error(path + ": non-mono audio unsupported");
  if (rate != 16000)
    throw std::runtime_error(path + ": unsupported sample rate " +
                             std::to_string(rate));
  if (raw.empty()) throw std::runtime_error(path + ": empty audio");

  Waveform wave;
  wave.sample_rate_hz = 16000;
  wave.samples.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i)
    wave.samples[i] = static_cast<float>(raw[i]) / 32768.0f;
  return wave;
}

void encode_wav(const std::string& path, const Waveform& wave) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write wav: " + path);

  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(wave.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(wave.sample_rate_hz));
  write_u32(out, static_cast<std::uint32_t>(wave.sample_rate_hz * 2));
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);
  for (float s : wave.samples) {
    float clipped = std::clamp(s, -1.0f, 1.0f);
    auto q = static_cast<std::int16_t>(std::lrint(clipped * 32767.0f));
    write_u16(out, static_cast<std::uint16_t>(q));
  }
}

}  // namespace idl
