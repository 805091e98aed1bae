// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace idl {

void save_checkpoint(const std::string& path, const StateDict& sd,
                     const nlohmann::json& meta) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();

  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : sd.tensors) {
    nlohmann::json t;
    t["name"] = name;
    t["shape"] = tensor.first;
    t["offset"] = offset;
    header["tensors"].push_back(t);
    offset += tensor.second.size() * sizeof(float);
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    const std::string hdr = header.dump();
    const std::uint32_t hdr_len = static_cast<std::uint32_t>(hdr.size());
    out.write("IDLC", 4);
    out.write(reinterpret_cast<const char*>(&hdr_len), 4);
    out.write(hdr.data(), hdr_len);
    for (const auto& [name, tensor] : sd.tensors)
      out.write(reinterpret_cast<const char*>(tensor.second.data()),
                static_cast<std::streamsize>(tensor.second.size() *
                                             sizeof(float)));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
  }
  std::filesystem::rename(tmp, path);
}

std::pair<StateDict, nlohmann::json> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint not found: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "IDLC", 4) != 0)
    throw std::runtime_error(path + ": not a checkpoint file");
  std::uint32_t hdr_len = 0;
  in.read(reinterpret_cast<char*>(&hdr_len), 4);
  std::string hdr(hdr_len, '\0');
  in.read(hdr.data(), hdr_len);
  if (!in) throw std::runtime_error(path + ": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hdr);
  } catch (const nlohmann::json::parse_error&) {
    throw std::runtime_error(path + ": corrupted header");
  }
  const int version = header.at("format_version").get<int>();
  if (version != kCheckpointFormatVersion)
    throw std::runtime_error(path + ": unsupported version " +
                             std::to_string(version));

  const std::streampos payload_start = in.tellg();
  StateDict sd;
  for (const auto& t : header.at("tensors")) {
    const std::string name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<std::vector<int>>();
    const std::uint64_t offset = t.at("offset").get<std::uint64_t>();
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    std::vector<float> vals(n);
    in.seekg(payload_start + static_cast<std::streamoff>(offset));
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!in)
      throw std::runtime_error(path + ": truncated payload for " + name);
    sd.tensors[name] = {shape, std::move(vals)};
  }
  return {std::move(sd), header.at("meta")};
}

}  // namespace idl
