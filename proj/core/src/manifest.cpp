// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/manifest.hpp"

#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace idl {

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest not found: " + path);

  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen_paths;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("manifest " + path + " line " +
                               std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("path") || !j.contains("speaker_id") ||
        !j.contains("split")) {
      throw std::runtime_error("manifest " + path + " line " +
                               std::to_string(lineno) + ": missing key");
    }
    ManifestEntry e;
    e.path = j.at("path").get<std::string>();
    e.speaker_id = j.at("speaker_id").get<std::string>();
    if (e.speaker_id.empty()) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": empty speaker_id");
    }
    if (j.contains("label") && !j.at("label").is_null()) {
      int label = j.at("label").get<int>();
      if (label != 0 && label != 1) {
        throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                 ": label must be 0, 1 or null");
      }
      e.label = label;
    }
    e.split = split_from_string(j.at("split").get<std::string>());
    if (!seen_paths.insert(e.path).second) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": duplicate path " + e.path);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries) {
    nlohmann::json j;
    j["path"] = e.path;
    j["speaker_id"] = e.speaker_id;
    if (e.has_label()) {
      j["label"] = e.label;
    } else {
      j["label"] = nullptr;
    }
    j["split"] = split_to_string(e.split);
    out << j.dump() << "\n";
  }
}

}  // namespace idl
