// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/sampling.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "json.hpp"

namespace idl {

SamplingStrategy strategy_from_string(const std::string& s) {
  if (s == "rs") return SamplingStrategy::RS;
  if (s == "ds") return SamplingStrategy::DS;
  if (s == "pis") return SamplingStrategy::PIS;
  throw std::invalid_argument("unknown sampling strategy: " + s);
}

std::string strategy_to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::RS: return "rs";
    case SamplingStrategy::DS: return "ds";
    case SamplingStrategy::PIS: return "pis";
  }
  return "?";
}

BatchPlan sample_rs(const std::vector<Segment>& pool, int n,
                    std::uint64_t seed) {
  const int m = static_cast<int>(pool.size());
  if (m < n) throw std::runtime_error("sample_rs: pool smaller than batch");

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(derive_seed(seed, 0x25));
  std::shuffle(order.begin(), order.end(), rng);

  BatchPlan plan;
  plan.strategy = SamplingStrategy::RS;
  plan.batch_size = n;
  for (int b = 0; b + n <= m; b += n)
    plan.batches.emplace_back(order.begin() + b, order.begin() + b + n);
  return plan;
}

BatchPlan sample_ds(const std::vector<Segment>& pool, int n,
                    std::uint64_t seed) {
  std::map<std::string, std::vector<int>> by_speaker;
  for (size_t i = 0; i < pool.size(); ++i)
    by_speaker[pool[i].speaker_id].push_back(static_cast<int>(i));
  if (static_cast<int>(by_speaker.size()) < n)
    throw std::runtime_error("sample_ds: insufficient speakers (" +
                             std::to_string(by_speaker.size()) + " < " +
                             std::to_string(n) + ")");

  std::vector<const std::vector<int>*> speakers;
  for (const auto& [_, segs] : by_speaker) speakers.push_back(&segs);

  auto rng = make_rng(derive_seed(seed, 0xd5));
  const int n_batches = static_cast<int>(pool.size()) / n;
  BatchPlan plan;
  plan.strategy = SamplingStrategy::DS;
  plan.batch_size = n;
  std::vector<int> spk_order(speakers.size());
  std::iota(spk_order.begin(), spk_order.end(), 0);
  for (int b = 0; b < n_batches; ++b) {
    std::shuffle(spk_order.begin(), spk_order.end(), rng);
    std::vector<int> batch;
    for (int s = 0; s < n; ++s) {
      const auto& segs = *speakers[spk_order[s]];
      std::uniform_int_distribution<int> pick(0,
                                              static_cast<int>(segs.size()) - 1);
      batch.push_back(segs[pick(rng)]);
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

BatchPlan sample_pis(const std::vector<Segment>& pool, int n_clusters,
                     std::uint64_t seed) {
  std::vector<std::vector<int>> clusters(n_clusters);
  for (size_t i = 0; i < pool.size(); ++i) {
    const int y = pool[i].pseudo_label;
    if (y < 0 || y >= n_clusters)
      throw std::runtime_error("sample_pis: segment without pseudo label");
    clusters[y].push_back(static_cast<int>(i));
  }
  for (int c = 0; c < n_clusters; ++c)
    if (clusters[c].empty())
      throw std::runtime_error(
          "sample_pis: degenerate clustering (empty cluster " +
          std::to_string(c) + "); re-run kmeans_fit with a new seed");

  auto rng = make_rng(derive_seed(seed, 0x915));
  const int n_batches = static_cast<int>(pool.size()) / n_clusters;
  BatchPlan plan;
  plan.strategy = SamplingStrategy::PIS;
  plan.batch_size = n_clusters;
  for (int b = 0; b < n_batches; ++b) {
    std::vector<int> batch;
    for (int c = 0; c < n_clusters; ++c) {
      std::uniform_int_distribution<int> pick(
          0, static_cast<int>(clusters[c].size()) - 1);
      batch.push_back(clusters[c][pick(rng)]);
    }
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

void assign_pseudo_labels(
    std::vector<Segment>& pool, const KMeansModel& model,
    const std::function<std::vector<float>(const Segment&)>& embed_fn) {
  const int dim = model.centroids.cols;
  for (auto& seg : pool) {
    const auto f = embed_fn(seg);
    if (static_cast<int>(f.size()) != dim)
      throw std::runtime_error("assign_pseudo_labels: dimension mismatch");
    seg.pseudo_label = kmeans_assign(model, f.data(), dim);
  }
}

void save_pseudo_labels(const std::string& path,
                        const std::vector<Segment>& pool) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pseudo labels: " + path);
  for (const auto& seg : pool) {
    nlohmann::json j;
    j["utterance_id"] = seg.utterance_id;
    j["segment_index"] = seg.segment_index;
    j["pseudo_label"] = seg.pseudo_label;
    out << j.dump() << "\n";
  }
}

void load_pseudo_labels(const std::string& path, std::vector<Segment>& pool) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pseudo label file not found: " + path);
  std::map<std::pair<std::string, int>, int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    labels[{j.at("utterance_id").get<std::string>(),
            j.at("segment_index").get<int>()}] =
        j.at("pseudo_label").get<int>();
  }
  for (auto& seg : pool) {
    auto it = labels.find({seg.utterance_id, seg.segment_index});
    if (it == labels.end())
      throw std::runtime_error("no pseudo label for " + seg.utterance_id +
                               "#" + std::to_string(seg.segment_index));
    seg.pseudo_label = it->second;
  }
}

}  // namespace idl
