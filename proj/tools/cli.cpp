// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "idl/checkpoint.hpp"
#include "idl/dsp.hpp"
#include "idl/manifest.hpp"
#include "idl/probe.hpp"
#include "idl/synth.hpp"
#include "idl/train.hpp"
#include "idl/wav.hpp"

namespace fs = std::filesystem;

namespace idl::cli {
namespace {

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

// One writer per run directory.
class RunDir {
 public:
  explicit RunDir(const std::string& path) : dir_(path) {
    fs::create_directories(dir_);
    lock_ = dir_ / ".lock";
    if (fs::exists(lock_))
      throw std::runtime_error("run directory is locked: " + lock_.string());
    if (fs::exists(dir_ / "config.json"))
      throw std::runtime_error("run directory already holds a completed run: " +
                               dir_.string());
    std::ofstream(lock_) << "locked\n";
  }
  ~RunDir() {
    std::error_code ec;
    fs::remove(lock_, ec);
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  void write_config(const nlohmann::json& config) const {
    std::ofstream out(dir_ / "config.json");
    out << config.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  fs::path lock_;
};

std::string resolve_out_dir(std::string out, const std::string& command) {
  if (!out.empty()) return out;
  const char* root = std::getenv("IDL_RUN_ROOT");
  if (!root)
    throw CLI::ValidationError(
        "--out", "missing --out and IDL_RUN_ROOT is not set");
  return (fs::path(root) / command).string();
}

struct LoadedCorpus {
  std::vector<UtteranceFeatures> utts;
  std::vector<Waveform> waves;  // empty when not loaded
};

LoadedCorpus load_split(const std::string& manifest_path,
                        const std::vector<ManifestEntry>& entries, Split split,
                        const std::string& features_dir, bool need_waves) {
  const fs::path base = fs::path(manifest_path).parent_path();
  LoadedCorpus corpus;
  for (const auto& e : entries) {
    if (e.split != split) continue;
    UtteranceFeatures u;
    u.utterance_id = stem_of(e.path);
    u.speaker_id = e.speaker_id;
    u.label = e.label;

    std::optional<Waveform> wave;
    if (need_waves || features_dir.empty())
      wave = decode_wav((base / e.path).string());
    if (!features_dir.empty()) {
      u.features =
          load_features((fs::path(features_dir) / (u.utterance_id + ".feat"))
                            .string());
    } else {
      u.features = extract_log_mel(*wave);
    }
    corpus.utts.push_back(std::move(u));
    if (need_waves) corpus.waves.push_back(std::move(*wave));
  }
  return corpus;
}

// ---------------------------------------------------------------------------

int cmd_synth(int n_speakers, int n_utts, std::uint64_t seed, bool labeled,
              const std::string& out) {
  RunDir run(out);
  fs::create_directories(fs::path(out) / "wav");
  auto corpus = synth_corpus(n_speakers, n_utts, seed, labeled);
  for (size_t i = 0; i < corpus.waves.size(); ++i) {
    const std::string rel = "wav/" + corpus.entries[i].path;
    encode_wav((fs::path(out) / rel).string(), corpus.waves[i]);
    corpus.entries[i].path = rel;
  }
  save_manifest(run.path("manifest.jsonl").string(), corpus.entries);
  run.write_config({{"command", "synth"},
                    {"speakers", n_speakers},
                    {"utts", n_utts},
                    {"seed", seed},
                    {"labeled", labeled}});
  std::cout << "wrote " << corpus.entries.size() << " utterances to " << out
            << "\n";
  return 0;
}

int cmd_features(const std::string& manifest, const std::string& out) {
  RunDir run(out);
  const auto entries = load_manifest(manifest);
  const fs::path base = fs::path(manifest).parent_path();
  for (const auto& e : entries) {
    auto wave = decode_wav((base / e.path).string());
    save_features(run.path(stem_of(e.path) + ".feat").string(),
                  extract_log_mel(wave));
  }
  run.write_config(
      {{"command", "features"}, {"manifest", manifest}, {"count", entries.size()}});
  std::cout << "cached features for " << entries.size() << " utterances\n";
  return 0;
}

int cmd_pretrain(const std::string& manifest, const std::string& features_dir,
                 const TrainConfig& cfg, const std::string& pseudo_labels,
                 const std::string& out) {
  if (cfg.strategy == SamplingStrategy::PIS && pseudo_labels.empty())
    throw CLI::ValidationError(
        "--pseudo-labels",
        "strategy pis requires --pseudo-labels (run `cluster` on the stage-1 "
        "checkpoint first)");

  RunDir run(out);
  const auto entries = load_manifest(manifest);
  const bool need_waves = is_signal_level(cfg.augment);
  auto train_data =
      load_split(manifest, entries, Split::Train, features_dir, need_waves);
  auto val_data = load_split(manifest, entries, Split::Validation,
                             features_dir, need_waves);

  auto train_pool = build_pretrain_pool(std::move(train_data.utts),
                                        std::move(train_data.waves));
  auto val_pool =
      build_pretrain_pool(std::move(val_data.utts), std::move(val_data.waves));
  if (!pseudo_labels.empty())
    load_pseudo_labels(pseudo_labels, train_pool.segments);

  auto result = pretrain(train_pool, val_pool, cfg);

  nlohmann::json meta;
  meta["stage"] = "pretrain";
  meta["best_epoch"] = result.best_epoch;
  meta["best_val_loss"] = result.best_val_loss;
  meta["config"] = cfg.to_json();
  save_checkpoint(run.path("checkpoint.idlc").string(), result.best_state,
                  meta);
  save_loss_curve(run.path("loss_curve.csv").string(), result.curve);
  nlohmann::json config = cfg.to_json();
  config["command"] = "pretrain";
  config["manifest"] = manifest;
  config["pseudo_labels"] = pseudo_labels;
  run.write_config(config);
  std::cout << "best epoch " << result.best_epoch << " val loss "
            << result.best_val_loss << "\n";
  return 0;
}

int cmd_cluster(const std::string& manifest, const std::string& features_dir,
                const std::string& init, int n_clusters, std::uint64_t seed,
                const std::string& out) {
  RunDir run(out);
  const auto entries = load_manifest(manifest);
  auto data = load_split(manifest, entries, Split::Train, features_dir, false);
  auto pool = build_pretrain_pool(std::move(data.utts));
  if (pool.segments.empty()) throw std::runtime_error("no segments to cluster");

  auto [sd, meta] = load_checkpoint(init);
  auto net = net_from_state(sd);

  Matrix embeddings(static_cast<int>(pool.segments.size()), kEmbeddingDim);
  for (size_t i = 0; i < pool.segments.size(); ++i) {
    auto e = embed_segment(net, pool.segments[i]);
    std::copy(e.begin(), e.end(),
              embeddings.v.begin() + i * static_cast<size_t>(kEmbeddingDim));
  }
  auto model = kmeans_fit(embeddings, n_clusters, seed);
  for (size_t i = 0; i < pool.segments.size(); ++i)
    pool.segments[i].pseudo_label = kmeans_assign(
        model, embeddings.v.data() + i * static_cast<size_t>(kEmbeddingDim),
        kEmbeddingDim);

  save_pseudo_labels(run.path("pseudo_labels.jsonl").string(), pool.segments);
  run.write_config({{"command", "cluster"},
                    {"manifest", manifest},
                    {"init", init},
                    {"clusters", n_clusters},
                    {"seed", seed},
                    {"inertia", model.inertia}});
  std::cout << "clustered " << pool.segments.size() << " segments into "
            << n_clusters << " clusters (inertia " << model.inertia << ")\n";
  return 0;
}

int cmd_finetune(const std::string& manifest, const std::string& features_dir,
                 char profile, const std::string& init, int k_models,
                 TrainConfig cfg, const std::string& out) {
  RunDir run(out);
  const auto entries = load_manifest(manifest);
  auto data = load_split(manifest, entries, Split::Train, features_dir, false);

  std::optional<StateDict> init_sd;
  nlohmann::json init_meta;
  if (!init.empty()) {
    auto [sd, meta] = load_checkpoint(init);
    init_sd = std::move(sd);
    init_meta = meta;
  }

  auto states = finetune_ensemble(data.utts, init_sd, cfg, profile, k_models);
  for (size_t m = 0; m < states.size(); ++m) {
    nlohmann::json meta;
    meta["stage"] = "finetune";
    meta["profile"] = std::string(1, profile);
    meta["model_index"] = m;
    meta["init"] = init.empty() ? "random" : init;
    meta["config"] = cfg.to_json();
    save_checkpoint(run.path("model_" + std::to_string(m) + ".idlc").string(),
                    states[m], meta);
  }
  nlohmann::json config = cfg.to_json();
  config["command"] = "finetune";
  config["manifest"] = manifest;
  config["profile"] = std::string(1, profile);
  config["init"] = init;
  config["models"] = states.size();
  run.write_config(config);
  std::cout << "trained " << states.size() << " model(s)\n";
  return 0;
}

std::vector<DepAudioNet<float>> load_models(
    const std::vector<std::string>& paths) {
  if (paths.empty()) throw CLI::ValidationError("--model", "no models given");
  std::vector<DepAudioNet<float>> models;
  for (const auto& p : paths) {
    auto [sd, meta] = load_checkpoint(p);
    models.push_back(net_from_state(sd));
  }
  return models;
}

int cmd_eval(const std::string& manifest, const std::string& features_dir,
             const std::vector<std::string>& model_paths,
             const std::string& out) {
  RunDir run(out);
  const auto entries = load_manifest(manifest);
  auto data = load_split(manifest, entries, Split::Test, features_dir, false);
  if (data.utts.empty()) throw std::runtime_error("no test-split utterances");

  auto models = load_models(model_paths);
  auto report = evaluate(models, data.utts);
  std::ofstream(run.path("eval_report.json")) << report.to_json().dump(2)
                                              << "\n";
  run.write_config({{"command", "eval"},
                    {"manifest", manifest},
                    {"models", model_paths}});
  std::cout << "f1_avg " << report.f1_avg << " f1_nd " << report.f1_nd
            << " f1_d " << report.f1_d << "\n";
  return 0;
}

int cmd_probe(const std::string& manifest, const std::string& features_dir,
              const std::string& model_path, bool no_finetune,
              double test_fraction, std::uint64_t seed,
              const std::string& out) {
  RunDir run(out);
  const auto entries = load_manifest(manifest);
  auto data = load_split(manifest, entries, Split::Test, features_dir, false);
  if (data.utts.empty())
    data = load_split(manifest, entries, Split::Train, features_dir, false);
  if (data.utts.empty()) throw std::runtime_error("no utterances to probe");

  auto [sd, meta] = load_checkpoint(model_path);
  auto net = net_from_state(sd);

  // Code speakers by first appearance.
  std::map<std::string, int> speaker_code;
  std::vector<Segment> segments;
  for (const auto& u : data.utts) {
    if (!speaker_code.count(u.speaker_id))
      speaker_code[u.speaker_id] = static_cast<int>(speaker_code.size());
    for (auto& s : segment_utterance(u)) segments.push_back(std::move(s));
  }

  ProbeDataset all;
  all.n_speakers = static_cast<int>(speaker_code.size());
  all.embeddings = Matrix(static_cast<int>(segments.size()), kEmbeddingDim);
  all.speaker_ids.resize(segments.size());
  for (size_t i = 0; i < segments.size(); ++i) {
    auto e = embed_segment(net, segments[i]);
    std::copy(e.begin(), e.end(),
              all.embeddings.v.begin() + i * static_cast<size_t>(kEmbeddingDim));
    all.speaker_ids[i] = speaker_code[segments[i].speaker_id];
  }

  auto [train, test] = probe_split(all, test_fraction, seed);
  auto weights = train_linear_svm(train, 1e-4, 50, seed);

  ProbeReport report;
  report.accuracy = probe_accuracy(weights, test);
  report.n_speakers = all.n_speakers;
  report.n_test = test.embeddings.rows;
  report.embedding_source = no_finetune ? "pretrained" : "finetuned";
  std::ofstream(run.path("probe_report.json")) << report.to_json().dump(2)
                                               << "\n";
  run.write_config({{"command", "probe"},
                    {"manifest", manifest},
                    {"model", model_path},
                    {"no_finetune", no_finetune},
                    {"test_fraction", test_fraction},
                    {"seed", seed}});
  std::cout << "speaker probe accuracy " << report.accuracy << " over "
            << report.n_test << " segments\n";
  return 0;
}

int cmd_augment_preview(const std::string& manifest,
                        const std::string& features_dir,
                        const std::string& augment, std::uint64_t seed,
                        const std::string& out) {
  RunDir run(out);
  const auto kind = augment_kind_from_string(augment);
  const auto entries = load_manifest(manifest);
  if (entries.empty()) throw std::runtime_error("empty manifest");
  auto data = load_split(manifest, entries, entries.front().split,
                         features_dir, is_signal_level(kind));
  auto pool = build_pretrain_pool(std::move(data.utts), std::move(data.waves));
  if (pool.segments.empty()) throw std::runtime_error("no segments");

  TrainConfig cfg;
  cfg.augment = kind;
  cfg.seed = seed;
  Matrix before = pool.segments.front().features;
  Matrix after;
  if (is_signal_level(kind)) {
    // Signal-level preview: augment the first utterance and re-extract.
    PretrainPool tmp = std::move(pool);
    Waveform wave = tmp.waves.front();
    if (kind == AugmentKind::Vtlp) {
      after = Matrix();
      Matrix power = stft_power(wave);
      double alpha = draw_vtlp_alpha(cfg.augment_params, seed);
      static const Matrix fb = mel_filterbank();
      Matrix feats = apply_log_mel(vtlp_warp(power, alpha), fb);
      UtteranceFeatures u = tmp.utts.front();
      u.features = std::move(feats);
      auto segs = segment_utterance(u);
      if (segs.empty()) throw std::runtime_error("utterance too short");
      after = segs.front().features;
      before = segment_utterance(tmp.utts.front()).front().features;
    } else {
      Waveform aug = augment_signal(kind, wave, cfg.augment_params, seed);
      UtteranceFeatures u = tmp.utts.front();
      u.features = extract_log_mel(aug);
      auto segs = segment_utterance(u);
      if (segs.empty()) throw std::runtime_error("utterance too short");
      after = segs.front().features;
      before = segment_utterance(tmp.utts.front()).front().features;
    }
  } else {
    after = augment_features(kind, before, cfg.augment_params, seed);
  }
  save_features(run.path("before.feat").string(), before);
  save_features(run.path("after.feat").string(), after);
  run.write_config({{"command", "augment-preview"},
                    {"manifest", manifest},
                    {"augment", augment},
                    {"seed", seed}});
  std::cout << "wrote before.feat and after.feat\n";
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Instance-discriminative pre-training for speech-based "
               "depression detection"};
  app.require_subcommand(1);

  // synth
  int n_speakers = 10, n_utts = 4;
  std::uint64_t synth_seed = 0;
  bool labeled = false;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--speakers", n_speakers, "number of speakers");
  synth->add_option("--utts", n_utts, "utterances per speaker");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_flag("--labeled", labeled, "attach binary labels");
  synth->add_option("--out", synth_out, "output directory");

  // features
  std::string feat_manifest, feat_out;
  auto* features = app.add_subcommand("features", "extract log-mel features");
  features->add_option("--manifest", feat_manifest)->required();
  features->add_option("--out", feat_out, "output directory");

  // pretrain
  std::string pre_manifest, pre_features, pre_strategy = "ds",
              pre_augment = "tm", pre_pseudo, pre_out;
  TrainConfig pre_cfg;
  auto* pre = app.add_subcommand("pretrain", "IDL pre-training");
  pre->add_option("--manifest", pre_manifest)->required();
  pre->add_option("--features", pre_features, "feature cache directory");
  pre->add_option("--strategy", pre_strategy)
      ->check(CLI::IsMember({"rs", "ds", "pis"}));
  pre->add_option("--augment", pre_augment)
      ->check(CLI::IsMember({"tm", "fm", "specaug", "noise", "volume",
                             "vtlp"}));
  pre->add_option("--pseudo-labels", pre_pseudo, "pseudo-label file (pis)");
  pre->add_option("--epochs", pre_cfg.epochs);
  pre->add_option("--batch-size", pre_cfg.batch_size);
  pre->add_option("--lr", pre_cfg.lr0);
  pre->add_option("--tau", pre_cfg.tau);
  pre->add_option("--seed", pre_cfg.seed);
  pre->add_option("--out", pre_out);

  // cluster
  std::string clu_manifest, clu_features, clu_init, clu_out;
  int clu_clusters = 20;
  std::uint64_t clu_seed = 0;
  auto* cluster =
      app.add_subcommand("cluster", "assign k-means pseudo labels");
  cluster->add_option("--manifest", clu_manifest)->required();
  cluster->add_option("--features", clu_features);
  cluster->add_option("--init", clu_init, "stage-1 checkpoint")->required();
  cluster->add_option("--clusters", clu_clusters);
  cluster->add_option("--seed", clu_seed);
  cluster->add_option("--out", clu_out);

  // finetune
  std::string ft_manifest, ft_features, ft_profile = "a", ft_init, ft_out;
  int ft_models = 5;
  TrainConfig ft_cfg;
  ft_cfg.lr0 = 0.0;  // resolved from profile below when unset
  auto* ft = app.add_subcommand("finetune", "downstream fine-tuning");
  ft->add_option("--manifest", ft_manifest)->required();
  ft->add_option("--features", ft_features);
  ft->add_option("--profile", ft_profile)->check(CLI::IsMember({"a", "b"}));
  ft->add_option("--init", ft_init, "pre-trained checkpoint");
  ft->add_option("--models", ft_models, "ensemble size (profile a)");
  ft->add_option("--epochs", ft_cfg.epochs);
  ft->add_option("--batch-size", ft_cfg.batch_size);
  ft->add_option("--lr", ft_cfg.lr0);
  ft->add_option("--seed", ft_cfg.seed);
  ft->add_option("--out", ft_out);

  // eval
  std::string ev_manifest, ev_features, ev_out;
  std::vector<std::string> ev_models;
  auto* ev = app.add_subcommand("eval", "evaluate on the test split");
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--features", ev_features);
  ev->add_option("--model", ev_models, "model checkpoint (repeatable)")
      ->required();
  ev->add_option("--out", ev_out);

  // probe
  std::string pr_manifest, pr_features, pr_model, pr_out;
  bool pr_no_ft = false;
  double pr_test_fraction = 0.3;
  std::uint64_t pr_seed = 0;
  auto* pr = app.add_subcommand("probe", "speaker classification probe");
  pr->add_option("--manifest", pr_manifest)->required();
  pr->add_option("--features", pr_features);
  pr->add_option("--model", pr_model)->required();
  pr->add_flag("--no-finetune", pr_no_ft,
               "embeddings come from a pre-trained-only checkpoint");
  pr->add_option("--test-fraction", pr_test_fraction);
  pr->add_option("--seed", pr_seed);
  pr->add_option("--out", pr_out);

  // augment-preview
  std::string ap_manifest, ap_features, ap_augment = "tm", ap_out;
  std::uint64_t ap_seed = 0;
  auto* ap = app.add_subcommand("augment-preview",
                                "write before/after feature matrices");
  ap->add_option("--manifest", ap_manifest)->required();
  ap->add_option("--features", ap_features);
  ap->add_option("--augment", ap_augment)
      ->check(CLI::IsMember({"tm", "fm", "specaug", "noise", "volume",
                             "vtlp"}));
  ap->add_option("--seed", ap_seed);
  ap->add_option("--out", ap_out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (synth->parsed())
      return cmd_synth(n_speakers, n_utts, synth_seed, labeled,
                       resolve_out_dir(synth_out, "synth"));
    if (features->parsed())
      return cmd_features(feat_manifest, resolve_out_dir(feat_out, "features"));
    if (pre->parsed()) {
      pre_cfg.strategy = strategy_from_string(pre_strategy);
      pre_cfg.augment = augment_kind_from_string(pre_augment);
      return cmd_pretrain(pre_manifest, pre_features, pre_cfg, pre_pseudo,
                          resolve_out_dir(pre_out, "pretrain"));
    }
    if (cluster->parsed())
      return cmd_cluster(clu_manifest, clu_features, clu_init, clu_clusters,
                         clu_seed, resolve_out_dir(clu_out, "cluster"));
    if (ft->parsed()) {
      if (ft_cfg.lr0 == 0.0) ft_cfg.lr0 = ft_profile == "b" ? 1e-2 : 1e-3;
      return cmd_finetune(ft_manifest, ft_features, ft_profile[0], ft_init,
                          ft_models, ft_cfg,
                          resolve_out_dir(ft_out, "finetune"));
    }
    if (ev->parsed())
      return cmd_eval(ev_manifest, ev_features, ev_models,
                      resolve_out_dir(ev_out, "eval"));
    if (pr->parsed())
      return cmd_probe(pr_manifest, pr_features, pr_model, pr_no_ft,
                       pr_test_fraction, pr_seed,
                       resolve_out_dir(pr_out, "probe"));
    if (ap->parsed())
      return cmd_augment_preview(ap_manifest, ap_features, ap_augment, ap_seed,
                                 resolve_out_dir(ap_out, "augment-preview"));
    std::cerr << app.help();
    return 1;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace idl::cli
