// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idl/augment.hpp"
#include "idl/common.hpp"
#include "idl/loss.hpp"
#include "idl/model.hpp"
#include "idl/sampling.hpp"
#include "idl/segment.hpp"
#include "json.hpp"

namespace idl {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 20;
  double lr0 = 1e-3;      // downstream profile B uses 1e-2
  double decay = 0.9;     // applied every two epochs
  double tau = kDefaultTau;
  SamplingStrategy strategy = SamplingStrategy::DS;
  AugmentKind augment = AugmentKind::TimeMask;
  AugmentParams augment_params;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
};

// Pre-training data for one split. Waveforms are optional; they are required
// only for signal-level augmentations, which re-synthesize features from
// augmented audio each epoch.
struct PretrainPool {
  std::vector<UtteranceFeatures> utts;
  std::vector<Waveform> waves;  // aligned with utts, may be empty
  std::vector<Segment> segments;
};

PretrainPool build_pretrain_pool(std::vector<UtteranceFeatures> utts,
                                 std::vector<Waveform> waves = {});

struct LossCurvePoint {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct PretrainResult {
  StateDict best_state;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  std::vector<LossCurvePoint> curve;
};

// IDL pre-training. Per epoch: build a batch plan per cfg.strategy, augment
// each instance once, embed both copies (train mode), minimize the IDL loss
// by SGD with the stepped lr schedule. Validation IDL loss is evaluated each
// epoch in inference mode with a fixed augmentation seed; the state with the
// smallest validation loss is returned.
PretrainResult pretrain(PretrainPool& train_pool, PretrainPool& val_pool,
                        const TrainConfig& cfg);

// Downstream fine-tuning. Profile 'a' (imbalanced data): k_models balanced
// subsets via random_crop_and_subsample(seed+m), one model per subset.
// Profile 'b' (balanced data): cropping/sub-sampling disabled, one model on
// all segments. Training is segment-level binary cross-entropy; final-epoch
// parameters are returned. `init` of nullopt means random initialization
// (the no-pre-training baseline).
std::vector<StateDict> finetune_ensemble(
    const std::vector<UtteranceFeatures>& train_utts,
    const std::optional<StateDict>& init, const TrainConfig& cfg,
    char profile, int k_models = 5);

// Mean classify-mode probability over all models and all 120-frame windows
// of the utterance.
double predict_utterance(std::vector<DepAudioNet<float>>& models,
                         const UtteranceFeatures& utt);

struct EvalReport {
  double f1_nd = 0.0;
  double f1_d = 0.0;
  double f1_avg = 0.0;
  long confusion[2][2] = {{0, 0}, {0, 0}};  // [truth][prediction]
  std::map<std::string, double> per_utterance_probs;

  nlohmann::json to_json() const;
};

// Per-class F1 with the 0/0 := 0 convention; f1_avg is the macro average.
EvalReport f1_scores(const std::map<std::string, int>& predictions,
                     const std::map<std::string, int>& truth);

// Full evaluation: per-utterance probabilities, threshold 0.5, F1 report.
EvalReport evaluate(std::vector<DepAudioNet<float>>& models,
                    const std::vector<UtteranceFeatures>& test_utts);

// Inference-mode embedding of one segment (dropout off, running batchnorm
// statistics).
std::vector<float> embed_segment(DepAudioNet<float>& net, const Segment& seg);

// Fresh float model loaded from a state dict.
DepAudioNet<float> net_from_state(const StateDict& sd);

void save_loss_curve(const std::string& path,
                     const std::vector<LossCurvePoint>& curve);

}  // namespace idl
