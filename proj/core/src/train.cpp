// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#include "idl/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "idl/dsp.hpp"
#include "idl/loss.hpp"

namespace idl {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (lr0 <= 0 || decay <= 0 || tau <= 0)
    throw std::invalid_argument("rates must be positive");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["lr0"] = lr0;
  j["decay"] = decay;
  j["tau"] = tau;
  j["strategy"] = strategy_to_string(strategy);
  j["augment"] = augment_kind_to_string(augment);
  j["seed"] = seed;
  j["augment_params"] = {
      {"snr_db", {augment_params.snr_db_lo, augment_params.snr_db_hi}},
      {"gain", {augment_params.gain_lo, augment_params.gain_hi}},
      {"alpha", {augment_params.alpha_lo, augment_params.alpha_hi}},
      {"t_max", augment_params.t_max},
      {"f_max", augment_params.f_max},
      {"warp_w", augment_params.warp_w}};
  return j;
}

PretrainPool build_pretrain_pool(std::vector<UtteranceFeatures> utts,
                                 std::vector<Waveform> waves) {
  if (!waves.empty() && waves.size() != utts.size())
    throw std::invalid_argument("pool: waves/utts misaligned");
  PretrainPool pool;
  pool.segments = concat_and_segment(utts);
  pool.utts = std::move(utts);
  pool.waves = std::move(waves);
  return pool;
}

namespace {

// Augmented twin of every segment in the pool for a signal-level kind.
// Noise/volume/VTLP preserve frame counts, so concat_and_segment yields a
// pool aligned index-for-index with the original.
std::vector<Segment> build_signal_aug_segments(const PretrainPool& pool,
                                               const TrainConfig& cfg,
                                               std::uint64_t seed) {
  if (pool.waves.empty())
    throw std::runtime_error(
        "signal-level augmentation requires waveforms (re-run without a "
        "feature-only cache)");
  static const Matrix fb = mel_filterbank();
  std::vector<UtteranceFeatures> aug_utts(pool.utts.size());
  for (size_t i = 0; i < pool.utts.size(); ++i) {
    aug_utts[i] = pool.utts[i];
    const std::uint64_t utt_seed = derive_seed(seed, 0x516, i);
    if (cfg.augment == AugmentKind::Vtlp) {
      Matrix power = stft_power(pool.waves[i]);
      const double alpha = draw_vtlp_alpha(cfg.augment_params, utt_seed);
      aug_utts[i].features = apply_log_mel(vtlp_warp(power, alpha), fb);
    } else {
      aug_utts[i].features = extract_log_mel(
          augment_signal(cfg.augment, pool.waves[i], cfg.augment_params,
                         utt_seed));
    }
  }
  auto aug = concat_and_segment(aug_utts);
  if (aug.size() != pool.segments.size())
    throw std::runtime_error("augmented pool misaligned with original");
  return aug;
}

Matrix augmented_features_for(const PretrainPool& pool,
                              const std::vector<Segment>* signal_aug,
                              const TrainConfig& cfg, int seg_index,
                              std::uint64_t seed) {
  if (is_signal_level(cfg.augment)) return (*signal_aug)[seg_index].features;
  return augment_features(cfg.augment, pool.segments[seg_index].features,
                          cfg.augment_params, seed);
}

BatchPlan make_plan(const std::vector<Segment>& segments,
                    SamplingStrategy strategy, int n, std::uint64_t seed) {
  switch (strategy) {
    case SamplingStrategy::RS: return sample_rs(segments, n, seed);
    case SamplingStrategy::DS: return sample_ds(segments, n, seed);
    case SamplingStrategy::PIS: return sample_pis(segments, n, seed);
  }
  throw std::logic_error("unreachable");
}

// Forward a batch of (original, augmented) segment pairs and return the IDL
// loss node.
nn::NodePtr<float> idl_batch_loss(DepAudioNet<float>& net,
                                  const PretrainPool& pool,
                                  const std::vector<Segment>* signal_aug,
                                  const TrainConfig& cfg,
                                  const std::vector<int>& batch, bool train,
                                  std::uint64_t epoch_seed,
                                  std::mt19937_64& drop_rng) {
  std::vector<nn::NodePtr<float>> f_rows, fhat_rows;
  f_rows.reserve(batch.size());
  fhat_rows.reserve(batch.size());
  for (size_t slot = 0; slot < batch.size(); ++slot) {
    const int idx = batch[slot];
    f_rows.push_back(forward_depaudionet(net, pool.segments[idx].features,
                                         ForwardMode::Embed, train, drop_rng));
    const Matrix aug = augmented_features_for(
        pool, signal_aug, cfg, idx, derive_seed(epoch_seed, 0xa06, slot, idx));
    fhat_rows.push_back(
        forward_depaudionet(net, aug, ForwardMode::Embed, train, drop_rng));
  }
  return idl_loss(nn::stack_rows(f_rows), nn::stack_rows(fhat_rows),
                  static_cast<float>(cfg.tau));
}

double validation_idl_loss(DepAudioNet<float>& net, const PretrainPool& val,
                           const std::vector<Segment>* val_aug,
                           const TrainConfig& cfg) {
  const int n = std::min<int>(cfg.batch_size,
                              static_cast<int>(val.segments.size()));
  if (n < 2) throw std::runtime_error("validation pool too small");
  // Fixed seed and RS batching: the validation metric must be comparable
  // across epochs regardless of the training strategy.
  const std::uint64_t vseed = derive_seed(cfg.seed, 0x7a11);
  auto plan = sample_rs(val.segments, n, vseed);
  auto rng = make_rng(vseed);  // unused in eval mode
  double total = 0.0;
  for (const auto& batch : plan.batches) {
    auto loss =
        idl_batch_loss(net, val, val_aug, cfg, batch, false, vseed, rng);
    total += loss->val[0];
  }
  return total / static_cast<double>(plan.batches.size());
}

}  // namespace

PretrainResult pretrain(PretrainPool& train_pool, PretrainPool& val_pool,
                        const TrainConfig& cfg) {
  cfg.validate();
  if (train_pool.segments.size() < static_cast<size_t>(cfg.batch_size))
    throw std::runtime_error("pretrain: training pool smaller than a batch");

  auto net = init_depaudionet<float>(derive_seed(cfg.seed, 0x141));

  std::vector<Segment> val_aug;
  const std::vector<Segment>* val_aug_ptr = nullptr;
  if (is_signal_level(cfg.augment)) {
    val_aug = build_signal_aug_segments(val_pool, cfg,
                                        derive_seed(cfg.seed, 0x7a11));
    val_aug_ptr = &val_aug;
  }

  PretrainResult result;
  result.best_val_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg.lr0, epoch);
    const std::uint64_t epoch_seed = derive_seed(cfg.seed, 0xe9, epoch);

    std::vector<Segment> train_aug;
    const std::vector<Segment>* train_aug_ptr = nullptr;
    if (is_signal_level(cfg.augment)) {
      train_aug = build_signal_aug_segments(train_pool, cfg, epoch_seed);
      train_aug_ptr = &train_aug;
    }

    auto plan = make_plan(train_pool.segments, cfg.strategy, cfg.batch_size,
                          derive_seed(epoch_seed, 0x91a));
    double epoch_loss = 0.0;
    for (size_t b = 0; b < plan.batches.size(); ++b) {
      auto drop_rng = make_rng(derive_seed(epoch_seed, 0xd0, b));
      auto loss = idl_batch_loss(net, train_pool, train_aug_ptr, cfg,
                                 plan.batches[b], true,
                                 derive_seed(epoch_seed, b), drop_rng);
      epoch_loss += loss->val[0];
      nn::backward(loss);
      sgd_step(net, static_cast<float>(lr));
    }
    epoch_loss /= static_cast<double>(plan.batches.size());

    const double val_loss = validation_idl_loss(net, val_pool, val_aug_ptr, cfg);
    result.curve.push_back({epoch, epoch_loss, val_loss, lr});
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      result.best_state = net.state_dict();
    }
  }
  return result;
}

DepAudioNet<float> net_from_state(const StateDict& sd) {
  auto net = init_depaudionet<float>(0);
  net.load_state_dict(sd);
  return net;
}

namespace {

StateDict finetune_one(const std::vector<Segment>& segments,
                       const std::optional<StateDict>& init,
                       const TrainConfig& cfg, int model_index) {
  auto net = init ? net_from_state(*init)
                  : init_depaudionet<float>(
                        derive_seed(cfg.seed, 0xf7, model_index));
  // Fine-tuning normalizes with the (pre-)existing running statistics so
  // that training and inference see the same feature space.
  net.bn_frozen = true;
  const int n = std::min<int>(cfg.batch_size,
                              static_cast<int>(segments.size()));
  if (n < 1) throw std::runtime_error("finetune: empty segment pool");

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const float lr = static_cast<float>(lr_at_epoch(cfg.lr0, epoch));
    const std::uint64_t epoch_seed =
        derive_seed(cfg.seed, 0xfe, model_index, epoch);
    auto plan = sample_rs(segments, n, epoch_seed);
    for (size_t b = 0; b < plan.batches.size(); ++b) {
      auto drop_rng = make_rng(derive_seed(epoch_seed, 0xd0, b));
      nn::NodePtr<float> acc;
      for (int idx : plan.batches[b]) {
        auto p = forward_depaudionet(net, segments[idx].features,
                                     ForwardMode::Classify, true, drop_rng);
        auto term = nn::bce_loss(p, static_cast<float>(segments[idx].label));
        acc = acc ? nn::add(acc, term) : term;
      }
      auto loss = nn::mul_scalar(acc, 1.0f / static_cast<float>(n));
      nn::backward(loss);
      sgd_step(net, lr);
    }
  }
  return net.state_dict();
}

}  // namespace

std::vector<StateDict> finetune_ensemble(
    const std::vector<UtteranceFeatures>& train_utts,
    const std::optional<StateDict>& init, const TrainConfig& cfg,
    char profile, int k_models) {
  cfg.validate();
  if (profile != 'a' && profile != 'b')
    throw std::invalid_argument("profile must be 'a' or 'b'");

  std::vector<std::vector<Segment>> subsets;
  if (profile == 'a') {
    for (int m = 0; m < k_models; ++m)
      subsets.push_back(random_crop_and_subsample(train_utts, cfg.seed + m));
  } else {
    // Balanced data: no cropping or sub-sampling, one model on all segments.
    std::vector<Segment> all;
    for (const auto& u : train_utts)
      for (auto& s : segment_utterance(u)) all.push_back(std::move(s));
    if (all.empty()) throw std::runtime_error("finetune: no segments");
    subsets.push_back(std::move(all));
  }

  // Ensemble members are independent; each thread owns its graph.
  std::vector<StateDict> out(subsets.size());
  std::vector<std::thread> workers;
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (size_t m = 0; m < subsets.size(); ++m) {
    workers.emplace_back([&, m]() {
      try {
        out[m] = finetune_one(subsets[m], init, cfg, static_cast<int>(m));
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

double predict_utterance(std::vector<DepAudioNet<float>>& models,
                         const UtteranceFeatures& utt) {
  if (models.empty()) throw std::invalid_argument("predict: no models");
  auto windows = segment_utterance(utt);
  if (windows.empty())
    throw std::runtime_error("utterance " + utt.utterance_id +
                             " shorter than one segment");
  auto rng = make_rng(0);  // unused in eval mode
  double total = 0.0;
  for (auto& net : models)
    for (const auto& w : windows) {
      auto p = forward_depaudionet(net, w.features, ForwardMode::Classify,
                                   false, rng);
      total += p->val[0];
    }
  return total / static_cast<double>(models.size() * windows.size());
}

EvalReport f1_scores(const std::map<std::string, int>& predictions,
                     const std::map<std::string, int>& truth) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("f1_scores: key mismatch");
  EvalReport report;
  for (const auto& [id, t] : truth) {
    auto it = predictions.find(id);
    if (it == predictions.end())
      throw std::invalid_argument("f1_scores: missing prediction for " + id);
    ++report.confusion[t][it->second];
  }
  auto f1_for = [&](int c) {
    const double tp = static_cast<double>(report.confusion[c][c]);
    const double fp = static_cast<double>(report.confusion[1 - c][c]);
    const double fn = static_cast<double>(report.confusion[c][1 - c]);
    const double prec = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    const double rec = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    return (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  };
  report.f1_nd = f1_for(0);
  report.f1_d = f1_for(1);
  report.f1_avg = (report.f1_nd + report.f1_d) / 2.0;
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["f1_avg"] = f1_avg;
  j["f1_nd"] = f1_nd;
  j["f1_d"] = f1_d;
  j["confusion"] = {{confusion[0][0], confusion[0][1]},
                    {confusion[1][0], confusion[1][1]}};
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& [id, p] : per_utterance_probs) probs[id] = p;
  j["per_utterance"] = probs;
  return j;
}

EvalReport evaluate(std::vector<DepAudioNet<float>>& models,
                    const std::vector<UtteranceFeatures>& test_utts) {
  std::map<std::string, int> predictions, truth;
  std::map<std::string, double> probs;
  for (const auto& utt : test_utts) {
    if (utt.label != 0 && utt.label != 1)
      throw std::invalid_argument("evaluate: unlabeled utterance " +
                                  utt.utterance_id);
    const double p = predict_utterance(models, utt);
    probs[utt.utterance_id] = p;
    predictions[utt.utterance_id] = p >= 0.5 ? 1 : 0;
    truth[utt.utterance_id] = utt.label;
  }
  EvalReport report = f1_scores(predictions, truth);
  report.per_utterance_probs = std::move(probs);
  return report;
}

std::vector<float> embed_segment(DepAudioNet<float>& net, const Segment& seg) {
  auto rng = make_rng(0);  // unused in eval mode
  auto e = forward_depaudionet(net, seg.features, ForwardMode::Embed, false,
                               rng);
  return e->val;
}

void save_loss_curve(const std::string& path,
                     const std::vector<LossCurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss curve: " + path);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& p : curve)
    out << p.epoch << "," << p.train_loss << "," << p.val_loss << "," << p.lr
        << "\n";
}

}  // namespace idl
