// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <fstream>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "idl/checkpoint.hpp"
#include "idl/dsp.hpp"
#include "idl/synth.hpp"
#include "idl/train.hpp"

using namespace idl;

namespace {

std::map<std::string, int> preds(std::initializer_list<std::pair<const char*, int>> xs) {
  std::map<std::string, int> m;
  for (auto& [k, v] : xs) m[k] = v;
  return m;
}

// Features for a labeled synthetic corpus split.
std::vector<UtteranceFeatures> featurize(const SynthCorpus& c, Split split) {
  std::vector<UtteranceFeatures> utts;
  for (size_t i = 0; i < c.entries.size(); ++i) {
    if (c.entries[i].split != split) continue;
    UtteranceFeatures u;
    u.utterance_id = c.entries[i].path;
    u.speaker_id = c.entries[i].speaker_id;
    u.label = c.entries[i].label;
    u.features = extract_log_mel(c.waves[i]);
    utts.push_back(std::move(u));
  }
  return utts;
}

}  // namespace

TEST_CASE("f1_scores on hand-computed confusion matrices") {
  // TP=3, FP=1, FN=2 for the positive class: precision 3/4, recall 3/5,
  // F1 = 2*0.75*0.6/1.35 = 0.666666...
  auto truth = preds({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}, {"e", 1},
                      {"f", 0}, {"g", 0}, {"h", 0}});
  auto p = preds({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 0}, {"e", 0},
                  {"f", 1}, {"g", 0}, {"h", 0}});
  auto r = f1_scores(p, truth);
  CHECK(std::fabs(r.f1_d - 2.0 / 3.0) < 1e-12);
  CHECK(r.confusion[1][1] == 3);
  CHECK(r.confusion[0][1] == 1);
  CHECK(r.confusion[1][0] == 2);
  CHECK(r.confusion[0][0] == 2);
  // Negative class: TP=2, FP=2, FN=1 -> precision 1/2, recall 2/3,
  // F1 = 2*(1/2)*(2/3)/(7/6) = 4/7.
  CHECK(std::fabs(r.f1_nd - 4.0 / 7.0) < 1e-12);
  CHECK(std::fabs(r.f1_avg - 0.5 * (2.0 / 3.0 + 4.0 / 7.0)) < 1e-12);

  // Perfect predictions.
  auto perfect = f1_scores(truth, truth);
  CHECK(perfect.f1_avg == 1.0);
  CHECK(perfect.f1_d == 1.0);
  CHECK(perfect.f1_nd == 1.0);

  // All-wrong predictions: both classes have zero TP -> 0/0 := 0.
  auto flipped = preds({{"a", 0}, {"b", 0}, {"c", 0}, {"d", 0}, {"e", 0},
                        {"f", 1}, {"g", 1}, {"h", 1}});
  auto worst = f1_scores(flipped, truth);
  CHECK(worst.f1_avg == 0.0);

  // All-positive predictor against balanced truth: F1_nd = 0 (no negative
  // predictions), F1_d = 2*p*r/(p+r) with p=5/8, r=1.
  auto allpos = preds({{"a", 1}, {"b", 1}, {"c", 1}, {"d", 1}, {"e", 1},
                       {"f", 1}, {"g", 1}, {"h", 1}});
  auto rp = f1_scores(allpos, truth);
  CHECK(rp.f1_nd == 0.0);
  CHECK(std::fabs(rp.f1_d - 2.0 * (5.0 / 8.0) / (5.0 / 8.0 + 1.0)) < 1e-12);

  // Mismatched keys are an error.
  CHECK_THROWS(f1_scores(preds({{"zz", 1}}), truth));
}

TEST_CASE("checkpoint round trip is bit-exact") {
  idltest::TempDir tmp("ckpt");
  auto net = init_depaudionet<float>(44);
  auto sd = net.state_dict();
  nlohmann::json meta{{"stage", "pretrain"}, {"epoch", 17}};
  save_checkpoint(tmp.file("m.idlc"), sd, meta);

  auto [sd2, meta2] = load_checkpoint(tmp.file("m.idlc"));
  CHECK(meta2["stage"] == "pretrain");
  CHECK(meta2["epoch"] == 17);
  REQUIRE(sd2.tensors.size() == sd.tensors.size());
  for (auto& [name, t] : sd.tensors) {
    REQUIRE(sd2.tensors.count(name));
    CHECK(sd2.tensors[name].first == t.first);
    CHECK(sd2.tensors[name].second == t.second);  // float identity
  }
  // Saving the loaded dict reproduces identical bytes.
  save_checkpoint(tmp.file("m2.idlc"), sd2, meta2);
  std::ifstream a(tmp.file("m.idlc"), std::ios::binary);
  std::ifstream b(tmp.file("m2.idlc"), std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("checkpoint corruption and version errors") {
  idltest::TempDir tmp("ckpt2");
  auto sd = init_depaudionet<float>(1).state_dict();
  save_checkpoint(tmp.file("m.idlc"), sd, {});

  // Bad magic.
  {
    std::fstream f(tmp.file("m.idlc"), std::ios::in | std::ios::out |
                                           std::ios::binary);
    f.write("XXXX", 4);
  }
  CHECK_THROWS(load_checkpoint(tmp.file("m.idlc")));

  // Truncated payload.
  save_checkpoint(tmp.file("t.idlc"), sd, {});
  {
    std::ifstream in(tmp.file("t.idlc"), std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(tmp.file("t.idlc"), std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), long(bytes.size()) - 100);
  }
  CHECK_THROWS(load_checkpoint(tmp.file("t.idlc")));

  CHECK_THROWS(load_checkpoint(tmp.file("missing.idlc")));
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 1;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig{};
  cfg.epochs = 0;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig{};
  cfg.tau = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = TrainConfig{};
  cfg.lr0 = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("pretrain runs, records a curve and is deterministic") {
  auto corpus = synth_corpus(6, 2, 71, false);
  std::vector<UtteranceFeatures> train_utts, val_utts;
  for (size_t i = 0; i < corpus.entries.size(); ++i) {
    UtteranceFeatures u;
    u.utterance_id = corpus.entries[i].path;
    u.speaker_id = corpus.entries[i].speaker_id;
    u.features = extract_log_mel(corpus.waves[i]);
    (corpus.entries[i].split == Split::Train ? train_utts : val_utts)
        .push_back(std::move(u));
  }
  REQUIRE(!val_utts.empty());

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.strategy = SamplingStrategy::RS;
  cfg.augment = AugmentKind::TimeMask;
  cfg.seed = 5;

  auto run = [&]() {
    auto tp = build_pretrain_pool(train_utts);
    auto vp = build_pretrain_pool(val_utts);
    return pretrain(tp, vp, cfg);
  };
  auto r1 = run();
  REQUIRE(r1.curve.size() == 2);
  CHECK(r1.best_epoch >= 0);
  CHECK(r1.best_epoch < 2);
  CHECK(r1.curve[0].lr == doctest::Approx(cfg.lr0));
  CHECK(std::isfinite(r1.curve[0].train_loss));
  CHECK(std::isfinite(r1.curve[0].val_loss));
  CHECK(r1.best_val_loss ==
        doctest::Approx(std::min(r1.curve[0].val_loss, r1.curve[1].val_loss)));

  auto r2 = run();
  CHECK(r2.best_val_loss == r1.best_val_loss);
  for (auto& [name, t] : r1.best_state.tensors)
    CHECK(r2.best_state.tensors.at(name).second == t.second);

  // Loss curve CSV.
  idltest::TempDir tmp("curve");
  save_loss_curve(tmp.file("c.csv"), r1.curve);
  std::ifstream in(tmp.file("c.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "epoch,train_loss,val_loss,lr");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == 2);
}

TEST_CASE("finetune/evaluate smoke on the labeled corpus") {
  auto corpus = synth_corpus(10, 2, 81, true);
  auto train_utts = featurize(corpus, Split::Train);
  auto test_utts = featurize(corpus, Split::Test);
  REQUIRE(!train_utts.empty());
  REQUIRE(!test_utts.empty());

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 9;

  auto states = finetune_ensemble(train_utts, std::nullopt, cfg, 'a', 2);
  REQUIRE(states.size() == 2);
  std::vector<DepAudioNet<float>> models;
  for (auto& s : states) models.push_back(net_from_state(s));

  auto report = evaluate(models, test_utts);
  CHECK(report.per_utterance_probs.size() == test_utts.size());
  long total = report.confusion[0][0] + report.confusion[0][1] +
               report.confusion[1][0] + report.confusion[1][1];
  CHECK(total == long(test_utts.size()));
  for (auto& [id, p] : report.per_utterance_probs) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  CHECK(report.f1_avg >= 0.0);
  CHECK(report.f1_avg <= 1.0);

  // Profile b trains a single model on everything.
  auto single = finetune_ensemble(train_utts, std::nullopt, cfg, 'b', 5);
  CHECK(single.size() == 1);

  // Determinism end to end.
  auto states2 = finetune_ensemble(train_utts, std::nullopt, cfg, 'a', 2);
  std::vector<DepAudioNet<float>> models2;
  for (auto& s : states2) models2.push_back(net_from_state(s));
  auto report2 = evaluate(models2, test_utts);
  CHECK(report2.to_json() == report.to_json());
}

TEST_CASE("predict_utterance averages over models and windows") {
  // Two frozen "models" produce fixed probabilities per window; the mean
  // over models x windows must match direct arithmetic.
  auto corpus = synth_corpus(2, 1, 91, true);
  UtteranceFeatures u;
  u.utterance_id = "u";
  u.speaker_id = "s";
  u.label = 1;
  u.features = extract_log_mel(corpus.waves[0]);
  REQUIRE(u.features.rows >= kSegmentFrames);

  std::vector<DepAudioNet<float>> models;
  models.push_back(init_depaudionet<float>(1));
  models.push_back(init_depaudionet<float>(2));
  const double mean = predict_utterance(models, u);

  auto segs = segment_utterance(u);
  double acc = 0.0;
  int count = 0;
  for (auto& m : models)
    for (auto& s : segs) {
      std::mt19937_64 rng(0);
      acc += forward_depaudionet(m, s.features, ForwardMode::Classify, false,
                                 rng)
                 ->val[0];
      ++count;
    }
  CHECK(mean == doctest::Approx(acc / count).epsilon(1e-6));
}
