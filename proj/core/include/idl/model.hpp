// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0
//
// DepAudioNet backbone: conv1d(40->128, k=3, pad 1) -> batchnorm -> ReLU ->
// maxpool(k=3, stride 3; 120 -> 40 frames) -> dropout(0.05) -> 2 LSTM layers
// (hidden 128) -> final hidden state. Embed mode L2-normalizes the final
// hidden state; classify mode applies a sigmoid-activated linear head.

#pragma once

#include <map>
#include <string>

#include "idl/autograd.hpp"
#include "idl/common.hpp"

namespace idl {

inline constexpr int kConvChannels = 128;
inline constexpr int kConvKernel = 3;
inline constexpr int kHiddenSize = 128;
inline constexpr double kDropoutP = 0.05;

enum class ForwardMode { Embed, Classify };

// Named float32 tensors; the exchange format between models, checkpoints and
// the probe.
struct StateDict {
  std::map<std::string, std::pair<std::vector<int>, std::vector<float>>>
      tensors;
};

template <typename T>
struct DepAudioNet {
  nn::NodePtr<T> conv_w, conv_b;
  nn::NodePtr<T> bn_gamma, bn_beta;
  nn::NodePtr<T> l1_w_ih, l1_w_hh, l1_b;
  nn::NodePtr<T> l2_w_ih, l2_w_hh, l2_b;
  nn::NodePtr<T> fc_w, fc_b;
  std::vector<T> bn_running_mean, bn_running_var;
  T bn_momentum = T(0.1);
  // When set, training forwards normalize with the running statistics
  // instead of per-segment statistics (and stop updating them). Used for
  // fine-tuning: per-segment statistics remove each segment's channel
  // means, so a classifier trained on them sees different features than
  // eval-mode inference provides.
  bool bn_frozen = false;

  std::vector<nn::NodePtr<T>> trainable() const {
    return {conv_w, conv_b, bn_gamma, bn_beta, l1_w_ih, l1_w_hh,
            l1_b,   l2_w_ih, l2_w_hh, l2_b,    fc_w,   fc_b};
  }
  StateDict state_dict() const;
  void load_state_dict(const StateDict& sd);
};

// Uniform U[-1/sqrt(fan_in), 1/sqrt(fan_in)] weights; LSTM forget-gate bias
// slice initialized to 1, all other biases 0. Deterministic in seed.
template <typename T>
DepAudioNet<T> init_depaudionet(std::uint64_t seed);

// Forward pass over one 40x120 feature segment. `rng` drives the dropout
// mask (consumed only when train is set). Embed mode returns a unit-norm
// 128-d node; classify mode a scalar probability node.
template <typename T>
nn::NodePtr<T> forward_depaudionet(DepAudioNet<T>& net, const Matrix& seg,
                                   ForwardMode mode, bool train,
                                   std::mt19937_64& rng);

// Same, but from an existing input node (used by gradient checks that need
// input gradients).
template <typename T>
nn::NodePtr<T> forward_depaudionet(DepAudioNet<T>& net,
                                   const nn::NodePtr<T>& input,
                                   ForwardMode mode, bool train,
                                   std::mt19937_64& rng);

// p <- p - lr * grad for every trainable tensor, then grads are zeroed.
// Batchnorm running statistics are not touched.
template <typename T>
void sgd_step(DepAudioNet<T>& net, T lr);

// lr(epoch) = lr0 * 0.9^floor(epoch/2).
inline double lr_at_epoch(double lr0, int epoch) {
  double lr = lr0;
  for (int i = 0; i < epoch / 2; ++i) lr *= 0.9;
  return lr;
}

// ---------------------------------------------------------------------------
// Implementation

template <typename T>
StateDict DepAudioNet<T>::state_dict() const {
  StateDict sd;
  auto put = [&](const std::string& name, const nn::NodePtr<T>& node) {
    std::vector<float> vals(node->val.begin(), node->val.end());
    sd.tensors[name] = {node->shape, std::move(vals)};
  };
  put("conv.weight", conv_w);
  put("conv.bias", conv_b);
  put("bn.gamma", bn_gamma);
  put("bn.beta", bn_beta);
  put("lstm1.w_ih", l1_w_ih);
  put("lstm1.w_hh", l1_w_hh);
  put("lstm1.bias", l1_b);
  put("lstm2.w_ih", l2_w_ih);
  put("lstm2.w_hh", l2_w_hh);
  put("lstm2.bias", l2_b);
  put("fc.weight", fc_w);
  put("fc.bias", fc_b);
  sd.tensors["bn.running_mean"] = {
      {kConvChannels},
      std::vector<float>(bn_running_mean.begin(), bn_running_mean.end())};
  sd.tensors["bn.running_var"] = {
      {kConvChannels},
      std::vector<float>(bn_running_var.begin(), bn_running_var.end())};
  return sd;
}

template <typename T>
void DepAudioNet<T>::load_state_dict(const StateDict& sd) {
  auto get = [&](const std::string& name, nn::NodePtr<T>& node) {
    auto it = sd.tensors.find(name);
    if (it == sd.tensors.end())
      throw std::runtime_error("state dict missing tensor " + name);
    if (it->second.first != node->shape)
      throw std::runtime_error("state dict shape mismatch for " + name);
    node->val.assign(it->second.second.begin(), it->second.second.end());
    std::fill(node->grad.begin(), node->grad.end(), T(0));
  };
  get("conv.weight", conv_w);
  get("conv.bias", conv_b);
  get("bn.gamma", bn_gamma);
  get("bn.beta", bn_beta);
  get("lstm1.w_ih", l1_w_ih);
  get("lstm1.w_hh", l1_w_hh);
  get("lstm1.bias", l1_b);
  get("lstm2.w_ih", l2_w_ih);
  get("lstm2.w_hh", l2_w_hh);
  get("lstm2.bias", l2_b);
  get("fc.weight", fc_w);
  get("fc.bias", fc_b);
  const auto& rm = sd.tensors.at("bn.running_mean").second;
  const auto& rv = sd.tensors.at("bn.running_var").second;
  bn_running_mean.assign(rm.begin(), rm.end());
  bn_running_var.assign(rv.begin(), rv.end());
}

template <typename T>
DepAudioNet<T> init_depaudionet(std::uint64_t seed) {
  auto rng = make_rng(derive_seed(seed, 0x1417));
  auto uniform_leaf = [&](std::vector<int> shape, double bound) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<T> vals(n);
    for (auto& v : vals) v = static_cast<T>(dist(rng));
    return nn::make_leaf<T>(std::move(shape), std::move(vals), true);
  };
  auto const_leaf = [&](std::vector<int> shape, T fill) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return nn::make_leaf<T>(std::move(shape), std::vector<T>(n, fill), true);
  };

  DepAudioNet<T> net;
  const int H = kHiddenSize;
  net.conv_w = uniform_leaf({kConvChannels, kNumMels, kConvKernel},
                            1.0 / std::sqrt(double(kNumMels * kConvKernel)));
  net.conv_b = const_leaf({kConvChannels}, T(0));
  net.bn_gamma = const_leaf({kConvChannels}, T(1));
  net.bn_beta = const_leaf({kConvChannels}, T(0));

  auto lstm_bias = [&]() {
    std::vector<T> b(4 * H, T(0));
    for (int j = 0; j < H; ++j) b[H + j] = T(1);  // forget gate
    return nn::make_leaf<T>({4 * H}, std::move(b), true);
  };
  const double lstm_bound = 1.0 / std::sqrt(double(H));
  net.l1_w_ih = uniform_leaf({4 * H, kConvChannels}, lstm_bound);
  net.l1_w_hh = uniform_leaf({4 * H, H}, lstm_bound);
  net.l1_b = lstm_bias();
  net.l2_w_ih = uniform_leaf({4 * H, H}, lstm_bound);
  net.l2_w_hh = uniform_leaf({4 * H, H}, lstm_bound);
  net.l2_b = lstm_bias();

  net.fc_w = uniform_leaf({1, H}, 1.0 / std::sqrt(double(H)));
  net.fc_b = const_leaf({1}, T(0));

  net.bn_running_mean.assign(kConvChannels, T(0));
  net.bn_running_var.assign(kConvChannels, T(1));
  return net;
}

template <typename T>
nn::NodePtr<T> forward_depaudionet(DepAudioNet<T>& net,
                                   const nn::NodePtr<T>& input,
                                   ForwardMode mode, bool train,
                                   std::mt19937_64& rng) {
  if (input->shape != std::vector<int>{kNumMels, kSegmentFrames})
    throw std::invalid_argument("forward: input must be 40x120");

  auto conv_out = nn::conv1d(input, net.conv_w, net.conv_b);

  const bool bn_train = train && !net.bn_frozen;
  std::vector<T> batch_mean, batch_var;
  auto bn = nn::batchnorm(conv_out, net.bn_gamma, net.bn_beta, bn_train,
                          net.bn_running_mean, net.bn_running_var,
                          &batch_mean, &batch_var);
  if (bn_train) {
    for (int c = 0; c < kConvChannels; ++c) {
      net.bn_running_mean[c] = (T(1) - net.bn_momentum) * net.bn_running_mean[c] +
                               net.bn_momentum * batch_mean[c];
      net.bn_running_var[c] = (T(1) - net.bn_momentum) * net.bn_running_var[c] +
                              net.bn_momentum * batch_var[c];
    }
  }

  auto activated = nn::relu(bn);
  auto pooled = nn::maxpool1d(activated, 3, 3);  // 120 -> 40 frames
  auto dropped = nn::dropout(pooled, kDropoutP, train, rng);

  const int steps = pooled->shape.at(1);
  const int H = kHiddenSize;
  auto hc1 = nn::make_leaf<T>({2 * H}, std::vector<T>(2 * H, T(0)), false);
  auto hc2 = nn::make_leaf<T>({2 * H}, std::vector<T>(2 * H, T(0)), false);
  nn::NodePtr<T> h2;
  for (int t = 0; t < steps; ++t) {
    auto xt = nn::column(dropped, t);
    hc1 = nn::lstm_cell(xt, hc1, net.l1_w_ih, net.l1_w_hh, net.l1_b);
    auto h1 = nn::slice(hc1, 0, H);
    hc2 = nn::lstm_cell(h1, hc2, net.l2_w_ih, net.l2_w_hh, net.l2_b);
  }
  h2 = nn::slice(hc2, 0, H);

  if (mode == ForwardMode::Embed) return nn::l2_normalize(h2);
  return nn::sigmoid(nn::linear(net.fc_w, h2, net.fc_b));
}

template <typename T>
nn::NodePtr<T> forward_depaudionet(DepAudioNet<T>& net, const Matrix& seg,
                                   ForwardMode mode, bool train,
                                   std::mt19937_64& rng) {
  if (seg.rows != kNumMels || seg.cols != kSegmentFrames)
    throw std::invalid_argument("forward: segment must be 40x120");
  std::vector<T> vals(seg.v.begin(), seg.v.end());
  auto input =
      nn::make_leaf<T>({kNumMels, kSegmentFrames}, std::move(vals), false);
  return forward_depaudionet(net, input, mode, train, rng);
}

template <typename T>
void sgd_step(DepAudioNet<T>& net, T lr) {
  if (!(lr >= T(0))) throw std::invalid_argument("sgd_step: bad lr");
  for (auto& p : net.trainable()) {
    for (size_t i = 0; i < p->size(); ++i) p->val[i] -= lr * p->grad[i];
    std::fill(p->grad.begin(), p->grad.end(), T(0));
  }
}

}  // namespace idl
