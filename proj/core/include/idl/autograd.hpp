// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0
//
// Minimal reverse-mode differentiation engine. A computation graph is a DAG
// of shared Node objects; every op allocates a fresh output node and a
// closure that scatters the output gradient into its parents. Templated on
// the scalar type: training runs in float, the gradient-check harness
// instantiates double.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace idl::nn {

template <typename T>
struct Node {
  std::vector<int> shape;
  std::vector<T> val;
  std::vector<T> grad;
  bool requires_grad = false;
  bool consumed = false;  // set once backward has run through this node
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  size_t size() const { return val.size(); }
};

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

template <typename T>
NodePtr<T> make_leaf(std::vector<int> shape, std::vector<T> values,
                     bool requires_grad) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  if (values.size() != n)
    throw std::invalid_argument("make_leaf: shape/value mismatch");
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->val = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(n, T(0));
  return node;
}

template <typename T>
NodePtr<T> make_op_node(std::vector<int> shape,
                        std::vector<NodePtr<T>> parents) {
  size_t n = 1;
  for (int d : shape) n *= static_cast<size_t>(d);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->val.assign(n, T(0));
  node->requires_grad = false;
  for (const auto& p : parents)
    if (p->requires_grad) node->requires_grad = true;
  if (node->requires_grad) {
    node->grad.assign(n, T(0));
    node->parents = std::move(parents);
  }
  return node;
}

// Reverse-mode accumulation from a scalar loss. The graph is consumed:
// calling backward twice through the same nodes is an error.
template <typename T>
void backward(const NodePtr<T>& loss) {
  if (loss->size() != 1)
    throw std::runtime_error("backward: loss must be scalar");
  if (loss->consumed)
    throw std::runtime_error("backward: graph already consumed");
  if (!loss->requires_grad) return;

  // Iterative post-order DFS.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<T>* parent = node->parents[idx++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->consumed)
      throw std::runtime_error("backward: graph already consumed");
    if (node->backward_fn) {
      node->backward_fn(*node);
      node->consumed = true;
    }
  }
  loss->consumed = true;
}

// ---------------------------------------------------------------------------
// Elementwise and reduction ops

template <typename T>
NodePtr<T> add(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (a->size() != b->size()) throw std::invalid_argument("add: size mismatch");
  auto out = make_op_node<T>(a->shape, {a, b});
  for (size_t i = 0; i < a->size(); ++i) out->val[i] = a->val[i] + b->val[i];
  if (out->requires_grad) {
    auto pa = a, pb = b;
    out->backward_fn = [pa, pb](Node<T>& self) {
      if (pa->requires_grad)
        for (size_t i = 0; i < self.size(); ++i) pa->grad[i] += self.grad[i];
      if (pb->requires_grad)
        for (size_t i = 0; i < self.size(); ++i) pb->grad[i] += self.grad[i];
    };
  }
  return out;
}

template <typename T>
NodePtr<T> mul_scalar(const NodePtr<T>& a, T s) {
  auto out = make_op_node<T>(a->shape, {a});
  for (size_t i = 0; i < a->size(); ++i) out->val[i] = a->val[i] * s;
  if (out->requires_grad) {
    auto pa = a;
    out->backward_fn = [pa, s](Node<T>& self) {
      for (size_t i = 0; i < self.size(); ++i) pa->grad[i] += s * self.grad[i];
    };
  }
  return out;
}

template <typename T>
NodePtr<T> sum(const NodePtr<T>& a) {
  auto out = make_op_node<T>({1}, {a});
  T acc = T(0);
  for (T v : a->val) acc += v;
  out->val[0] = acc;
  if (out->requires_grad) {
    auto pa = a;
    out->backward_fn = [pa](Node<T>& self) {
      for (size_t i = 0; i < pa->size(); ++i) pa->grad[i] += self.grad[0];
    };
  }
  return out;
}

template <typename T>
NodePtr<T> sum_squares(const NodePtr<T>& a) {
  auto out = make_op_node<T>({1}, {a});
  T acc = T(0);
  for (T v : a->val) acc += v * v;
  out->val[0] = acc;
  if (out->requires_grad) {
    auto pa = a;
    out->backward_fn = [pa](Node<T>& self) {
      for (size_t i = 0; i < pa->size(); ++i)
        pa->grad[i] += T(2) * pa->val[i] * self.grad[0];
    };
  }
  return out;
}

template <typename T>
NodePtr<T> relu(const NodePtr<T>& a) {
  auto out = make_op_node<T>(a->shape, {a});
  for (size_t i = 0; i < a->size(); ++i)
    out->val[i] = a->val[i] > T(0) ? a->val[i] : T(0);
  if (out->requires_grad) {
    auto pa = a;
    out->backward_fn = [pa](Node<T>& self) {
      for (size_t i = 0; i < self.size(); ++i)
        if (pa->val[i] > T(0)) pa->grad[i] += self.grad[i];
    };
  }
  return out;
}

template <typename T>
NodePtr<T> sigmoid(const NodePtr<T>& a) {
  auto out = make_op_node<T>(a->shape, {a});
  for (size_t i = 0; i < a->size(); ++i)
    out->val[i] = T(1) / (T(1) + std::exp(-a->val[i]));
  if (out->requires_grad) {
    auto pa = a;
    auto cached = out->val;
    out->backward_fn = [pa, cached](Node<T>& self) {
      for (size_t i = 0; i < self.size(); ++i)
        pa->grad[i] += self.grad[i] * cached[i] * (T(1) - cached[i]);
    };
  }
  return out;
}

template <typename T>
NodePtr<T> slice(const NodePtr<T>& a, size_t start, size_t len) {
  if (start + len > a->size()) throw std::invalid_argument("slice: range");
  auto out = make_op_node<T>({static_cast<int>(len)}, {a});
  std::copy_n(a->val.begin() + start, len, out->val.begin());
  if (out->requires_grad) {
    auto pa = a;
    out->backward_fn = [pa, start, len](Node<T>& self) {
      for (size_t i = 0; i < len; ++i) pa->grad[start + i] += self.grad[i];
    };
  }
  return out;
}

// Column t of a rows x cols matrix node.
template <typename T>
NodePtr<T> column(const NodePtr<T>& a, int t) {
  const int rows = a->shape.at(0), cols = a->shape.at(1);
  if (t < 0 || t >= cols) throw std::invalid_argument("column: index");
  auto out = make_op_node<T>({rows}, {a});
  for (int r = 0; r < rows; ++r)
    out->val[r] = a->val[static_cast<size_t>(r) * cols + t];
  if (out->requires_grad) {
    auto pa = a;
    out->backward_fn = [pa, rows, cols, t](Node<T>& self) {
      for (int r = 0; r < rows; ++r)
        pa->grad[static_cast<size_t>(r) * cols + t] += self.grad[r];
    };
  }
  return out;
}

// Stacks n equal-length vector nodes into an n x d matrix node.
template <typename T>
NodePtr<T> stack_rows(const std::vector<NodePtr<T>>& rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: empty");
  const int d = static_cast<int>(rows[0]->size());
  const int n = static_cast<int>(rows.size());
  auto out = make_op_node<T>({n, d}, rows);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i]->size()) != d)
      throw std::invalid_argument("stack_rows: ragged rows");
    std::copy(rows[i]->val.begin(), rows[i]->val.end(),
              out->val.begin() + static_cast<size_t>(i) * d);
  }
  if (out->requires_grad) {
    auto parents = rows;
    out->backward_fn = [parents, d](Node<T>& self) {
      for (size_t i = 0; i < parents.size(); ++i) {
        if (!parents[i]->requires_grad) continue;
        for (int j = 0; j < d; ++j)
          parents[i]->grad[j] += self.grad[i * d + j];
      }
    };
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra layers

// y = W x + b with W [out x in], x [in], b [out].
template <typename T>
NodePtr<T> linear(const NodePtr<T>& W, const NodePtr<T>& x,
                  const NodePtr<T>& b) {
  const int out_dim = W->shape.at(0), in_dim = W->shape.at(1);
  if (static_cast<int>(x->size()) != in_dim ||
      static_cast<int>(b->size()) != out_dim)
    throw std::invalid_argument("linear: shape mismatch");
  auto out = make_op_node<T>({out_dim}, {W, x, b});
  for (int o = 0; o < out_dim; ++o) {
    T acc = b->val[o];
    const T* wrow = W->val.data() + static_cast<size_t>(o) * in_dim;
    for (int i = 0; i < in_dim; ++i) acc += wrow[i] * x->val[i];
    out->val[o] = acc;
  }
  if (out->requires_grad) {
    auto pw = W, px = x, pb = b;
    out->backward_fn = [pw, px, pb, out_dim, in_dim](Node<T>& self) {
      for (int o = 0; o < out_dim; ++o) {
        const T g = self.grad[o];
        if (g == T(0)) continue;
        const T* wrow = pw->val.data() + static_cast<size_t>(o) * in_dim;
        if (pw->requires_grad) {
          T* gw = pw->grad.data() + static_cast<size_t>(o) * in_dim;
          for (int i = 0; i < in_dim; ++i) gw[i] += g * px->val[i];
        }
        if (px->requires_grad)
          for (int i = 0; i < in_dim; ++i) px->grad[i] += g * wrow[i];
        if (pb->requires_grad) pb->grad[o] += g;
      }
    };
  }
  return out;
}

// 1-D convolution: x [Cin x L], W [Cout x Cin x K], b [Cout] -> [Cout x L]
// with zero padding (K-1)/2 on both sides (K odd).
template <typename T>
NodePtr<T> conv1d(const NodePtr<T>& x, const NodePtr<T>& W,
                  const NodePtr<T>& b) {
  const int c_in = x->shape.at(0), length = x->shape.at(1);
  const int c_out = W->shape.at(0), k = W->shape.at(2);
  if (W->shape.at(1) != c_in || static_cast<int>(b->size()) != c_out)
    throw std::invalid_argument("conv1d: shape mismatch");
  const int pad = (k - 1) / 2;

  auto out = make_op_node<T>({c_out, length}, {x, W, b});
  for (int co = 0; co < c_out; ++co) {
    for (int t = 0; t < length; ++t) {
      T acc = b->val[co];
      for (int ci = 0; ci < c_in; ++ci) {
        const T* xrow = x->val.data() + static_cast<size_t>(ci) * length;
        const T* wrow =
            W->val.data() + (static_cast<size_t>(co) * c_in + ci) * k;
        for (int j = 0; j < k; ++j) {
          const int src = t + j - pad;
          if (src >= 0 && src < length) acc += wrow[j] * xrow[src];
        }
      }
      out->val[static_cast<size_t>(co) * length + t] = acc;
    }
  }
  if (out->requires_grad) {
    auto px = x, pw = W, pb = b;
    out->backward_fn = [px, pw, pb, c_in, c_out, length, k,
                        pad](Node<T>& self) {
      for (int co = 0; co < c_out; ++co) {
        for (int t = 0; t < length; ++t) {
          const T g = self.grad[static_cast<size_t>(co) * length + t];
          if (g == T(0)) continue;
          if (pb->requires_grad) pb->grad[co] += g;
          for (int ci = 0; ci < c_in; ++ci) {
            const size_t xoff = static_cast<size_t>(ci) * length;
            const size_t woff = (static_cast<size_t>(co) * c_in + ci) * k;
            for (int j = 0; j < k; ++j) {
              const int src = t + j - pad;
              if (src < 0 || src >= length) continue;
              if (pw->requires_grad)
                pw->grad[woff + j] += g * px->val[xoff + src];
              if (px->requires_grad)
                px->grad[xoff + src] += g * pw->val[woff + j];
            }
          }
        }
      }
    };
  }
  return out;
}

// Batch normalization over the length axis of a C x L input. In training
// mode the per-channel batch statistics normalize the input and are written
// to batch_mean/batch_var (biased) for the caller's running-stat update; in
// inference mode the provided running statistics are used and the op is a
// pure affine map.
template <typename T>
NodePtr<T> batchnorm(const NodePtr<T>& x, const NodePtr<T>& gamma,
                     const NodePtr<T>& beta, bool train,
                     const std::vector<T>& running_mean,
                     const std::vector<T>& running_var,
                     std::vector<T>* batch_mean = nullptr,
                     std::vector<T>* batch_var = nullptr, T eps = T(1e-5)) {
  const int channels = x->shape.at(0), length = x->shape.at(1);
  if (static_cast<int>(gamma->size()) != channels ||
      static_cast<int>(beta->size()) != channels)
    throw std::invalid_argument("batchnorm: shape mismatch");

  std::vector<T> mean(channels), var(channels);
  if (train) {
    for (int c = 0; c < channels; ++c) {
      const T* row = x->val.data() + static_cast<size_t>(c) * length;
      T m = T(0);
      for (int t = 0; t < length; ++t) m += row[t];
      m /= T(length);
      T v = T(0);
      for (int t = 0; t < length; ++t) v += (row[t] - m) * (row[t] - m);
      v /= T(length);
      mean[c] = m;
      var[c] = v;
    }
    if (batch_mean) *batch_mean = mean;
    if (batch_var) *batch_var = var;
  } else {
    mean.assign(running_mean.begin(), running_mean.end());
    var.assign(running_var.begin(), running_var.end());
  }

  auto out = make_op_node<T>({channels, length}, {x, gamma, beta});
  std::vector<T> xhat(x->size());
  for (int c = 0; c < channels; ++c) {
    const T inv_std = T(1) / std::sqrt(var[c] + eps);
    const size_t off = static_cast<size_t>(c) * length;
    for (int t = 0; t < length; ++t) {
      xhat[off + t] = (x->val[off + t] - mean[c]) * inv_std;
      out->val[off + t] = gamma->val[c] * xhat[off + t] + beta->val[c];
    }
  }
  if (out->requires_grad) {
    auto px = x, pg = gamma, pb = beta;
    out->backward_fn = [px, pg, pb, channels, length, var, eps, train,
                        xhat = std::move(xhat)](Node<T>& self) {
      for (int c = 0; c < channels; ++c) {
        const size_t off = static_cast<size_t>(c) * length;
        const T inv_std = T(1) / std::sqrt(var[c] + eps);
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (int t = 0; t < length; ++t) {
          sum_dy += self.grad[off + t];
          sum_dy_xhat += self.grad[off + t] * xhat[off + t];
        }
        if (pg->requires_grad) pg->grad[c] += sum_dy_xhat;
        if (pb->requires_grad) pb->grad[c] += sum_dy;
        if (px->requires_grad) {
          const T g = pg->val[c];
          if (train) {
            const T inv_n = T(1) / T(length);
            for (int t = 0; t < length; ++t) {
              px->grad[off + t] +=
                  g * inv_std *
                  (self.grad[off + t] - inv_n * sum_dy -
                   xhat[off + t] * inv_n * sum_dy_xhat);
            }
          } else {
            for (int t = 0; t < length; ++t)
              px->grad[off + t] += g * inv_std * self.grad[off + t];
          }
        }
      }
    };
  }
  return out;
}

// Max pooling along the length axis, kernel k, stride k.
template <typename T>
NodePtr<T> maxpool1d(const NodePtr<T>& x, int k, int stride) {
  const int channels = x->shape.at(0), length = x->shape.at(1);
  const int out_len = (length - k) / stride + 1;
  if (out_len < 1) throw std::invalid_argument("maxpool1d: input too short");

  auto out = make_op_node<T>({channels, out_len}, {x});
  std::vector<int> argmax(static_cast<size_t>(channels) * out_len);
  for (int c = 0; c < channels; ++c) {
    const T* row = x->val.data() + static_cast<size_t>(c) * length;
    for (int t = 0; t < out_len; ++t) {
      int best = t * stride;
      for (int j = 1; j < k; ++j)
        if (row[t * stride + j] > row[best]) best = t * stride + j;
      out->val[static_cast<size_t>(c) * out_len + t] = row[best];
      argmax[static_cast<size_t>(c) * out_len + t] = best;
    }
  }
  if (out->requires_grad) {
    auto px = x;
    out->backward_fn = [px, channels, out_len, length,
                        argmax = std::move(argmax)](Node<T>& self) {
      for (int c = 0; c < channels; ++c)
        for (int t = 0; t < out_len; ++t) {
          const size_t i = static_cast<size_t>(c) * out_len + t;
          px->grad[static_cast<size_t>(c) * length + argmax[i]] +=
              self.grad[i];
        }
    };
  }
  return out;
}

// Inverted dropout: in training mode each element is zeroed with probability
// p and survivors are scaled by 1/(1-p); in inference mode identity.
template <typename T>
NodePtr<T> dropout(const NodePtr<T>& x, double p, bool train,
                   std::mt19937_64& rng) {
  if (!train || p <= 0.0) return x;
  const T keep_scale = T(1.0 / (1.0 - p));
  std::bernoulli_distribution drop(p);
  std::vector<T> mask(x->size());
  for (auto& m : mask) m = drop(rng) ? T(0) : keep_scale;

  auto out = make_op_node<T>(x->shape, {x});
  for (size_t i = 0; i < x->size(); ++i) out->val[i] = x->val[i] * mask[i];
  if (out->requires_grad) {
    auto px = x;
    out->backward_fn = [px, mask = std::move(mask)](Node<T>& self) {
      for (size_t i = 0; i < self.size(); ++i)
        px->grad[i] += self.grad[i] * mask[i];
    };
  }
  return out;
}

// One LSTM step. Input hc holds [h; c] (2*H); weights W_ih, W_hh are
// [4H x D] and [4H x H] with gate order i, f, g, o; output is the new
// [h'; c'].
template <typename T>
NodePtr<T> lstm_cell(const NodePtr<T>& x, const NodePtr<T>& hc,
                     const NodePtr<T>& W_ih, const NodePtr<T>& W_hh,
                     const NodePtr<T>& b) {
  const int hidden = static_cast<int>(hc->size()) / 2;
  const int input = static_cast<int>(x->size());
  if (W_ih->shape.at(0) != 4 * hidden || W_ih->shape.at(1) != input ||
      W_hh->shape.at(0) != 4 * hidden || W_hh->shape.at(1) != hidden ||
      static_cast<int>(b->size()) != 4 * hidden)
    throw std::invalid_argument("lstm_cell: shape mismatch");

  const T* h = hc->val.data();
  const T* c = hc->val.data() + hidden;

  std::vector<T> pre(4 * hidden);
  for (int o = 0; o < 4 * hidden; ++o) {
    T acc = b->val[o];
    const T* wi = W_ih->val.data() + static_cast<size_t>(o) * input;
    for (int i = 0; i < input; ++i) acc += wi[i] * x->val[i];
    const T* wh = W_hh->val.data() + static_cast<size_t>(o) * hidden;
    for (int i = 0; i < hidden; ++i) acc += wh[i] * h[i];
    pre[o] = acc;
  }

  std::vector<T> gate_i(hidden), gate_f(hidden), gate_g(hidden),
      gate_o(hidden), tanh_c(hidden);
  auto out = make_op_node<T>({2 * hidden}, {x, hc, W_ih, W_hh, b});
  for (int j = 0; j < hidden; ++j) {
    gate_i[j] = T(1) / (T(1) + std::exp(-pre[j]));
    gate_f[j] = T(1) / (T(1) + std::exp(-pre[hidden + j]));
    gate_g[j] = std::tanh(pre[2 * hidden + j]);
    gate_o[j] = T(1) / (T(1) + std::exp(-pre[3 * hidden + j]));
    const T c_new = gate_f[j] * c[j] + gate_i[j] * gate_g[j];
    tanh_c[j] = std::tanh(c_new);
    out->val[j] = gate_o[j] * tanh_c[j];
    out->val[hidden + j] = c_new;
  }

  if (out->requires_grad) {
    auto px = x, phc = hc, pwi = W_ih, pwh = W_hh, pb = b;
    out->backward_fn = [px, phc, pwi, pwh, pb, hidden, input,
                        gate_i = std::move(gate_i),
                        gate_f = std::move(gate_f),
                        gate_g = std::move(gate_g),
                        gate_o = std::move(gate_o),
                        tanh_c = std::move(tanh_c)](Node<T>& self) {
      const T* h_prev = phc->val.data();
      const T* c_prev = phc->val.data() + hidden;
      std::vector<T> dpre(4 * hidden);
      for (int j = 0; j < hidden; ++j) {
        const T dh = self.grad[j];
        const T dc_out = self.grad[hidden + j];
        const T dc = dc_out + dh * gate_o[j] * (T(1) - tanh_c[j] * tanh_c[j]);
        const T d_o = dh * tanh_c[j];
        const T d_i = dc * gate_g[j];
        const T d_f = dc * c_prev[j];
        const T d_g = dc * gate_i[j];
        dpre[j] = d_i * gate_i[j] * (T(1) - gate_i[j]);
        dpre[hidden + j] = d_f * gate_f[j] * (T(1) - gate_f[j]);
        dpre[2 * hidden + j] = d_g * (T(1) - gate_g[j] * gate_g[j]);
        dpre[3 * hidden + j] = d_o * gate_o[j] * (T(1) - gate_o[j]);
        if (phc->requires_grad) phc->grad[hidden + j] += dc * gate_f[j];
      }
      for (int o = 0; o < 4 * hidden; ++o) {
        const T g = dpre[o];
        if (g == T(0)) continue;
        const T* wi = pwi->val.data() + static_cast<size_t>(o) * input;
        const T* wh = pwh->val.data() + static_cast<size_t>(o) * hidden;
        if (pwi->requires_grad) {
          T* gw = pwi->grad.data() + static_cast<size_t>(o) * input;
          for (int i = 0; i < input; ++i) gw[i] += g * px->val[i];
        }
        if (pwh->requires_grad) {
          T* gw = pwh->grad.data() + static_cast<size_t>(o) * hidden;
          for (int i = 0; i < hidden; ++i) gw[i] += g * h_prev[i];
        }
        if (pb->requires_grad) pb->grad[o] += g;
        if (px->requires_grad)
          for (int i = 0; i < input; ++i) px->grad[i] += g * wi[i];
        if (phc->requires_grad)
          for (int i = 0; i < hidden; ++i) phc->grad[i] += g * wh[i];
      }
    };
  }
  return out;
}

// x / ||x||_2.
template <typename T>
NodePtr<T> l2_normalize(const NodePtr<T>& x) {
  T norm_sq = T(0);
  for (T v : x->val) norm_sq += v * v;
  const T norm = std::sqrt(norm_sq);
  if (norm == T(0)) throw std::runtime_error("l2_normalize: zero vector");

  auto out = make_op_node<T>(x->shape, {x});
  for (size_t i = 0; i < x->size(); ++i) out->val[i] = x->val[i] / norm;
  if (out->requires_grad) {
    auto px = x;
    auto y = out->val;
    out->backward_fn = [px, norm, y = std::move(y)](Node<T>& self) {
      T dot = T(0);
      for (size_t i = 0; i < self.size(); ++i) dot += self.grad[i] * y[i];
      for (size_t i = 0; i < self.size(); ++i)
        px->grad[i] += (self.grad[i] - dot * y[i]) / norm;
    };
  }
  return out;
}

// Binary cross-entropy on a scalar probability node.
template <typename T>
NodePtr<T> bce_loss(const NodePtr<T>& p, T target) {
  if (p->size() != 1) throw std::invalid_argument("bce_loss: scalar input");
  const T eps = T(1e-12);
  const T pv = std::clamp(p->val[0], eps, T(1) - eps);
  auto out = make_op_node<T>({1}, {p});
  out->val[0] = -(target * std::log(pv) + (T(1) - target) * std::log(T(1) - pv));
  if (out->requires_grad) {
    auto pp = p;
    out->backward_fn = [pp, pv, target](Node<T>& self) {
      pp->grad[0] +=
          self.grad[0] * (-(target / pv) + (T(1) - target) / (T(1) - pv));
    };
  }
  return out;
}

}  // namespace idl::nn
