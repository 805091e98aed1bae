// Copyright 2026 The idlspeech Authors
// Licensed under the Apache License, Version 2.0
//
// Instance-discriminative contrastive objective over a batch of unit-norm
// embeddings f_i and their augmented counterparts f_hat_i:
//
//   P(x_i|x_hat_i) = exp(<f_i, f_hat_i>/tau) / sum_k exp(<f_k, f_hat_i>/tau)
//   P(x_i|x_j)     = exp(<f_i, f_j>/tau)     / sum_k exp(<f_k, f_j>/tau)
//   L = -(1/n) [ sum_i log P(x_i|x_hat_i)
//              + sum_i sum_{j != i} log(1 - P(x_i|x_j)) ]
//
// Denominators run over the n original embeddings only. 1 - P is clamped at
// 1e-12 so a collapsed batch cannot produce -inf.

#pragma once

#include <cmath>
#include <cstdio>
#include <vector>

#include "idl/autograd.hpp"

namespace idl {

inline constexpr double kDefaultTau = 10.0;
inline constexpr double kOneMinusPFloor = 1e-12;

template <typename T>
T similarity(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("similarity: dimension mismatch");
  T acc = T(0);
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

namespace detail {

// log(sum_k exp(s[k])) with max-shift stabilization.
template <typename T>
T log_sum_exp(const std::vector<T>& s) {
  T m = s[0];
  for (T v : s) m = std::max(m, v);
  T acc = T(0);
  for (T v : s) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace detail

// P(x_i | x_hat_i) over row-major n x d matrices F and F_hat.
template <typename T>
T prob_aug(const std::vector<T>& F, const std::vector<T>& F_hat, int n, int d,
           T tau, int i) {
  if (i < 0 || i >= n) throw std::invalid_argument("prob_aug: index");
  std::vector<T> scores(n);
  for (int k = 0; k < n; ++k) {
    T dot = T(0);
    for (int c = 0; c < d; ++c)
      dot += F[static_cast<size_t>(k) * d + c] *
             F_hat[static_cast<size_t>(i) * d + c];
    scores[k] = dot / tau;
  }
  return std::exp(scores[i] - detail::log_sum_exp(scores));
}

// P(x_i | x_j), i != j; the denominator includes the self term k = j.
template <typename T>
T prob_inst(const std::vector<T>& F, int n, int d, T tau, int i, int j) {
  if (i == j) throw std::invalid_argument("prob_inst: i == j");
  if (i < 0 || i >= n || j < 0 || j >= n)
    throw std::invalid_argument("prob_inst: index");
  std::vector<T> scores(n);
  for (int k = 0; k < n; ++k) {
    T dot = T(0);
    for (int c = 0; c < d; ++c)
      dot += F[static_cast<size_t>(k) * d + c] *
             F[static_cast<size_t>(j) * d + c];
    scores[k] = dot / tau;
  }
  return std::exp(scores[i] - detail::log_sum_exp(scores));
}

// Differentiable batch loss over stacked embedding nodes F, F_hat [n x d].
template <typename T>
nn::NodePtr<T> idl_loss(const nn::NodePtr<T>& F, const nn::NodePtr<T>& F_hat,
                        T tau) {
  const int n = F->shape.at(0), d = F->shape.at(1);
  if (F_hat->shape != F->shape)
    throw std::invalid_argument("idl_loss: shape mismatch");
  if (n < 2) throw std::invalid_argument("idl_loss: batch size must be >= 2");

  auto dot_scaled = [&](const std::vector<T>& A, const std::vector<T>& B,
                        int r, int c) {
    T acc = T(0);
    for (int k = 0; k < d; ++k)
      acc += A[static_cast<size_t>(r) * d + k] *
             B[static_cast<size_t>(c) * d + k];
    return acc / tau;
  };

  // A[k][i] = <f_k, f_hat_i>/tau ; B[k][j] = <f_k, f_j>/tau.
  std::vector<T> A(static_cast<size_t>(n) * n), B(static_cast<size_t>(n) * n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      A[static_cast<size_t>(k) * n + i] = dot_scaled(F->val, F_hat->val, k, i);
      B[static_cast<size_t>(k) * n + i] = dot_scaled(F->val, F->val, k, i);
    }

  // Column softmaxes.
  auto col_softmax = [&](const std::vector<T>& M, int col, std::vector<T>& p) {
    T m = M[col];
    for (int k = 0; k < n; ++k)
      m = std::max(m, M[static_cast<size_t>(k) * n + col]);
    T z = T(0);
    for (int k = 0; k < n; ++k) {
      p[k] = std::exp(M[static_cast<size_t>(k) * n + col] - m);
      z += p[k];
    }
    for (int k = 0; k < n; ++k) p[k] /= z;
  };

  std::vector<T> soft_A(static_cast<size_t>(n) * n),
      soft_B(static_cast<size_t>(n) * n);
  std::vector<T> p(n);
  T total = T(0);
  bool clamped = false;
  for (int col = 0; col < n; ++col) {
    col_softmax(A, col, p);
    for (int k = 0; k < n; ++k) soft_A[static_cast<size_t>(k) * n + col] = p[k];
    total += std::log(p[col]);  // log P(x_i | x_hat_i), i = col

    col_softmax(B, col, p);
    for (int k = 0; k < n; ++k) soft_B[static_cast<size_t>(k) * n + col] = p[k];
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      T one_minus = T(1) - p[i];
      if (one_minus < T(kOneMinusPFloor)) {
        one_minus = T(kOneMinusPFloor);
        clamped = true;
      }
      total += std::log(one_minus);
    }
  }
  if (clamped)
    std::fprintf(stderr,
                 "idl_loss: clamped 1-P at %.0e (batch near collapse)\n",
                 kOneMinusPFloor);

  auto out = nn::make_op_node<T>({1}, {F, F_hat});
  out->val[0] = -total / T(n);

  if (out->requires_grad) {
    auto pF = F, pFh = F_hat;
    out->backward_fn = [pF, pFh, n, d, tau, soft_A = std::move(soft_A),
                        soft_B = std::move(soft_B)](nn::Node<T>& self) {
      const T g0 = self.grad[0];
      const T scale = -g0 / (T(n) * tau);

      // dTotal/dA[k][i] = delta_ki - softmaxA[k][i]
      // dTotal/dB[k][j] = p_k Q_j - [k != j] p_k/(1-p_k),  Q_j as below;
      // the -(1/n) factor is folded into `scale`.
      std::vector<T> dA(static_cast<size_t>(n) * n),
          dB(static_cast<size_t>(n) * n);
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          dA[static_cast<size_t>(k) * n + i] =
              (k == i ? T(1) : T(0)) - soft_A[static_cast<size_t>(k) * n + i];

      for (int j = 0; j < n; ++j) {
        T q = T(0);
        for (int i = 0; i < n; ++i) {
          if (i == j) continue;
          const T one_minus = std::max(
              T(1) - soft_B[static_cast<size_t>(i) * n + j],
              T(kOneMinusPFloor));
          q += soft_B[static_cast<size_t>(i) * n + j] / one_minus;
        }
        for (int k = 0; k < n; ++k) {
          const T pk = soft_B[static_cast<size_t>(k) * n + j];
          T val = pk * q;
          if (k != j) {
            const T one_minus = std::max(T(1) - pk, T(kOneMinusPFloor));
            val -= pk / one_minus;
          }
          dB[static_cast<size_t>(k) * n + j] = val;
        }
      }

      // A = F F_hat^T / tau ; B = F F^T / tau (dA, dB above carry the sign
      // of dTotal/d*, so apply -g0/(n tau) once here).
      for (int k = 0; k < n; ++k)
        for (int c = 0; c < d; ++c) {
          T acc_f = T(0), acc_fh = T(0);
          for (int i = 0; i < n; ++i) {
            acc_f += dA[static_cast<size_t>(k) * n + i] *
                     pFh->val[static_cast<size_t>(i) * d + c];
            acc_f += (dB[static_cast<size_t>(k) * n + i] +
                      dB[static_cast<size_t>(i) * n + k]) *
                     pF->val[static_cast<size_t>(i) * d + c];
            acc_fh += dA[static_cast<size_t>(i) * n + k] *
                      pF->val[static_cast<size_t>(i) * d + c];
          }
          if (pF->requires_grad)
            pF->grad[static_cast<size_t>(k) * d + c] += scale * acc_f;
          if (pFh->requires_grad)
            pFh->grad[static_cast<size_t>(k) * d + c] += scale * acc_fh;
        }
    };
  }
  return out;
}

}  // namespace idl
