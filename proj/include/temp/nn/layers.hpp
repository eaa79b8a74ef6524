#pragma once

#include "temp/nn/autodiff.hpp"

#include <random>
#include <vector>

namespace temp::nn {

struct AttentionConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 3;
  std::size_t d_ffn = 128;

  std::size_t d_k() const { return d_model / n_heads; }
  /// Throws ShapeError unless every size is positive and h divides d_model.
  void validate() const;
};

struct AttentionOutput {
  Var output;
  /// n x n softmax(QK^T / sqrt(d_k)).
  Var weights;
};

/// softmax(QK^T / sqrt(d_k)) V
AttentionOutput attention(Var q, Var k, Var v);

struct MhaWeights {
  std::vector<Var> wq, wk, wv;  // one d_model x d_k matrix per head
  Var wo;                       // (h * d_k) x d_model
};

struct MhaOutput {
  Var output;
  std::vector<Var> head_weights;
};

/// Concat(A_1(Z), ..., A_h(Z)) W^O with A_i = attention(ZW_i^Q, ZW_i^K, ZW_i^V).
MhaOutput multi_head_attention(Var z, const MhaWeights& w);

/// max(0, xW1 + b1) W2 + b2
Var ffn(Var x, Var w1, Var b1, Var w2, Var b2);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace temp::nn
