#include "temp/nn/layers.hpp"

#include <cmath>

namespace temp::nn {

void AttentionConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_ffn == 0) {
    throw ShapeError("attention config sizes must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ShapeError("d_model " + std::to_string(d_model) +
                     " is not divisible by n_heads " + std::to_string(n_heads));
  }
}

AttentionOutput attention(Var q, Var k, Var v) {
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();
  if (qv.cols() != kv.cols() || kv.rows() != vv.rows()) {
    throw ShapeError("attention: Q " + qv.shape_string() + ", K " + kv.shape_string() +
                     ", V " + vv.shape_string());
  }
  const double inv = 1.0 / std::sqrt(static_cast<double>(kv.cols()));
  Var w = softmax_rows(scale(matmul_nt(q, k), inv));
  return {matmul(w, v), w};
}

MhaOutput multi_head_attention(Var z, const MhaWeights& w) {
  const std::size_t h = w.wq.size();
  if (h == 0 || w.wk.size() != h || w.wv.size() != h) {
    throw ShapeError("multi_head_attention: inconsistent head count");
  }
  // One wide projection per role, then per-head column slices.
  const std::size_t dk = w.wq.front().cols();
  Var q = matmul(z, h == 1 ? w.wq[0] : concat_cols(w.wq));
  Var k = matmul(z, h == 1 ? w.wk[0] : concat_cols(w.wk));
  Var v = matmul(z, h == 1 ? w.wv[0] : concat_cols(w.wv));
  MhaOutput out;
  std::vector<Var> heads;
  for (std::size_t i = 0; i < h; ++i) {
    auto a = h == 1 ? attention(q, k, v)
                    : attention(slice_cols(q, i * dk, dk), slice_cols(k, i * dk, dk),
                                slice_cols(v, i * dk, dk));
    heads.push_back(a.output);
    out.head_weights.push_back(a.weights);
  }
  out.output = matmul(h == 1 ? heads[0] : concat_cols(heads), w.wo);
  return out;
}

Var ffn(Var x, Var w1, Var b1, Var w2, Var b2) {
  return linear(relu(linear(x, w1, b1)), w2, b2);
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t(fan_in, fan_out);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace temp::nn
