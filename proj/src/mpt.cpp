#include "temp/mpt.hpp"

#include "temp/eise.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace temp {

namespace {

constexpr std::size_t kRoleCount = 4;

}  // namespace

const char* role_name(TokenRole r) {
  switch (r) {
    case TokenRole::Sei: return "SEI";
    case TokenRole::Goal: return "GOAL";
    case TokenRole::Start: return "START";
    case TokenRole::Hpd: return "HPD";
  }
  return "?";
}

std::vector<TokenRole> TokenInputs::roles() const {
  std::vector<TokenRole> r{TokenRole::Sei, TokenRole::Goal};
  for (std::size_t i = 0; i < states.size(); ++i) {
    r.push_back(i == 0 ? TokenRole::Start : TokenRole::Hpd);
  }
  return r;
}

TokenInputs make_token_inputs(const State& goal_norm, const std::vector<State>& path_norm,
                              std::size_t max_seq_len) {
  if (path_norm.empty()) throw ContractViolation("tokenize: sigma' must contain x_init");
  if (max_seq_len < 3) throw ContractViolation("tokenize: max_seq_len must be >= 3");
  TokenInputs in;
  in.goal = goal_norm;
  in.states.push_back(path_norm.front());
  in.path_index.push_back(0);
  const std::size_t keep = max_seq_len - 3;
  const std::size_t hpd_total = path_norm.size() - 1;
  const std::size_t first = 1 + (hpd_total > keep ? hpd_total - keep : 0);
  for (std::size_t i = first; i < path_norm.size(); ++i) {
    in.states.push_back(path_norm[i]);
    in.path_index.push_back(i);
  }
  return in;
}

namespace mpt {

nn::Var embed(nn::Tape& tape, const ModelBundle& model, nn::Var sei, const TokenInputs& in) {
  const auto& cfg = model.config();
  const std::size_t d = static_cast<std::size_t>(cfg.dim);
  if (in.length() > cfg.max_seq_len) throw ContractViolation("token sequence too long");
  if (static_cast<std::size_t>(in.goal.size()) != d) {
    throw InvalidInput("mpt: goal dimension does not match the model");
  }
  // Rows: GOAL, START, HPD...; columns: coordinates then role one-hot.
  const std::size_t n_states = 1 + in.states.size();
  nn::Tensor raw(n_states, d + kRoleCount);
  auto fill = [&](std::size_t row, const State& x, TokenRole role) {
    if (static_cast<std::size_t>(x.size()) != d) {
      throw InvalidInput("mpt: state dimension does not match the model");
    }
    for (std::size_t i = 0; i < d; ++i) raw(row, i) = x[i];
    raw(row, d + static_cast<std::size_t>(role)) = 1.0;
  };
  fill(0, in.goal, TokenRole::Goal);
  for (std::size_t i = 0; i < in.states.size(); ++i) {
    fill(1 + i, in.states[i], i == 0 ? TokenRole::Start : TokenRole::Hpd);
  }
  const auto& ps = model.params();
  nn::Var emb = nn::linear(tape.constant(std::move(raw)), tape.param(ps, names::kEmbW),
                           tape.param(ps, names::kEmbB));
  nn::Var seq = nn::concat_rows({sei, emb});
  nn::Var pos = nn::slice_rows(tape.param(ps, names::kPos), 0, in.length());
  return nn::add(seq, pos);
}

Forward forward(nn::Tape& tape, const ModelBundle& model, nn::Var sei, const TokenInputs& in) {
  const auto& cfg = model.config();
  const auto& ps = model.params();
  auto p = [&](const std::string& name) { return tape.param(ps, name); };
  nn::Var z = embed(tape, model, sei, in);
  Forward out;
  for (std::size_t l = 0; l < cfg.attn.n_layers; ++l) {
    nn::MhaWeights w;
    for (std::size_t h = 0; h < cfg.attn.n_heads; ++h) {
      w.wq.push_back(p(names::head(l, h, "Wq")));
      w.wk.push_back(p(names::head(l, h, "Wk")));
      w.wv.push_back(p(names::head(l, h, "Wv")));
    }
    w.wo = p(names::layer(l, "Wo"));
    auto mha = nn::multi_head_attention(z, w);
    z = nn::layer_norm(nn::add(z, mha.output), p(names::layer(l, "ln1.alpha")),
                       p(names::layer(l, "ln1.delta")));
    nn::Var f = nn::ffn(z, p(names::layer(l, "ffn.W1")), p(names::layer(l, "ffn.b1")),
                        p(names::layer(l, "ffn.W2")), p(names::layer(l, "ffn.b2")));
    z = nn::layer_norm(nn::add(z, f), p(names::layer(l, "ln2.alpha")),
                       p(names::layer(l, "ln2.delta")));
    out.attention.push_back(std::move(mha.head_weights));
  }
  nn::Var last = nn::slice_rows(z, in.length() - 1, 1);
  out.prediction = nn::linear(last, p(names::kHeadW), p(names::kHeadB));
  return out;
}

}  // namespace mpt

namespace {

TokenInputs task_inputs(const PlanningTask& task, const Path& sigma_prime,
                        const ModelBundle& model) {
  if (task.dim() != model.config().dim) {
    throw InvalidInput("model dimension " + std::to_string(model.config().dim) +
                       " does not match task dimension " + std::to_string(task.dim()));
  }
  std::vector<State> path_norm;
  path_norm.reserve(sigma_prime.states.size());
  for (const auto& s : sigma_prime.states) {
    path_norm.push_back(normalize_state(task.workspace(), s));
  }
  return make_token_inputs(normalize_state(task.workspace(), task.goal_center()), path_norm,
                           model.config().max_seq_len);
}

nn::Var sei_constant(nn::Tape& tape, const ModelBundle& model, const std::vector<double>& sei) {
  if (sei.size() != model.config().attn.d_model) {
    throw InvalidInput("SEI length does not match d_model");
  }
  return tape.constant(nn::Tensor({1, sei.size()}, sei));
}

}  // namespace

TokenSequence tokenize(const std::vector<double>& sei, const PlanningTask& task,
                       const Path& sigma_prime, const ModelBundle& model) {
  const TokenInputs in = task_inputs(task, sigma_prime, model);
  nn::Tape tape(false);
  nn::Var z = mpt::embed(tape, model, sei_constant(tape, model, sei), in);
  return TokenSequence{z.value(), in.roles(), in.path_index};
}

MptPrediction mpt_predict(const ModelBundle& model, const std::vector<double>& sei,
                          const PlanningTask& task, const Path& sigma_prime) {
  const TokenInputs in = task_inputs(task, sigma_prime, model);
  nn::Tape tape(false);
  auto fwd = mpt::forward(tape, model, sei_constant(tape, model, sei), in);
  MptPrediction out;
  const auto& pv = fwd.prediction.value();
  out.x_hat_norm = State(task.dim());
  for (int i = 0; i < task.dim(); ++i) out.x_hat_norm[i] = pv[i];
  out.x_hat = denormalize_state(task.workspace(), out.x_hat_norm);
  for (const auto& layer : fwd.attention) {
    std::vector<nn::Tensor> heads;
    for (const auto& h : layer) heads.push_back(h.value());
    out.attention.push_back(std::move(heads));
  }
  out.roles = in.roles();
  return out;
}

nn::Tensor average_heads(const std::vector<nn::Tensor>& heads) {
  if (heads.empty()) throw InvalidInput("average_heads: no heads");
  nn::Tensor avg = nn::Tensor::zeros_like(heads.front());
  for (const auto& h : heads) avg.add_inplace(h);
  for (auto& v : avg.values()) v /= static_cast<double>(heads.size());
  return avg;
}

AttentionEntry extract_attention(const AttentionStack& attn, const std::vector<TokenRole>& roles,
                                 std::size_t node_index, int layer, HpdAggregation hpd) {
  if (attn.empty()) throw InvalidInput("extract_attention: model has no layers");
  const int n_layers = static_cast<int>(attn.size());
  const int li = layer < 0 ? n_layers + layer : layer;
  if (li < 0 || li >= n_layers) throw InvalidInput("extract_attention: layer out of range");
  const nn::Tensor avg = average_heads(attn[li]);
  const std::size_t n = avg.rows();
  if (roles.size() != n) throw InvalidInput("extract_attention: roles do not match sequence");
  AttentionEntry e;
  e.node_index = node_index;
  double hpd_sum = 0.0;
  std::size_t hpd_count = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const double w = avg(n - 1, c);
    switch (roles[c]) {
      case TokenRole::Sei: e.sei = w; break;
      case TokenRole::Goal: e.goal = w; break;
      case TokenRole::Start: e.start = w; break;
      case TokenRole::Hpd:
        hpd_sum += w;
        ++hpd_count;
        break;
    }
  }
  if (hpd_count > 0) {
    e.hpd = hpd == HpdAggregation::Mean ? hpd_sum / static_cast<double>(hpd_count) : hpd_sum;
  }
  return e;
}

std::vector<NormalizedCategory> normalize_attention(const std::vector<AttentionEntry>& episode) {
  if (episode.size() < 2) {
    throw ContractViolation("normalize_attention: need at least two sampling steps");
  }
  std::vector<NormalizedCategory> out;
  for (TokenRole role : {TokenRole::Sei, TokenRole::Goal, TokenRole::Start, TokenRole::Hpd}) {
    NormalizedCategory cat;
    cat.role = role;
    for (const auto& e : episode) {
      std::optional<double> v;
      switch (role) {
        case TokenRole::Sei: v = e.sei; break;
        case TokenRole::Goal: v = e.goal; break;
        case TokenRole::Start: v = e.start; break;
        case TokenRole::Hpd: v = e.hpd; break;
      }
      if (!v) continue;
      cat.node_index.push_back(e.node_index);
      cat.raw.push_back(*v);
    }
    if (cat.raw.empty()) continue;
    const auto [lo, hi] = std::minmax_element(cat.raw.begin(), cat.raw.end());
    const double min = *lo, span = *hi - *lo;
    cat.degenerate = cat.raw.size() < 2 || span <= 0.0;
    for (double v : cat.raw) cat.norm.push_back(cat.degenerate ? 0.0 : (v - min) / span);
    out.push_back(std::move(cat));
  }
  return out;
}

void write_attention_csv(std::ostream& os, const std::vector<NormalizedCategory>& cats) {
  os << "node_index,category,omega_raw,omega_norm,degenerate_flag\n";
  os << std::setprecision(17);
  for (const auto& cat : cats) {
    for (std::size_t i = 0; i < cat.raw.size(); ++i) {
      os << cat.node_index[i] << ',' << role_name(cat.role) << ',' << cat.raw[i] << ','
         << cat.norm[i] << ',' << (cat.degenerate ? 1 : 0) << '\n';
    }
  }
}

}  // namespace temp
