#pragma once

#include "temp/model.hpp"
#include "temp/sbmp.hpp"
#include "temp/world.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace temp {

enum class TokenRole { Sei = 0, Goal = 1, Start = 2, Hpd = 3 };

const char* role_name(TokenRole r);

/// Normalized constituents of one transformer input: the goal, then START
/// and the (possibly truncated) HPD states. `path_index[i]` is the index in
/// the full path of `states[i]`.
struct TokenInputs {
  State goal;
  std::vector<State> states;
  std::vector<std::size_t> path_index;

  std::size_t length() const { return 2 + states.size(); }
  std::vector<TokenRole> roles() const;
};

/// Keeps START plus the most recent (max_seq_len - 3) path states.
TokenInputs make_token_inputs(const State& goal_norm, const std::vector<State>& path_norm,
                              std::size_t max_seq_len);

/// Embedded sequence Z = f_emb(Concat(S, T, H)) + P, for inspection.
struct TokenSequence {
  nn::Tensor tokens;
  std::vector<TokenRole> roles;
  std::vector<std::size_t> path_index;
};

namespace mpt {

struct Forward {
  /// 1 x d prediction in normalized coordinates.
  nn::Var prediction;
  /// [layer][head] n x n attention weights.
  std::vector<std::vector<nn::Var>> attention;
};

nn::Var embed(nn::Tape& tape, const ModelBundle& model, nn::Var sei, const TokenInputs& in);

/// M post-norm layers, prediction read from the last token.
Forward forward(nn::Tape& tape, const ModelBundle& model, nn::Var sei, const TokenInputs& in);

}  // namespace mpt

TokenSequence tokenize(const std::vector<double>& sei, const PlanningTask& task,
                       const Path& sigma_prime, const ModelBundle& model);

using AttentionStack = std::vector<std::vector<nn::Tensor>>;

struct MptPrediction {
  State x_hat;       // world coordinates, clamped to bounds
  State x_hat_norm;  // raw head output
  AttentionStack attention;
  std::vector<TokenRole> roles;
};

/// Inference entry point used by the planner.
MptPrediction mpt_predict(const ModelBundle& model, const std::vector<double>& sei,
                          const PlanningTask& task, const Path& sigma_prime);

enum class HpdAggregation { Mean, Sum };

/// Per-category attention of the last token at one sampling step.
struct AttentionEntry {
  std::size_t node_index = 0;
  double sei = 0.0;
  double goal = 0.0;
  double start = 0.0;
  std::optional<double> hpd;
};

/// (1/h) * sum of the head matrices.
nn::Tensor average_heads(const std::vector<nn::Tensor>& heads);

/// `layer` < 0 counts from the end (-1 = final layer).
AttentionEntry extract_attention(const AttentionStack& attn, const std::vector<TokenRole>& roles,
                                 std::size_t node_index, int layer = -1,
                                 HpdAggregation hpd = HpdAggregation::Mean);

struct NormalizedCategory {
  TokenRole role;
  std::vector<std::size_t> node_index;
  std::vector<double> raw;
  std::vector<double> norm;
  /// max == min (or a single entry): every normalized value is 0.
  bool degenerate = false;
};

/// Per-category min-max normalization over an episode. Categories with no
/// entries are omitted.
std::vector<NormalizedCategory> normalize_attention(const std::vector<AttentionEntry>& episode);

/// Columns: node_index,category,omega_raw,omega_norm,degenerate_flag
void write_attention_csv(std::ostream& os, const std::vector<NormalizedCategory>& cats);

}  // namespace temp
