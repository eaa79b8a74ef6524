#pragma once

#include "temp/nn/autodiff.hpp"
#include "temp/nn/layers.hpp"

#include <cstdint>
#include <string>

namespace temp {

/// Architecture hyperparameters for the encoder + transformer pair.
struct ModelConfig {
  int dim = 2;
  std::size_t max_obstacles = 16;
  std::size_t d_hidden = 128;
  /// Two fully connected layers per side; false gives one.
  bool eise_two_layer = true;
  /// Append normalized start and goal to the environment vector.
  bool eise_task_conditioning = false;
  nn::AttentionConfig attn;
  std::size_t max_seq_len = 64;

  /// Obstacle slots * (center + half extent).
  std::size_t obstacle_length() const { return max_obstacles * 2 * static_cast<std::size_t>(dim); }
  /// Encoder input / decoder output length.
  std::size_t env_length() const {
    return obstacle_length() + (eise_task_conditioning ? 2 * static_cast<std::size_t>(dim) : 0);
  }
  void validate() const;
};

/// Every named parameter of EISE ("eise.*") and MPT ("mpt.*").
class ModelBundle {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  ModelBundle(ModelConfig config, nn::ParameterSet params);
  /// Fresh model with Glorot-uniform weights, zero biases, unit norms.
  static ModelBundle create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);

 private:
  ModelConfig config_;
  nn::ParameterSet params_;
};

/// Parameter names, shared by construction, forward passes and checkpoints.
namespace names {
std::string eise_enc_w(int layer);
std::string eise_enc_b(int layer);
std::string eise_dec_w(int layer);
std::string eise_dec_b(int layer);
inline constexpr const char* kEmbW = "mpt.emb.W";
inline constexpr const char* kEmbB = "mpt.emb.b";
inline constexpr const char* kPos = "mpt.pos";
inline constexpr const char* kHeadW = "mpt.head.W";
inline constexpr const char* kHeadB = "mpt.head.b";
std::string layer(std::size_t l, const std::string& leaf);
std::string head(std::size_t l, std::size_t h, const std::string& leaf);
}  // namespace names

}  // namespace temp
