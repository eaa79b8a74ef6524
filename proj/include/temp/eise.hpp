#pragma once

#include "temp/model.hpp"
#include "temp/world.hpp"

#include <vector>

namespace temp {

/// Fixed-length obstacle encoding in normalized [-1,1] coordinates. Each
/// slot holds center then half extent; empty slots hold center 0 and half
/// extent -1.
struct EnvVector {
  std::vector<double> values;
};

inline constexpr double kPadCenter = 0.0;
inline constexpr double kPadHalfExtent = -1.0;

/// Maps world coordinates to [-1,1] per axis.
State normalize_state(const Workspace& ws, const State& x);
/// Inverse of normalize_state, clamped to the bounds.
State denormalize_state(const Workspace& ws, const State& x_norm);

/// Throws InvalidInput when the workspace has more obstacles than slots.
EnvVector encode_environment(const Workspace& ws, std::size_t max_obstacles);

/// Environment vector as the encoder consumes it, including the normalized
/// start and goal when task conditioning is enabled.
EnvVector encoder_input(const ModelConfig& cfg, const PlanningTask& task);

struct EiseLossWeights {
  double lambda = 1.0;
  double eta = 1.0;
};

namespace eise {

/// Fully connected encoder O -> S (ReLU after the first layer).
nn::Var encode(nn::Tape& tape, const ModelBundle& model, nn::Var env);
/// Mirror-shaped decoder S -> reconstruction.
nn::Var decode(nn::Tape& tape, const ModelBundle& model, nn::Var sei);

/// lambda * MSE(O, O_hat) + eta * MSE(x, x_hat)
nn::Var loss(nn::Var env, nn::Var env_hat, nn::Var x, nn::Var x_hat, const EiseLossWeights& w);

/// Evaluation-only helpers.
std::vector<double> encode(const ModelBundle& model, const EnvVector& env);
std::vector<double> decode(const ModelBundle& model, const std::vector<double>& sei);

}  // namespace eise

}  // namespace temp
