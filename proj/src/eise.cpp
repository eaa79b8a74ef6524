#include "temp/eise.hpp"

#include <algorithm>

namespace temp {

State normalize_state(const Workspace& ws, const State& x) {
  State out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const auto& b = ws.bounds()[i];
    out[i] = 2.0 * (x[i] - b.low) / (b.high - b.low) - 1.0;
  }
  return out;
}

State denormalize_state(const Workspace& ws, const State& x_norm) {
  State out(x_norm.size());
  for (int i = 0; i < x_norm.size(); ++i) {
    const auto& b = ws.bounds()[i];
    out[i] = b.low + (x_norm[i] + 1.0) * 0.5 * (b.high - b.low);
  }
  return ws.clamp(out);
}

EnvVector encode_environment(const Workspace& ws, std::size_t max_obstacles) {
  const auto& obs = ws.obstacles();
  if (obs.size() > max_obstacles) {
    throw InvalidInput("workspace has " + std::to_string(obs.size()) +
                       " obstacles, model supports " + std::to_string(max_obstacles));
  }
  const int d = ws.dim();
  EnvVector env;
  env.values.reserve(max_obstacles * 2 * d);
  for (std::size_t k = 0; k < max_obstacles; ++k) {
    if (k < obs.size()) {
      const State c = normalize_state(ws, obs[k].center);
      env.values.insert(env.values.end(), c.data(), c.data() + d);
      for (int i = 0; i < d; ++i) {
        const auto& b = ws.bounds()[i];
        env.values.push_back(2.0 * obs[k].half_extent[i] / (b.high - b.low));
      }
    } else {
      env.values.insert(env.values.end(), d, kPadCenter);
      env.values.insert(env.values.end(), d, kPadHalfExtent);
    }
  }
  return env;
}

EnvVector encoder_input(const ModelConfig& cfg, const PlanningTask& task) {
  EnvVector env = encode_environment(task.workspace(), cfg.max_obstacles);
  if (cfg.eise_task_conditioning) {
    const State s = normalize_state(task.workspace(), task.x_init());
    const State g = normalize_state(task.workspace(), task.goal_center());
    env.values.insert(env.values.end(), s.data(), s.data() + s.size());
    env.values.insert(env.values.end(), g.data(), g.data() + g.size());
  }
  return env;
}

namespace eise {

namespace {

nn::Var dense(nn::Tape& tape, const ModelBundle& m, nn::Var x, const std::string& w,
              const std::string& b) {
  return nn::linear(x, tape.param(m.params(), w), tape.param(m.params(), b));
}

}  // namespace

nn::Var encode(nn::Tape& tape, const ModelBundle& model, nn::Var env) {
  if (env.value().size() != model.config().env_length()) {
    throw InvalidInput("eise::encode: environment length " +
                       std::to_string(env.value().size()) + ", expected " +
                       std::to_string(model.config().env_length()));
  }
  nn::Var h = nn::relu(dense(tape, model, env, names::eise_enc_w(0), names::eise_enc_b(0)));
  if (!model.config().eise_two_layer) return h;
  return dense(tape, model, h, names::eise_enc_w(1), names::eise_enc_b(1));
}

nn::Var decode(nn::Tape& tape, const ModelBundle& model, nn::Var sei) {
  if (sei.value().size() != model.config().attn.d_model) {
    throw InvalidInput("eise::decode: SEI length mismatch");
  }
  if (!model.config().eise_two_layer) {
    return dense(tape, model, sei, names::eise_dec_w(0), names::eise_dec_b(0));
  }
  nn::Var h = nn::relu(dense(tape, model, sei, names::eise_dec_w(0), names::eise_dec_b(0)));
  return dense(tape, model, h, names::eise_dec_w(1), names::eise_dec_b(1));
}

nn::Var loss(nn::Var env, nn::Var env_hat, nn::Var x, nn::Var x_hat, const EiseLossWeights& w) {
  if (w.lambda < 0 || w.eta < 0 || (w.lambda == 0 && w.eta == 0)) {
    throw InvalidInput("eise loss weights must be nonnegative and not both zero");
  }
  return nn::weighted_sum({nn::mse(env, env_hat), nn::mse(x, x_hat)}, {w.lambda, w.eta});
}

std::vector<double> encode(const ModelBundle& model, const EnvVector& env) {
  nn::Tape tape(false);
  auto s = encode(tape, model, tape.constant(nn::Tensor::vector(env.values)));
  return s.value().values();
}

std::vector<double> decode(const ModelBundle& model, const std::vector<double>& sei) {
  nn::Tape tape(false);
  auto o = decode(tape, model, tape.constant(nn::Tensor::vector(sei)));
  return o.value().values();
}

}  // namespace eise

}  // namespace temp
