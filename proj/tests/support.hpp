#pragma once

// Independent oracles shared by the unit tests and the acceptance binary.

#include "temp/model.hpp"
#include "temp/nn/autodiff.hpp"
#include "temp/sbmp.hpp"
#include "temp/world.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace temp::testing {

inline std::shared_ptr<const Workspace> box_world(int dim, double lo, double hi,
                                                  std::vector<BoxObstacle> obstacles = {}) {
  return std::make_shared<const Workspace>(std::vector<Bounds>(dim, Bounds{lo, hi}),
                                           std::move(obstacles));
}

inline State vec(std::initializer_list<double> v) {
  State s(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) s[i++] = x;
  return s;
}

/// Random boxes in [0,10]^dim, fully inside the bounds.
inline std::shared_ptr<const Workspace> random_world(int dim, int n_obstacles, Rng& rng) {
  std::uniform_real_distribution<double> half(0.3, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<BoxObstacle> obs;
  for (int k = 0; k < n_obstacles; ++k) {
    BoxObstacle b{State(dim), State(dim)};
    for (int i = 0; i < dim; ++i) {
      b.half_extent[i] = half(rng);
      b.center[i] = b.half_extent[i] + (10.0 - 2.0 * b.half_extent[i]) * unit(rng);
    }
    obs.push_back(b);
  }
  return box_world(dim, 0.0, 10.0, std::move(obs));
}

/// Point samples along [a,b]; true iff any sample is inside an obstacle.
inline bool sampled_segment_collision(const Workspace& ws, const State& a, const State& b,
                                      int samples = 10001) {
  for (int i = 0; i < samples; ++i) {
    const double t = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    const State x = a + t * (b - a);
    for (const auto& o : ws.obstacles()) {
      bool inside = true;
      for (int d = 0; d < x.size() && inside; ++d) {
        inside = std::abs(x[d] - o.center[d]) <= o.half_extent[d];
      }
      if (inside) return true;
    }
  }
  return false;
}

/// Longest stretch of [a,b] inside any single obstacle, from the interval
/// where |a_d + t (b_d - a_d) - c_d| <= h_d holds on every axis.
inline double longest_chord(const Workspace& ws, const State& a, const State& b) {
  double best = 0.0;
  const double len = (b - a).norm();
  for (const auto& o : ws.obstacles()) {
    double lo = 0.0, hi = 1.0;
    for (int d = 0; d < a.size(); ++d) {
      const double dir = b[d] - a[d];
      const double off = a[d] - o.center[d];
      if (std::abs(dir) < 1e-300) {
        if (std::abs(off) > o.half_extent[d]) hi = -1.0;
        continue;
      }
      double t1 = (-o.half_extent[d] - off) / dir;
      double t2 = (o.half_extent[d] - off) / dir;
      if (t1 > t2) std::swap(t1, t2);
      lo = std::max(lo, t1);
      hi = std::min(hi, t2);
    }
    if (hi >= lo) best = std::max(best, (hi - lo) * len);
  }
  return best;
}

/// Dense check of every edge of a path, plus endpoint contract.
inline bool path_is_valid(const PlanningTask& task, const Path& p, int samples_per_edge = 2001) {
  if (p.states.empty()) return false;
  if ((p.states.front() - task.x_init()).norm() > 1e-12) return false;
  if (!in_goal(task, p.states.back())) return false;
  for (std::size_t i = 0; i + 1 < p.states.size(); ++i) {
    if (segment_in_collision(task.workspace(), p.states[i], p.states[i + 1])) return false;
    if (sampled_segment_collision(task.workspace(), p.states[i], p.states[i + 1],
                                  samples_per_edge)) {
      return false;
    }
  }
  return true;
}

/// Empty string when the tree is acyclic, parent/child links agree, and every
/// stored cost matches the recomputed root-to-node edge sum within `tol`.
inline std::string tree_violation(const PlanningTree& tree, double tol = 1e-9) {
  const auto& nodes = tree.nodes();
  if (nodes.empty()) return "empty tree";
  if (nodes[0].parent != -1 || nodes[0].cost != 0.0) return "bad root";
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    double cost = 0.0;
    int cur = static_cast<int>(i);
    std::size_t steps = 0;
    while (cur != 0) {
      const int par = nodes[cur].parent;
      if (par < 0 || par >= static_cast<int>(nodes.size())) {
        return "node " + std::to_string(i) + " has a dangling parent";
      }
      cost += (nodes[cur].state - nodes[par].state).norm();
      cur = par;
      if (++steps > nodes.size()) return "cycle through node " + std::to_string(i);
    }
    if (std::abs(cost - nodes[i].cost) > tol) {
      return "node " + std::to_string(i) + " stores cost " + std::to_string(nodes[i].cost) +
             " but the edge sum is " + std::to_string(cost);
    }
    const auto& sib = nodes[nodes[i].parent].children;
    if (std::count(sib.begin(), sib.end(), static_cast<int>(i)) != 1) {
      return "node " + std::to_string(i) + " missing from its parent's children";
    }
  }
  return {};
}

/// Sampler wrapper that runs a check on the tree before every draw, i.e.
/// after every completed iteration.
class CheckingSampler final : public Sampler {
 public:
  CheckingSampler(Sampler& inner, std::function<void(const PlanningTree&)> check)
      : inner_(inner), check_(std::move(check)) {}
  State sample(const PlanningTask& task, const PlanningTree& tree, int tip, Rng& rng) override {
    check_(tree);
    return inner_.sample(task, tree, tip, rng);
  }

 private:
  Sampler& inner_;
  std::function<void(const PlanningTree&)> check_;
};

/// Relative error used by every gradient check: |a - n| / max(|a|, |n|),
/// with pairs where both magnitudes sit below `floor` compared absolutely.
inline double grad_rel_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < floor) return std::abs(analytic - numeric) / floor;
  return std::abs(analytic - numeric) / scale;
}

using LossBuilder = std::function<nn::Var(nn::Tape&, const nn::ParameterSet&)>;

/// Central differences (step h) against tape gradients for every scalar of
/// every parameter. Returns the maximum relative error.
inline double max_gradient_error(nn::ParameterSet& ps, const LossBuilder& build, double h = 1e-5) {
  nn::Gradients grads = ps.zero_gradients();
  {
    nn::Tape tape;
    nn::Var loss = build(tape, ps);
    tape.backward(loss, &grads);
  }
  auto eval = [&]() {
    nn::Tape tape(false);
    return build(tape, ps).value()[0];
  };
  double worst = 0.0;
  for (std::size_t p = 0; p < ps.size(); ++p) {
    auto& vals = ps[p].value.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double keep = vals[i];
      vals[i] = keep + h;
      const double up = eval();
      vals[i] = keep - h;
      const double down = eval();
      vals[i] = keep;
      worst = std::max(worst, grad_rel_error(grads[p][i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

inline nn::Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  nn::Tensor t(r, c);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

/// Small architecture that keeps finite-difference checks fast.
inline ModelConfig tiny_model_config(int dim = 2) {
  ModelConfig c;
  c.dim = dim;
  c.max_obstacles = 3;
  c.d_hidden = 8;
  c.attn.d_model = 8;
  c.attn.n_heads = 2;
  c.attn.n_layers = 2;
  c.attn.d_ffn = 12;
  c.max_seq_len = 10;
  return c;
}

/// mean((x - R)^2) for a fixed random R: a scalar whose gradient reaches
/// every element of x with a generic weight.
inline nn::Var random_projection(nn::Tape& tape, nn::Var x, std::uint64_t seed) {
  Rng rng(seed);
  return nn::mse(x, tape.constant(random_tensor(x.rows(), x.cols(), rng)));
}

}  // namespace temp::testing
