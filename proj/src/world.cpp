#include "temp/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace temp {

namespace {

void check_dim(const Workspace& ws, const State& x, const char* what) {
  if (x.size() != ws.dim()) {
    throw InvalidInput(std::string(what) + ": expected dimension " +
                       std::to_string(ws.dim()) + ", got " +
                       std::to_string(x.size()));
  }
}

}  // namespace

bool BoxObstacle::contains(const State& x) const {
  return ((x - center).cwiseAbs().array() <= half_extent.array()).all();
}

Workspace::Workspace(std::vector<Bounds> bounds,
                     std::vector<BoxObstacle> obstacles)
    : bounds_(std::move(bounds)), obstacles_(std::move(obstacles)) {
  if (bounds_.empty()) throw InvalidInput("workspace: dim must be >= 1");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto& b = bounds_[i];
    if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high)) {
      throw InvalidInput("workspace: axis " + std::to_string(i) +
                         " requires low < high");
    }
  }
  for (std::size_t k = 0; k < obstacles_.size(); ++k) {
    const auto& o = obstacles_[k];
    const auto tag = "workspace: obstacle " + std::to_string(k);
    if (o.center.size() != dim() || o.half_extent.size() != dim()) {
      throw InvalidInput(tag + " has wrong dimension");
    }
    if (!(o.half_extent.array() > 0.0).all() || !o.center.allFinite()) {
      throw InvalidInput(tag + " half_extent must be strictly positive");
    }
    for (int i = 0; i < dim(); ++i) {
      if (o.center[i] - o.half_extent[i] < bounds_[i].low ||
          o.center[i] + o.half_extent[i] > bounds_[i].high) {
        throw InvalidInput(tag + " leaves the workspace bounds");
      }
    }
  }
}

bool Workspace::inside_bounds(const State& x) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (!(x[i] >= bounds_[i].low && x[i] <= bounds_[i].high)) return false;
  }
  return true;
}

State Workspace::clamp(const State& x) const {
  State out = x;
  for (int i = 0; i < dim(); ++i) {
    out[i] = std::clamp(out[i], bounds_[i].low, bounds_[i].high);
  }
  return out;
}

double Workspace::span() const {
  double s = 0.0;
  for (const auto& b : bounds_) s = std::max(s, b.high - b.low);
  return s;
}

double Workspace::volume() const {
  double v = 1.0;
  for (const auto& b : bounds_) v *= b.high - b.low;
  return v;
}

PlanningTask::PlanningTask(std::shared_ptr<const Workspace> ws, State x_init,
                           State goal_center, double goal_radius,
                           std::string id)
    : ws_(std::move(ws)),
      x_init_(std::move(x_init)),
      goal_center_(std::move(goal_center)),
      goal_radius_(goal_radius),
      id_(std::move(id)) {
  if (!ws_) throw InvalidInput("task: missing workspace");
  check_dim(*ws_, x_init_, "task x_init");
  check_dim(*ws_, goal_center_, "task goal_center");
  if (!(goal_radius_ > 0.0) || !std::isfinite(goal_radius_)) {
    throw InvalidInput("task: goal_radius must be positive");
  }
  if (!ws_->inside_bounds(x_init_) || point_in_collision(*ws_, x_init_)) {
    throw InvalidInput("task: x_init must be a free state inside bounds");
  }
  if (!ws_->inside_bounds(goal_center_) ||
      point_in_collision(*ws_, goal_center_)) {
    throw InvalidInput("task: goal_center must be a free state inside bounds");
  }
  if (in_goal(*this, x_init_)) {
    throw InvalidInput("task: x_init already lies in the goal region");
  }
}

bool point_in_collision(const Workspace& ws, const State& x) {
  check_dim(ws, x, "point_in_collision");
  for (const auto& o : ws.obstacles()) {
    if (o.contains(x)) return true;
  }
  return false;
}

bool segment_hits_box(const BoxObstacle& box, const State& a, const State& b) {
  // Clip the parameter interval [0,1] of a + t(b-a) against every slab.
  double t0 = 0.0;
  double t1 = 1.0;
  for (int i = 0; i < a.size(); ++i) {
    const double lo = box.center[i] - box.half_extent[i];
    const double hi = box.center[i] + box.half_extent[i];
    const double d = b[i] - a[i];
    if (d == 0.0) {
      if (a[i] < lo || a[i] > hi) return false;
      continue;
    }
    double ta = (lo - a[i]) / d;
    double tb = (hi - a[i]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

bool segment_in_collision(const Workspace& ws, const State& a, const State& b) {
  check_dim(ws, a, "segment_in_collision");
  check_dim(ws, b, "segment_in_collision");
  for (const auto& o : ws.obstacles()) {
    if (segment_hits_box(o, a, b)) return true;
  }
  return false;
}

State sample_uniform(const Workspace& ws, Rng& rng) {
  State x(ws.dim());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < ws.dim(); ++i) {
    const auto& b = ws.bounds()[i];
    x[i] = b.low + (b.high - b.low) * u(rng);
  }
  return x;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a mixed key.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool in_goal(const PlanningTask& task, const State& x) {
  return (x - task.goal_center()).norm() <= task.goal_radius();
}

}  // namespace temp
