#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace temp {

using State = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Raised for malformed inputs: dimension mismatches, violated type
/// invariants, unreadable files.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Bounds {
  double low = 0.0;
  double high = 1.0;
};

/// Closed axis-aligned box.
struct BoxObstacle {
  State center;
  State half_extent;

  bool contains(const State& x) const;
};

/// Bounded d-dimensional region with box obstacles. Immutable once built.
class Workspace {
 public:
  Workspace(std::vector<Bounds> bounds, std::vector<BoxObstacle> obstacles);

  int dim() const { return static_cast<int>(bounds_.size()); }
  const std::vector<Bounds>& bounds() const { return bounds_; }
  const std::vector<BoxObstacle>& obstacles() const { return obstacles_; }

  bool inside_bounds(const State& x) const;
  State clamp(const State& x) const;
  /// Longest axis extent.
  double span() const;
  double volume() const;

 private:
  std::vector<Bounds> bounds_;
  std::vector<BoxObstacle> obstacles_;
};

/// Start state plus a closed goal ball.
class PlanningTask {
 public:
  PlanningTask(std::shared_ptr<const Workspace> ws, State x_init,
               State goal_center, double goal_radius, std::string id = {});

  const Workspace& workspace() const { return *ws_; }
  std::shared_ptr<const Workspace> workspace_ptr() const { return ws_; }
  const State& x_init() const { return x_init_; }
  const State& goal_center() const { return goal_center_; }
  double goal_radius() const { return goal_radius_; }
  const std::string& id() const { return id_; }
  int dim() const { return ws_->dim(); }

 private:
  std::shared_ptr<const Workspace> ws_;
  State x_init_;
  State goal_center_;
  double goal_radius_;
  std::string id_;
};

bool point_in_collision(const Workspace& ws, const State& x);

/// Exact closed-segment test using per-axis slab clipping against each box.
bool segment_in_collision(const Workspace& ws, const State& a, const State& b);

bool segment_hits_box(const BoxObstacle& box, const State& a, const State& b);

State sample_uniform(const Workspace& ws, Rng& rng);

/// Independent stream seed for sub-job (a, b) of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

bool in_goal(const PlanningTask& task, const State& x);

}  // namespace temp
