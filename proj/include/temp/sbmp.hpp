#pragma once

#include "temp/kdtree.hpp"
#include "temp/metrics.hpp"
#include "temp/world.hpp"

#include <chrono>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace temp {

/// A caller broke an operation precondition (empty tree, c_best < c_min...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Path {
  std::vector<State> states;
};

/// Sum of consecutive Euclidean distances; 0 for a single state.
double path_cost(const Path& path);

struct TreeNode {
  State state;
  int parent = -1;
  double cost = 0.0;
  std::vector<int> children;
};

/// Rooted search tree with cost-to-come bookkeeping and a k-d index.
class PlanningTree {
 public:
  explicit PlanningTree(const State& root);

  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(int i) const { return nodes_.at(i); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int dim() const { return static_cast<int>(nodes_.front().state.size()); }

  int add(const State& s, int parent);
  /// Moves `child` under `new_parent` and refreshes every descendant cost.
  void reparent(int child, int new_parent);

  int nearest(const State& x) const;
  std::vector<int> within(const State& x, double radius) const;

  /// Root-to-node states via parent links.
  Path path_to(int i) const;

 private:
  void refresh_subtree(int root);

  std::vector<TreeNode> nodes_;
  KdIndex index_;
};

/// Euclidean step toward a target, clipped at `e`.
State steer(const State& from, const State& toward, double e);

struct PlannerConfig {
  double step_size = 1.0;
  int max_iters = 3000;
  double near_gamma = 20.0;
  double goal_bias = 0.05;
  std::uint64_t rng_seed = 0;
  std::optional<double> time_budget;
  /// Stop as soon as the best cost drops to or below this value.
  std::optional<double> target_cost;
  bool stop_on_first_solution = false;
};

double near_radius(const PlannerConfig& cfg, std::size_t n_nodes, int dim);

std::vector<int> near_set(const PlanningTree& tree, const State& x,
                          std::size_t n_nodes, const PlannerConfig& cfg);

struct ParentChoice {
  int parent = -1;
  double cost = 0.0;
};

std::optional<ParentChoice> choose_parent(const PlanningTree& tree,
                                          const std::vector<int>& candidates,
                                          const State& x_new,
                                          const Workspace& ws);

int rewire(PlanningTree& tree, int new_index,
           const std::vector<int>& candidates, const Workspace& ws);

/// Produces the next sample for tree growth. `tip` is the most recently
/// added node; its root chain is the current path-to-tip. Returned states
/// must have the task dimension and lie inside the workspace bounds.
class Sampler {
 public:
  virtual ~Sampler() = default;
  virtual State sample(const PlanningTask& task, const PlanningTree& tree,
                       int tip, Rng& rng) = 0;
};

/// Uniform over the bounds, returning the goal center with probability
/// `goal_bias`.
class UniformSampler final : public Sampler {
 public:
  explicit UniformSampler(double goal_bias) : goal_bias_(goal_bias) {}
  State sample(const PlanningTask& task, const PlanningTree& tree, int tip,
               Rng& rng) override;

 private:
  double goal_bias_;
};

/// Uniform sample from the prolate hyperspheroid with foci x_init and
/// goal_center and transverse diameter c_best, restricted to the bounds.
State informed_sample(const PlanningTask& task, double c_best, Rng& rng);

/// Semi-axes (transverse first) of the informed region actually sampled,
/// after the degenerate-case inflation.
std::pair<double, double> informed_semi_axes(const PlanningTask& task,
                                             double c_best);

/// Called with every post-solution informed sample and the transverse
/// diameter it was drawn for.
using InformedObserver = std::function<void(const State&, double)>;

/// Anytime RRT* state shared by every planner in this project: grows one
/// tree, tracks goal-reaching nodes, counts failures and improvements.
class RrtStarSearch {
 public:
  RrtStarSearch(const PlanningTask& task, const PlannerConfig& cfg,
                std::string planner_name);

  const PlanningTask& task() const { return task_; }
  const PlannerConfig& config() const { return cfg_; }
  const PlanningTree& tree() const { return tree_; }
  Rng& rng() { return rng_; }

  struct Extension {
    int nearest = -1;
    State x_new;
    bool collided = false;
  };
  /// Nearest node plus steered state; `collided` iff the edge is blocked.
  Extension extend_toward(const State& sample) const;

  /// FindNear, ChooseParent, append, Rewire. Returns the new node index or
  /// -1 when no collision-free parent exists.
  int insert(const State& x_new);

  void count_failure() { ++metrics_.sampling_failures; }
  void count_iteration() { ++metrics_.iterations; }

  bool solved() const { return best_goal_ >= 0; }
  double best_cost() const;
  int best_goal_node() const { return best_goal_; }
  int last_node() const { return last_; }
  std::optional<Path> best_path() const;

  double elapsed() const;
  /// Replaces the time budget, measured from this call.
  void set_time_budget(std::optional<double> seconds);
  bool out_of_time() const;
  void set_stop_on_first_solution(bool stop) { cfg_.stop_on_first_solution = stop; }
  bool reached_target() const;

  /// Metrics snapshot with time, node count and final cost filled in.
  MetricsRecord finish() const;

 private:
  void refresh_best();

  const PlanningTask& task_;
  PlannerConfig cfg_;
  PlanningTree tree_;
  Rng rng_;
  std::vector<int> goal_nodes_;
  int best_goal_ = -1;
  int last_ = 0;
  MetricsRecord metrics_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point budget_start_;
};

struct PlanResult {
  std::optional<Path> path;
  PlanningTree tree;
  MetricsRecord metrics;
};

/// Runs the uniform-or-custom-sampler RRT* loop on an existing search
/// until the iteration budget, time budget, or target cost stops it.
void run_rrt_star_loop(RrtStarSearch& search, Sampler& sampler, int iters,
                       bool informed = false,
                       const InformedObserver& observer = {});

PlanResult rrt_star(const PlanningTask& task, const PlannerConfig& cfg,
                    Sampler& sampler);
PlanResult rrt_star(const PlanningTask& task, const PlannerConfig& cfg);

PlanResult irrt_star(const PlanningTask& task, const PlannerConfig& cfg,
                     const InformedObserver& observer = {});

}  // namespace temp
