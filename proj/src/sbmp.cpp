#include "temp/sbmp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace temp {

double path_cost(const Path& path) {
  double c = 0.0;
  for (std::size_t i = 1; i < path.states.size(); ++i) {
    c += (path.states[i] - path.states[i - 1]).norm();
  }
  return c;
}

PlanningTree::PlanningTree(const State& root) : index_(root.size()) {
  nodes_.push_back(TreeNode{root, -1, 0.0, {}});
  index_.insert(root);
}

int PlanningTree::add(const State& s, int parent) {
  if (parent < 0 || parent >= static_cast<int>(nodes_.size())) {
    throw ContractViolation("PlanningTree::add: bad parent index");
  }
  const int idx = static_cast<int>(nodes_.size());
  const double cost = nodes_[parent].cost + (s - nodes_[parent].state).norm();
  nodes_.push_back(TreeNode{s, parent, cost, {}});
  nodes_[parent].children.push_back(idx);
  index_.insert(s);
  return idx;
}

void PlanningTree::reparent(int child, int new_parent) {
  auto& old_children = nodes_[nodes_[child].parent].children;
  old_children.erase(std::find(old_children.begin(), old_children.end(), child));
  nodes_[child].parent = new_parent;
  nodes_[new_parent].children.push_back(child);
  refresh_subtree(child);
}

void PlanningTree::refresh_subtree(int root) {
  std::deque<int> queue{root};
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    auto& n = nodes_[i];
    const auto& p = nodes_[n.parent];
    n.cost = p.cost + (n.state - p.state).norm();
    queue.insert(queue.end(), n.children.begin(), n.children.end());
  }
}

int PlanningTree::nearest(const State& x) const { return index_.nearest(x); }

std::vector<int> PlanningTree::within(const State& x, double radius) const {
  return index_.within(x, radius);
}

Path PlanningTree::path_to(int i) const {
  Path p;
  for (int cur = i; cur >= 0; cur = nodes_.at(cur).parent) {
    p.states.push_back(nodes_[cur].state);
  }
  std::reverse(p.states.begin(), p.states.end());
  return p;
}

State steer(const State& from, const State& toward, double e) {
  if (!(e > 0.0)) throw ContractViolation("steer: step size must be positive");
  const State delta = toward - from;
  const double dist = delta.norm();
  if (dist <= e) return toward;
  return from + (e / dist) * delta;
}

double near_radius(const PlannerConfig& cfg, std::size_t n_nodes, int dim) {
  const double n = static_cast<double>(std::max<std::size_t>(n_nodes, 1));
  const double shrinking = cfg.near_gamma * std::pow(std::log(n) / n, 1.0 / dim);
  return std::min(shrinking, 4.0 * cfg.step_size);
}

std::vector<int> near_set(const PlanningTree& tree, const State& x,
                          std::size_t n_nodes, const PlannerConfig& cfg) {
  if (n_nodes < 1) throw ContractViolation("near_set: n_nodes must be >= 1");
  auto out = tree.within(x, near_radius(cfg, n_nodes, tree.dim()));
  const int nn = tree.nearest(x);
  if (!std::binary_search(out.begin(), out.end(), nn)) {
    out.insert(std::lower_bound(out.begin(), out.end(), nn), nn);
  }
  return out;
}

std::optional<ParentChoice> choose_parent(const PlanningTree& tree,
                                          const std::vector<int>& candidates,
                                          const State& x_new,
                                          const Workspace& ws) {
  if (candidates.empty()) throw ContractViolation("choose_parent: no candidates");
  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(candidates.size());
  for (int c : candidates) {
    const auto& n = tree.node(c);
    ranked.emplace_back(n.cost + (x_new - n.state).norm(), c);
  }
  std::sort(ranked.begin(), ranked.end());
  for (const auto& [cost, c] : ranked) {
    if (!segment_in_collision(ws, tree.node(c).state, x_new)) {
      return ParentChoice{c, cost};
    }
  }
  return std::nullopt;
}

int rewire(PlanningTree& tree, int new_index,
           const std::vector<int>& candidates, const Workspace& ws) {
  int count = 0;
  for (int c : candidates) {
    if (c == new_index) continue;
    const auto& nn = tree.node(new_index);
    const auto& cn = tree.node(c);
    if (c == nn.parent) continue;
    const double via = nn.cost + (cn.state - nn.state).norm();
    if (via < cn.cost && !segment_in_collision(ws, nn.state, cn.state)) {
      tree.reparent(c, new_index);
      ++count;
    }
  }
  return count;
}

State UniformSampler::sample(const PlanningTask& task, const PlanningTree&,
                             int, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (goal_bias_ > 0.0 && u(rng) < goal_bias_) return task.goal_center();
  return sample_uniform(task.workspace(), rng);
}

namespace {

double inflate(const PlanningTask& task, double c_best) {
  const double c_min = (task.goal_center() - task.x_init()).norm();
  if (c_best < c_min) {
    throw ContractViolation("informed_sample: c_best below c_min");
  }
  return std::max(c_best, c_min + 1e-6 * c_min);
}

// Orthonormal basis whose first column is `axis` (unit length), built from
// the Householder reflection that maps e_1 onto it.
Eigen::MatrixXd basis_from_axis(const State& axis) {
  const int d = static_cast<int>(axis.size());
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  State v = State::Unit(d, 0) - axis;
  const double vv = v.squaredNorm();
  if (vv < 1e-24) return eye;
  return eye - (2.0 / vv) * v * v.transpose();
}

}  // namespace

std::pair<double, double> informed_semi_axes(const PlanningTask& task,
                                             double c_best) {
  const double c = inflate(task, c_best);
  const double c_min = (task.goal_center() - task.x_init()).norm();
  return {c / 2.0, std::sqrt(c * c - c_min * c_min) / 2.0};
}

State informed_sample(const PlanningTask& task, double c_best, Rng& rng) {
  const int d = task.dim();
  const auto [a, b] = informed_semi_axes(task, c_best);
  const State f1 = task.x_init();
  const State f2 = task.goal_center();
  const State center = 0.5 * (f1 + f2);
  const Eigen::MatrixXd rot = basis_from_axis((f2 - f1).normalized());
  State radii = State::Constant(d, b);
  radii[0] = a;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& ws = task.workspace();
  while (true) {
    State ball(d);
    for (int i = 0; i < d; ++i) ball[i] = gauss(rng);
    const double n = ball.norm();
    if (n == 0.0) continue;
    ball *= std::pow(u(rng), 1.0 / d) / n;
    State x = center + rot * radii.cwiseProduct(ball);
    if (ws.inside_bounds(x)) return x;
  }
}

RrtStarSearch::RrtStarSearch(const PlanningTask& task, const PlannerConfig& cfg,
                             std::string planner_name)
    : task_(task),
      cfg_(cfg),
      tree_(task.x_init()),
      rng_(cfg.rng_seed),
      start_(std::chrono::steady_clock::now()),
      budget_start_(start_) {
  if (!(cfg.step_size > 0.0) || cfg.max_iters < 0 || !(cfg.near_gamma > 0.0) ||
      cfg.goal_bias < 0.0 || cfg.goal_bias >= 1.0) {
    throw InvalidInput("planner config out of range");
  }
  metrics_.task_id = task.id();
  metrics_.planner = std::move(planner_name);
  metrics_.seed = cfg.rng_seed;
}

RrtStarSearch::Extension RrtStarSearch::extend_toward(const State& sample) const {
  Extension ext;
  ext.nearest = tree_.nearest(sample);
  const State& from = tree_.node(ext.nearest).state;
  ext.x_new = steer(from, sample, cfg_.step_size);
  ext.collided = segment_in_collision(task_.workspace(), from, ext.x_new);
  return ext;
}

int RrtStarSearch::insert(const State& x_new) {
  const auto near = near_set(tree_, x_new, tree_.size(), cfg_);
  const auto choice = choose_parent(tree_, near, x_new, task_.workspace());
  if (!choice) return -1;
  const int idx = tree_.add(x_new, choice->parent);
  rewire(tree_, idx, near, task_.workspace());
  last_ = idx;
  if (in_goal(task_, x_new)) goal_nodes_.push_back(idx);
  refresh_best();
  return idx;
}

void RrtStarSearch::refresh_best() {
  if (goal_nodes_.empty()) return;
  const double before = best_cost();
  int best = goal_nodes_.front();
  for (int g : goal_nodes_) {
    if (tree_.node(g).cost < tree_.node(best).cost) best = g;
  }
  best_goal_ = best;
  const double now = tree_.node(best).cost;
  if (now < before) {
    if (metrics_.trace.empty()) metrics_.first_solution_time = elapsed();
    metrics_.trace.push_back(TracePoint{tree_.size(), elapsed(), now});
  }
}

double RrtStarSearch::best_cost() const {
  return best_goal_ < 0 ? std::numeric_limits<double>::infinity()
                        : tree_.node(best_goal_).cost;
}

std::optional<Path> RrtStarSearch::best_path() const {
  if (best_goal_ < 0) return std::nullopt;
  return tree_.path_to(best_goal_);
}

double RrtStarSearch::elapsed() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
      .count();
}

void RrtStarSearch::set_time_budget(std::optional<double> seconds) {
  cfg_.time_budget = seconds;
  budget_start_ = std::chrono::steady_clock::now();
}

bool RrtStarSearch::out_of_time() const {
  if (!cfg_.time_budget) return false;
  const std::chrono::duration<double> used = std::chrono::steady_clock::now() - budget_start_;
  return used.count() >= *cfg_.time_budget;
}

bool RrtStarSearch::reached_target() const {
  if (!solved()) return false;
  if (cfg_.stop_on_first_solution) return true;
  return cfg_.target_cost && best_cost() <= *cfg_.target_cost;
}

MetricsRecord RrtStarSearch::finish() const {
  MetricsRecord m = metrics_;
  m.time_s = elapsed();
  m.nodes = tree_.size();
  m.success = solved();
  m.cost = best_cost();
  return m;
}

void run_rrt_star_loop(RrtStarSearch& search, Sampler& sampler, int iters,
                       bool informed, const InformedObserver& observer) {
  const auto& task = search.task();
  for (int i = 0; i < iters; ++i) {
    if (search.reached_target() || search.out_of_time()) break;
    search.count_iteration();
    State x_sample;
    if (informed && search.solved()) {
      // Paths end anywhere in the goal ball, so widen by its radius to keep
      // every improving state inside the sampled region.
      const double c_min = (task.goal_center() - task.x_init()).norm();
      const double c = std::max(search.best_cost() + task.goal_radius(), c_min);
      x_sample = informed_sample(task, c, search.rng());
      if (observer) observer(x_sample, c);
    } else {
      x_sample = sampler.sample(task, search.tree(), search.last_node(),
                                search.rng());
    }
    const auto ext = search.extend_toward(x_sample);
    if (ext.collided) {
      search.count_failure();
      continue;
    }
    search.insert(ext.x_new);
  }
}

PlanResult rrt_star(const PlanningTask& task, const PlannerConfig& cfg,
                    Sampler& sampler) {
  RrtStarSearch search(task, cfg, "RRT*");
  run_rrt_star_loop(search, sampler, cfg.max_iters);
  return PlanResult{search.best_path(), search.tree(), search.finish()};
}

PlanResult rrt_star(const PlanningTask& task, const PlannerConfig& cfg) {
  UniformSampler sampler(cfg.goal_bias);
  return rrt_star(task, cfg, sampler);
}

PlanResult irrt_star(const PlanningTask& task, const PlannerConfig& cfg,
                     const InformedObserver& observer) {
  RrtStarSearch search(task, cfg, "IRRT*");
  UniformSampler sampler(cfg.goal_bias);
  run_rrt_star_loop(search, sampler, cfg.max_iters, true, observer);
  return PlanResult{search.best_path(), search.tree(), search.finish()};
}

}  // namespace temp
