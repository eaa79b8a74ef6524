#pragma once

#include "temp/world.hpp"

#include <vector>

namespace temp {

/// Incremental k-d index over points owned by the caller. Points are
/// identified by insertion index; insertion order must match the owner's
/// indices. Below `kLinearThreshold` points every query is a linear scan.
class KdIndex {
 public:
  static constexpr std::size_t kLinearThreshold = 32;

  explicit KdIndex(int dim) : dim_(dim) {}

  void insert(const State& p);
  std::size_t size() const { return points_.size(); }

  /// Closest point, ties broken by lowest index. Index must be non-empty.
  int nearest(const State& q) const;

  /// All indices with distance <= radius, ascending.
  std::vector<int> within(const State& q, double radius) const;

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int axis = 0;
  };

  void nearest_rec(int node, const State& q, int& best, double& best_d2) const;
  void within_rec(int node, const State& q, double r2, std::vector<int>& out) const;

  int dim_;
  std::vector<State> points_;
  std::vector<Node> nodes_;
};

}  // namespace temp
