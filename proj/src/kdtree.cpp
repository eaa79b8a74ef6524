#include "temp/kdtree.hpp"

#include <algorithm>
#include <stdexcept>

namespace temp {

void KdIndex::insert(const State& p) {
  const int idx = static_cast<int>(points_.size());
  points_.push_back(p);
  nodes_.push_back(Node{});
  if (idx == 0) return;
  int cur = 0;
  int depth = 0;
  while (true) {
    Node& n = nodes_[cur];
    n.axis = depth % dim_;
    int& next = p[n.axis] < points_[cur][n.axis] ? n.left : n.right;
    if (next < 0) {
      next = idx;
      nodes_[idx].axis = (depth + 1) % dim_;
      return;
    }
    cur = next;
    ++depth;
  }
}

int KdIndex::nearest(const State& q) const {
  if (points_.empty()) throw std::logic_error("nearest: empty index");
  int best = -1;
  double best_d2 = 0.0;
  if (points_.size() < kLinearThreshold) {
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
      const double d2 = (points_[i] - q).squaredNorm();
      if (best < 0 || d2 < best_d2) {
        best = i;
        best_d2 = d2;
      }
    }
    return best;
  }
  nearest_rec(0, q, best, best_d2);
  return best;
}

void KdIndex::nearest_rec(int node, const State& q, int& best,
                          double& best_d2) const {
  if (node < 0) return;
  const double d2 = (points_[node] - q).squaredNorm();
  if (best < 0 || d2 < best_d2 || (d2 == best_d2 && node < best)) {
    best = node;
    best_d2 = d2;
  }
  const Node& n = nodes_[node];
  const double diff = q[n.axis] - points_[node][n.axis];
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  nearest_rec(near, q, best, best_d2);
  if (diff * diff <= best_d2) nearest_rec(far, q, best, best_d2);
}

std::vector<int> KdIndex::within(const State& q, double radius) const {
  std::vector<int> out;
  const double r2 = radius * radius;
  if (points_.size() < kLinearThreshold) {
    for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
      if ((points_[i] - q).squaredNorm() <= r2) out.push_back(i);
    }
    return out;
  }
  if (!points_.empty()) within_rec(0, q, r2, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdIndex::within_rec(int node, const State& q, double r2,
                         std::vector<int>& out) const {
  if (node < 0) return;
  if ((points_[node] - q).squaredNorm() <= r2) out.push_back(node);
  const Node& n = nodes_[node];
  const double diff = q[n.axis] - points_[node][n.axis];
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  within_rec(near, q, r2, out);
  if (diff * diff <= r2) within_rec(far, q, r2, out);
}

}  // namespace temp
