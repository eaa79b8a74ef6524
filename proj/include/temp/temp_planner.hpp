#pragma once

#include "temp/model.hpp"
#include "temp/mpt.hpp"
#include "temp/sbmp.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace temp {

struct TempConfig {
  /// step_size, AP iteration budget (max_iters), near radius, seed. goal_bias
  /// only affects the CP phase.
  PlannerConfig planner;
  /// CP continuation budget; 0 iterations means AP only.
  int cp_iters = 0;
  std::optional<double> cp_time_budget;
  bool cp_informed = false;
  /// Std-dev of Gaussian noise on MPT predictions, as a fraction of the
  /// workspace span.
  double noise_fraction = 0.02;
  /// Cap on uniform redraws within one AP iteration.
  int max_fallback_retries = 10000;
  int attention_layer = -1;
  HpdAggregation hpd_aggregation = HpdAggregation::Mean;
};

enum class Phase { ApFailed, ApSolved, CpRefined };

const char* phase_name(Phase p);

struct PlanOutcome {
  std::optional<Path> path;
  PlanningTree tree;
  /// Whole-run metrics (AP plus CP).
  MetricsRecord metrics;
  /// Snapshot taken when AP returned.
  MetricsRecord ap_metrics;
  std::vector<AttentionEntry> attention;
  Phase phase = Phase::ApFailed;
  double j_best = std::numeric_limits<double>::infinity();
  /// Fallback bookkeeping: loop entries (guided sample collided) and the
  /// uniform redraws that collided again.
  std::size_t fallback_entries = 0;
  std::size_t fallback_retries_failed = 0;
};

/// Source of guided samples for AP. The MPT-backed implementation also
/// records attention; tests substitute adversarial guides.
class GuideSampler {
 public:
  virtual ~GuideSampler() = default;
  virtual State sample(const PlanningTask& task, const Path& sigma_prime, Rng& rng) = 0;
};

class MptGuide final : public GuideSampler {
 public:
  MptGuide(const ModelBundle& model, const PlanningTask& task, const TempConfig& cfg);
  State sample(const PlanningTask& task, const Path& sigma_prime, Rng& rng) override;

  const std::vector<AttentionEntry>& attention() const { return attention_; }
  const std::vector<double>& sei() const { return sei_; }

 private:
  const ModelBundle& model_;
  const TempConfig& cfg_;
  std::vector<double> sei_;
  std::vector<AttentionEntry> attention_;
};

/// Root-to-node chain.
Path sigma_prime_update(const PlanningTree& tree, int new_index);

/// Attention-based planning: guided sampling with uniform fallback, returns
/// at the first node inside the goal region.
PlanOutcome temp_ap(const PlanningTask& task, const TempConfig& cfg, const ModelBundle& model);
PlanOutcome temp_ap(const PlanningTask& task, const TempConfig& cfg, GuideSampler& guide);

/// AP followed, on success, by RRT* refinement with random sampling.
PlanOutcome temp_full(const PlanningTask& task, const TempConfig& cfg, const ModelBundle& model);
PlanOutcome temp_full(const PlanningTask& task, const TempConfig& cfg, GuideSampler& guide);

}  // namespace temp
