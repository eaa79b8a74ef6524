#pragma once

#include "temp/io.hpp"
#include "temp/metrics.hpp"
#include "temp/mpt.hpp"
#include "temp/temp_planner.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace temp {

inline constexpr const char* kTemp = "TEMP";
inline constexpr const char* kRrtStar = "RRT*";
inline constexpr const char* kIrrtStar = "IRRT*";

struct BenchTask {
  std::shared_ptr<const PlanningTask> task;
  std::string difficulty = "easy";
};

struct BenchmarkSuite {
  std::vector<BenchTask> tasks;
  std::vector<std::string> planners{kTemp, kRrtStar, kIrrtStar};
  int repetitions = 1;
  std::uint64_t seed = 0;
  double tau = 0.05;
  /// Baseline budget (iterations and optional time). `rng_seed` is ignored.
  PlannerConfig baseline;
  /// TEMP AP settings. `planner.rng_seed` is ignored.
  TempConfig temp;
  /// When false, baselines ignore the TEMP cost and run their full budget,
  /// which is what the cost-vs-nodes curves need.
  bool matched_cost = true;
  /// Workspaces seen during training; a suite task may not use any of them.
  std::vector<std::shared_ptr<const Workspace>> training_workspaces;
  int threads = 1;
};

/// True iff `baseline_cost` <= (1 + tau) * `temp_cost`.
bool eq7_accepts(double baseline_cost, double temp_cost, double tau);

/// "challenging" when the expert cost exceeds 1.3x the start-goal distance.
std::string label_difficulty(const PlanningTask& task, double expert_cost, double ratio = 1.3);

struct SuiteResult {
  std::vector<MetricsRecord> records;
  /// Aligned with `records`.
  std::vector<std::optional<Path>> paths;
  /// TEMP attention per record index (empty for baselines).
  std::map<std::size_t, std::vector<AttentionEntry>> attention;
};

/// Runs every (task, repetition, planner). TEMP metrics come from AP alone;
/// baselines stop once they satisfy the cost tolerance against TEMP's cost
/// on the same task and seed. If TEMP fails, baselines stop at their first
/// solution and the rows are flagged. `model` may be null when TEMP is not
/// among the planners.
SuiteResult run_suite(const BenchmarkSuite& suite, const ModelBundle* model);

struct Curve {
  std::string planner;
  std::vector<double> x;
  std::vector<double> y;
};

/// Fraction of each planner's records solved within each time.
std::vector<Curve> success_curve(const std::vector<MetricsRecord>& records,
                                 const std::vector<double>& time_grid);

/// Average best cost against node count. A record still unsolved at a node
/// count contributes its task's maximum observed cost times `penalty`.
/// Tasks with no observed cost for any planner are skipped.
std::vector<Curve> cost_vs_nodes(const std::vector<MetricsRecord>& records,
                                 const std::vector<double>& node_grid, double penalty = 1.5);

struct SummaryRow {
  std::string planner;
  std::string difficulty;
  std::size_t runs = 0;
  double success_rate = 0.0;
  double time_mean = 0.0;
  double nodes_mean = 0.0;
  double failures_mean = 0.0;
};

/// Rows sorted by (planner, difficulty); means over every run in the group.
std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records);

/// Grouped bars of normalized attention per sampling step.
std::string attention_svg(const std::vector<NormalizedCategory>& cats);

struct BenchOutputs {
  std::vector<MetricsRecord> records;
  std::vector<Curve> success;
  std::vector<Curve> cost;
  /// Optional attention episode for the bar chart.
  std::vector<NormalizedCategory> attention;
};

/// Writes summary.csv, records.json, success_rate.svg, sampling_failures.svg,
/// cost_vs_nodes.svg and, when attention is present, attention.csv and
/// attention.svg. Returns the written paths.
std::vector<std::filesystem::path> emit_outputs(const std::filesystem::path& dir,
                                                const BenchOutputs& out);

}  // namespace temp
