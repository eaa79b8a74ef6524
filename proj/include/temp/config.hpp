#pragma once

#include "temp/bench.hpp"
#include "temp/io.hpp"
#include "temp/model.hpp"
#include "temp/pipeline.hpp"
#include "temp/temp_planner.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace temp {

/// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything the CLI needs, read from one JSON file. Sections: scene,
/// tasks, dataset, model, train, planner, temp, bench. Missing keys keep
/// their defaults; unknown keys are rejected.
struct AppConfig {
  std::uint64_t seed = 0;
  int threads = 0;

  SceneGenConfig scene;
  TaskGenConfig tasks;

  int train_workspaces = 10;
  int val_workspaces = 2;
  int pairs_per_workspace = 20;
  PlannerConfig expert;
  int refine_iters = 2000;

  ModelConfig model;
  TrainConfig train;

  /// Baseline RRT*/IRRT* settings, also used by `plan`.
  PlannerConfig planner;
  TempConfig temp;

  int test_workspaces = 4;
  int test_tasks_per_workspace = 5;
  int repetitions = 1;
  double tau = 0.05;
  bool matched_cost = true;
  std::vector<std::string> planners{kTemp, kRrtStar, kIrrtStar};
  double difficulty_ratio = 1.3;
  double penalty = 1.5;

  /// Applies to scene and model; keeps them in sync.
  void set_dim(int d);
};

AppConfig parse_config(const JsonDocument& doc);
AppConfig load_config(const std::filesystem::path& path);

}  // namespace temp
