#pragma once

#include "temp/eise.hpp"
#include "temp/model.hpp"
#include "temp/nn/optim.hpp"
#include "temp/sbmp.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace temp {

/// Random box scenes. Every obstacle lies inside the bounds; scenes whose
/// free space fails the connectivity probe are redrawn.
struct SceneGenConfig {
  int dim = 2;
  double low = 0.0;
  double high = 10.0;
  int min_obstacles = 6;
  int max_obstacles = 10;
  double min_half_extent = 0.4;
  double max_half_extent = 1.4;
  int max_attempts = 200;
  /// RRT iterations for the probe between two random free states.
  int probe_iters = 5000;
  double probe_step = 0.5;
};

struct TaskGenConfig {
  double goal_radius = 0.5;
  /// Minimum start-goal distance as a fraction of the workspace span.
  double min_distance_fraction = 0.5;
  int max_attempts = 1000;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::shared_ptr<const Workspace>> generate_workspaces(const SceneGenConfig& cfg,
                                                                  int count, Rng& rng);

/// True when an RRT probe connects two random free states.
bool connectivity_probe(const Workspace& ws, const SceneGenConfig& cfg, Rng& rng);

PlanningTask generate_task(std::shared_ptr<const Workspace> ws, const TaskGenConfig& cfg,
                           Rng& rng, std::string id = {});

struct DatasetManifest {
  std::vector<std::shared_ptr<const Workspace>> train;
  std::vector<std::shared_ptr<const Workspace>> validation;
  int pairs_per_workspace = 20;
  /// Budget until the first solution; refinement runs afterwards.
  PlannerConfig expert;
  int refine_iters = 2000;
  TaskGenConfig tasks;
  std::uint64_t seed = 0;
  /// Worker threads for harvesting; 0 uses the hardware count.
  int threads = 0;
};

struct ExpertPath {
  int workspace = 0;
  bool validation = false;
  std::shared_ptr<const PlanningTask> task;
  Path path;
  double cost = 0.0;
};

struct HarvestWarning {
  int workspace = 0;
  bool validation = false;
  int solved = 0;
  int attempted = 0;
};

struct ExpertDataset {
  std::vector<ExpertPath> paths;
  std::vector<HarvestWarning> warnings;
  std::size_t dropped = 0;
};

/// Throws InvalidInput if train and validation share a workspace.
void check_disjoint(const DatasetManifest& m);

/// RRT* to the first solution, then `refine_iters` further iterations.
std::optional<Path> expert_plan(const PlanningTask& task, const PlannerConfig& cfg,
                                int refine_iters);

ExpertDataset harvest_expert_paths(const DatasetManifest& manifest);

/// All coordinates normalized to [-1,1] with the workspace bounds.
struct TrainingExample {
  EnvVector env;
  State goal;
  std::vector<State> path_prefix;
  State target;
  int workspace = 0;
};

/// Path {x_0..x_n} gives n examples: prefix {x_0..x_k} -> x_{k+1}.
std::vector<TrainingExample> explode_examples(const std::vector<ExpertPath>& dataset,
                                              const ModelConfig& model_cfg);

/// Newline-delimited JSON: a header record then one record per example.
void write_dataset(std::ostream& os, const std::vector<TrainingExample>& train,
                   const std::vector<TrainingExample>& val, const nlohmann::json& header);
struct LoadedDataset {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> val;
  int dim = 0;
};
LoadedDataset read_dataset(std::istream& is);

struct TrainConfig {
  EiseLossWeights weights;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  nn::LrSchedule schedule;
  std::size_t batch_size = 32;
  int max_epochs = 100;
  std::uint64_t seed = 0;
  /// Stop after this many seconds of training, if set.
  std::optional<double> time_budget;
};

struct TrainLogRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossParts {
  double total = 0.0;
  double recons = 0.0;
  double semantic = 0.0;
};

/// Joint loss for one example; gradients added to `grads` when non-null.
LossParts example_loss(const ModelBundle& model, const TrainingExample& ex,
                       const EiseLossWeights& w, nn::Gradients* grads);

/// Mean joint loss over a set, no gradients.
double dataset_loss(const ModelBundle& model, const std::vector<TrainingExample>& set,
                    const EiseLossWeights& w);

struct TrainResult {
  ModelBundle best;
  ModelBundle last;
  std::vector<TrainLogRow> log;
  double best_val = 0.0;
};

using EpochCallback = std::function<void(const TrainLogRow&)>;

TrainResult train(ModelBundle initial, const std::vector<TrainingExample>& examples,
                  const std::vector<TrainingExample>& val_examples, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch = {});

void write_train_log(std::ostream& os, const std::vector<TrainLogRow>& log);

/// Runs fn(i) for i in [0, n) on a pool of workers. Each index runs exactly
/// once; results must be written to per-index slots.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace temp
