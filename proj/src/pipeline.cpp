#include "temp/pipeline.hpp"

#include "temp/mpt.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace temp {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

State random_free_state(const Workspace& ws, Rng& rng, int max_attempts) {
  for (int i = 0; i < max_attempts; ++i) {
    State x = sample_uniform(ws, rng);
    if (!point_in_collision(ws, x)) return x;
  }
  throw GenerationError("no free state found");
}

}  // namespace

bool connectivity_probe(const Workspace& ws, const SceneGenConfig& cfg, Rng& rng) {
  auto shared = std::make_shared<const Workspace>(ws);
  const State a = random_free_state(ws, rng, 10000);
  State b = random_free_state(ws, rng, 10000);
  const double r = 0.25 * cfg.probe_step;
  for (int i = 0; i < 100 && (a - b).norm() <= r; ++i) b = random_free_state(ws, rng, 10000);
  if ((a - b).norm() <= r) return true;
  PlanningTask probe(shared, a, b, r);
  PlannerConfig pc;
  pc.step_size = cfg.probe_step;
  pc.max_iters = cfg.probe_iters;
  pc.goal_bias = 0.1;
  pc.stop_on_first_solution = true;
  pc.rng_seed = rng();
  return rrt_star(probe, pc).path.has_value();
}

std::vector<std::shared_ptr<const Workspace>> generate_workspaces(const SceneGenConfig& cfg,
                                                                  int count, Rng& rng) {
  if (cfg.dim < 1 || !(cfg.low < cfg.high) || cfg.min_obstacles < 0 ||
      cfg.max_obstacles < cfg.min_obstacles || !(cfg.min_half_extent > 0.0) ||
      cfg.max_half_extent < cfg.min_half_extent ||
      2.0 * cfg.max_half_extent >= cfg.high - cfg.low) {
    throw InvalidInput("scene generator ranges are invalid");
  }
  std::vector<std::shared_ptr<const Workspace>> out;
  std::vector<Bounds> bounds(cfg.dim, Bounds{cfg.low, cfg.high});
  std::uniform_int_distribution<int> n_obs(cfg.min_obstacles, cfg.max_obstacles);
  std::uniform_real_distribution<double> half(cfg.min_half_extent, cfg.max_half_extent);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (attempts++ >= cfg.max_attempts) {
      throw GenerationError("scene generation exhausted " + std::to_string(cfg.max_attempts) +
                            " attempts");
    }
    std::vector<BoxObstacle> obs;
    const int k = n_obs(rng);
    for (int j = 0; j < k; ++j) {
      BoxObstacle b{State(cfg.dim), State(cfg.dim)};
      for (int i = 0; i < cfg.dim; ++i) {
        b.half_extent[i] = half(rng);
        const double lo = cfg.low + b.half_extent[i];
        const double hi = cfg.high - b.half_extent[i];
        b.center[i] = lo + (hi - lo) * unit(rng);
      }
      obs.push_back(std::move(b));
    }
    auto ws = std::make_shared<const Workspace>(bounds, std::move(obs));
    if (connectivity_probe(*ws, cfg, rng)) out.push_back(std::move(ws));
  }
  return out;
}

PlanningTask generate_task(std::shared_ptr<const Workspace> ws, const TaskGenConfig& cfg,
                           Rng& rng, std::string id) {
  const double min_dist = std::max(cfg.min_distance_fraction * ws->span(),
                                   cfg.goal_radius * 1.01);
  for (int i = 0; i < cfg.max_attempts; ++i) {
    const State s = random_free_state(*ws, rng, 10000);
    const State g = random_free_state(*ws, rng, 10000);
    if ((s - g).norm() >= min_dist) return PlanningTask(ws, s, g, cfg.goal_radius, std::move(id));
  }
  throw GenerationError("no start-goal pair satisfies the distance constraint");
}

void check_disjoint(const DatasetManifest& m) {
  for (const auto& t : m.train) {
    for (const auto& v : m.validation) {
      if (t == v) throw InvalidInput("train and validation workspaces overlap");
    }
  }
}

std::optional<Path> expert_plan(const PlanningTask& task, const PlannerConfig& cfg,
                                int refine_iters) {
  PlannerConfig first = cfg;
  first.stop_on_first_solution = true;
  RrtStarSearch search(task, first, "RRT*");
  UniformSampler sampler(cfg.goal_bias);
  run_rrt_star_loop(search, sampler, cfg.max_iters);
  if (!search.solved()) return std::nullopt;
  // Refinement continues on the same tree.
  search.set_stop_on_first_solution(false);
  run_rrt_star_loop(search, sampler, refine_iters);
  return search.best_path();
}

ExpertDataset harvest_expert_paths(const DatasetManifest& m) {
  check_disjoint(m);
  struct Job {
    int ws;
    bool val;
    int pair;
  };
  std::vector<Job> jobs;
  for (int v = 0; v < 2; ++v) {
    const auto& set = v ? m.validation : m.train;
    for (int w = 0; w < static_cast<int>(set.size()); ++w)
      for (int p = 0; p < m.pairs_per_workspace; ++p) jobs.push_back({w, v == 1, p});
  }
  std::vector<std::optional<ExpertPath>> results(jobs.size());
  parallel_for(jobs.size(), m.threads, [&](std::size_t i) {
    const Job& j = jobs[i];
    const auto& ws = (j.val ? m.validation : m.train)[j.ws];
    Rng rng(derive_seed(m.seed, (j.val ? 1000003ULL : 0ULL) + j.ws, j.pair));
    const std::string id =
        (j.val ? "val" : "train") + std::to_string(j.ws) + "_" + std::to_string(j.pair);
    auto task = std::make_shared<const PlanningTask>(generate_task(ws, m.tasks, rng, id));
    PlannerConfig pc = m.expert;
    pc.rng_seed = rng();
    auto path = expert_plan(*task, pc, m.refine_iters);
    if (path) results[i] = ExpertPath{j.ws, j.val, task, *path, path_cost(*path)};
  });
  ExpertDataset out;
  std::size_t k = 0;
  for (int v = 0; v < 2; ++v) {
    const auto& set = v ? m.validation : m.train;
    for (int w = 0; w < static_cast<int>(set.size()); ++w) {
      int solved = 0;
      for (int p = 0; p < m.pairs_per_workspace; ++p, ++k) {
        if (results[k]) {
          out.paths.push_back(std::move(*results[k]));
          ++solved;
        } else {
          ++out.dropped;
        }
      }
      if (m.pairs_per_workspace > 0 && 2 * solved < m.pairs_per_workspace) {
        out.warnings.push_back({w, v == 1, solved, m.pairs_per_workspace});
      }
    }
  }
  return out;
}

std::vector<TrainingExample> explode_examples(const std::vector<ExpertPath>& dataset,
                                              const ModelConfig& model_cfg) {
  std::vector<TrainingExample> out;
  for (const auto& ep : dataset) {
    const auto& ws = ep.task->workspace();
    const EnvVector env = encoder_input(model_cfg, *ep.task);
    const State goal = normalize_state(ws, ep.task->goal_center());
    std::vector<State> norm;
    for (const auto& s : ep.path.states) norm.push_back(normalize_state(ws, s));
    for (std::size_t k = 0; k + 1 < norm.size(); ++k) {
      TrainingExample ex;
      ex.env = env;
      ex.goal = goal;
      ex.path_prefix.assign(norm.begin(), norm.begin() + static_cast<long>(k) + 1);
      ex.target = norm[k + 1];
      ex.workspace = ep.workspace;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

namespace {

nlohmann::json state_json(const State& s) {
  return std::vector<double>(s.data(), s.data() + s.size());
}

State json_state(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const State>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json example_json(const TrainingExample& ex, bool val) {
  nlohmann::json prefix = nlohmann::json::array();
  for (const auto& s : ex.path_prefix) prefix.push_back(state_json(s));
  return {{"split", val ? "val" : "train"}, {"workspace", ex.workspace},
          {"env", ex.env.values},           {"goal", state_json(ex.goal)},
          {"prefix", prefix},               {"target", state_json(ex.target)}};
}

}  // namespace

void write_dataset(std::ostream& os, const std::vector<TrainingExample>& train,
                   const std::vector<TrainingExample>& val, const nlohmann::json& header) {
  nlohmann::json h = header;
  h["record"] = "manifest";
  h["train_examples"] = train.size();
  h["val_examples"] = val.size();
  os << h.dump() << '\n';
  for (const auto& ex : train) os << example_json(ex, false).dump() << '\n';
  for (const auto& ex : val) os << example_json(ex, true).dump() << '\n';
}

LoadedDataset read_dataset(std::istream& is) {
  LoadedDataset out;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("record", "") != "manifest") throw InvalidInput("missing manifest header");
        out.dim = j.at("dim").get<int>();
        have_header = true;
        continue;
      }
      TrainingExample ex;
      ex.env.values = j.at("env").get<std::vector<double>>();
      ex.goal = json_state(j.at("goal"));
      for (const auto& s : j.at("prefix")) ex.path_prefix.push_back(json_state(s));
      ex.target = json_state(j.at("target"));
      ex.workspace = j.at("workspace").get<int>();
      if (ex.path_prefix.empty() || ex.goal.size() != out.dim || ex.target.size() != out.dim) {
        throw InvalidInput("malformed example");
      }
      (j.at("split").get<std::string>() == "val" ? out.val : out.train).push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("dataset line " + std::to_string(lineno) + ": " + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw InvalidInput("dataset is empty");
  return out;
}

LossParts example_loss(const ModelBundle& model, const TrainingExample& ex,
                       const EiseLossWeights& w, nn::Gradients* grads) {
  nn::Tape tape(grads != nullptr);
  const auto& cfg = model.config();
  nn::Var env = tape.constant(nn::Tensor({1, ex.env.values.size()}, ex.env.values));
  nn::Var sei = eise::encode(tape, model, env);
  nn::Var recon = eise::decode(tape, model, sei);
  const TokenInputs in = make_token_inputs(ex.goal, ex.path_prefix, cfg.max_seq_len);
  auto fwd = mpt::forward(tape, model, sei, in);
  nn::Var target = tape.constant(
      nn::Tensor({1, static_cast<std::size_t>(ex.target.size())},
                 std::vector<double>(ex.target.data(), ex.target.data() + ex.target.size())));
  nn::Var l_rec = nn::mse(env, recon);
  nn::Var l_sem = nn::mse(target, fwd.prediction);
  nn::Var total = nn::weighted_sum({l_rec, l_sem}, {w.lambda, w.eta});
  if (grads) tape.backward(total, grads);
  return {total.value()[0], l_rec.value()[0], l_sem.value()[0]};
}

double dataset_loss(const ModelBundle& model, const std::vector<TrainingExample>& set,
                    const EiseLossWeights& w) {
  if (set.empty()) return 0.0;
  double s = 0.0;
  for (const auto& ex : set) s += example_loss(model, ex, w, nullptr).total;
  return s / static_cast<double>(set.size());
}

TrainResult train(ModelBundle initial, const std::vector<TrainingExample>& examples,
                  const std::vector<TrainingExample>& val_examples, const TrainConfig& tcfg,
                  const EpochCallback& on_epoch) {
  if (examples.empty() || val_examples.empty()) {
    throw InvalidInput("train: training and validation sets must be non-empty");
  }
  if (tcfg.batch_size == 0 || tcfg.max_epochs <= 0) {
    throw InvalidInput("train: batch_size and max_epochs must be positive");
  }
  const auto t0 = std::chrono::steady_clock::now();
  ModelBundle model = std::move(initial);
  nn::LrSchedule sched = tcfg.schedule;
  nn::Adam adam(model.params(), sched.lr(), tcfg.beta1, tcfg.beta2, tcfg.eps);
  TrainResult result{model, model, {}, std::numeric_limits<double>::infinity()};
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(tcfg.seed);
  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size, ++batch_id) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      nn::Gradients grads = model.params().zero_gradients();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        batch_loss += example_loss(model, examples[order[i]], tcfg.weights, &grads).total;
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", batch " << batch_id
            << ", lr " << adam.lr();
        throw TrainingError(msg.str());
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads)
        for (auto& v : g.values()) v *= inv;
      adam.step(model.params(), grads);
      epoch_loss += batch_loss;
    }
    TrainLogRow row;
    row.epoch = epoch;
    row.train_loss = epoch_loss / static_cast<double>(examples.size());
    row.val_loss = dataset_loss(model, val_examples, tcfg.weights);
    row.lr = adam.lr();
    if (!std::isfinite(row.val_loss)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    if (row.val_loss < result.best_val) {
      result.best_val = row.val_loss;
      result.best = model;
    }
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
    adam.set_lr(sched.step(row.val_loss));
    if (tcfg.time_budget &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >=
            *tcfg.time_budget) {
      break;
    }
  }
  result.last = std::move(model);
  return result;
}

void write_train_log(std::ostream& os, const std::vector<TrainLogRow>& log) {
  os << "epoch,train_loss,val_loss,lr\n" << std::setprecision(17);
  for (const auto& r : log) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
  }
}

}  // namespace temp
