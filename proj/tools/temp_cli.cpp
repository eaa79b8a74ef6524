// temp: dataset generation, training, planning and benchmarking front end.

#include "temp/bench.hpp"
#include "temp/config.hpp"
#include "temp/io.hpp"
#include "temp/pipeline.hpp"
#include "temp/temp_planner.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace temp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> dim;
  std::string planner;
  std::string task;
  std::string model;
  std::string data;
  std::string tasks;
};

AppConfig resolve_config(const CommonOptions& o) {
  AppConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.dim) {
    if (*o.dim < 1) throw ConfigError("--dim must be >= 1");
    c.set_dim(*o.dim);
  }
  return c;
}

fs::path out_path(const CommonOptions& o, const std::string& name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

fs::path or_default(const std::string& given, const CommonOptions& o, const std::string& name) {
  return given.empty() ? fs::path(o.out_dir) / name : fs::path(given);
}

std::vector<std::shared_ptr<const Workspace>> workspaces_from(const JsonDocument& doc,
                                                              const std::string& key) {
  std::vector<std::shared_ptr<const Workspace>> out;
  const auto& arr = doc.root.at(key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(workspace_from_json(doc, "/" + key + "/" + std::to_string(i)));
  }
  return out;
}

int cmd_gen_data(const CommonOptions& o) {
  const AppConfig c = resolve_config(o);
  Rng rng(c.seed);
  const int total = c.train_workspaces + c.val_workspaces + c.test_workspaces;
  std::cerr << "generating " << total << " workspaces (dim " << c.scene.dim << ")\n";
  auto all = generate_workspaces(c.scene, total, rng);

  DatasetManifest m;
  m.train.assign(all.begin(), all.begin() + c.train_workspaces);
  m.validation.assign(all.begin() + c.train_workspaces,
                      all.begin() + c.train_workspaces + c.val_workspaces);
  const std::vector<std::shared_ptr<const Workspace>> test(
      all.begin() + c.train_workspaces + c.val_workspaces, all.end());
  m.pairs_per_workspace = c.pairs_per_workspace;
  m.expert = c.expert;
  m.refine_iters = c.refine_iters;
  m.tasks = c.tasks;
  m.seed = derive_seed(c.seed, 1);
  m.threads = c.threads;

  const ExpertDataset ds = harvest_expert_paths(m);
  for (const auto& w : ds.warnings) {
    std::cerr << "warning: " << (w.validation ? "validation" : "train") << " workspace "
              << w.workspace << " solved " << w.solved << "/" << w.attempted << " pairs\n";
  }
  std::vector<ExpertPath> train_paths, val_paths;
  for (const auto& p : ds.paths) (p.validation ? val_paths : train_paths).push_back(p);
  const auto train_ex = explode_examples(train_paths, c.model);
  const auto val_ex = explode_examples(val_paths, c.model);

  json ws_json = {{"train", json::array()}, {"validation", json::array()}, {"test", json::array()}};
  for (const auto& w : m.train) ws_json["train"].push_back(workspace_to_json(*w));
  for (const auto& w : m.validation) ws_json["validation"].push_back(workspace_to_json(*w));
  for (const auto& w : test) ws_json["test"].push_back(workspace_to_json(*w));
  write_text_file(out_path(o, "workspaces.json"), ws_json.dump(2) + "\n");

  {
    std::ofstream os(out_path(o, "dataset.ndjson"));
    if (!os) throw IoError("cannot write " + out_path(o, "dataset.ndjson").string());
    write_dataset(os, train_ex, val_ex,
                  {{"dim", c.scene.dim},
                   {"seed", c.seed},
                   {"max_obstacles", c.model.max_obstacles},
                   {"task_conditioning", c.model.eise_task_conditioning},
                   {"expert_paths", ds.paths.size()},
                   {"dropped_pairs", ds.dropped}});
  }

  // Held-out benchmark tasks, labelled by their expert cost.
  json tasks = json::array();
  for (std::size_t w = 0; w < test.size(); ++w) {
    for (int k = 0; k < c.test_tasks_per_workspace; ++k) {
      Rng trng(derive_seed(c.seed, 2 + w, static_cast<std::uint64_t>(k)));
      const std::string id = "test" + std::to_string(w) + "_" + std::to_string(k);
      auto task = generate_task(test[w], c.tasks, trng, id);
      PlannerConfig pc = c.expert;
      pc.rng_seed = trng();
      const auto expert = expert_plan(task, pc, c.refine_iters);
      const double cost = expert ? path_cost(*expert) : std::numeric_limits<double>::infinity();
      tasks.push_back({{"task", task_to_json(task)},
                       {"difficulty", label_difficulty(task, cost, c.difficulty_ratio)},
                       {"expert_cost", std::isfinite(cost) ? json(cost) : json(nullptr)}});
    }
  }
  write_text_file(out_path(o, "tasks.json"), json{{"tasks", tasks}}.dump(2) + "\n");

  std::cout << json{{"train_examples", train_ex.size()},
                    {"val_examples", val_ex.size()},
                    {"expert_paths", ds.paths.size()},
                    {"dropped_pairs", ds.dropped},
                    {"warnings", ds.warnings.size()},
                    {"test_tasks", tasks.size()}}
                   .dump()
            << "\n";
  return kExitOk;
}

int cmd_train(const CommonOptions& o) {
  AppConfig c = resolve_config(o);
  const fs::path data = or_default(o.data, o, "dataset.ndjson");
  std::ifstream in(data);
  if (!in) throw IoError("cannot read " + data.string());
  const LoadedDataset ds = read_dataset(in);
  if (ds.dim != c.model.dim) {
    if (o.dim) throw ConfigError("--dim disagrees with the dataset dimension");
    c.set_dim(ds.dim);
  }
  c.train.seed = derive_seed(c.seed, 3);
  ModelBundle init = ModelBundle::create(c.model, derive_seed(c.seed, 4));
  auto progress = [](const TrainLogRow& r) {
    std::cerr << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss
              << " lr " << r.lr << "\n";
  };
  const TrainResult res = train(std::move(init), ds.train, ds.val, c.train, progress);
  res.best.save(out_path(o, "model.ckpt").string());
  std::ofstream log(out_path(o, "train_log.csv"));
  write_train_log(log, res.log);
  std::cout << json{{"epochs", res.log.size()}, {"best_val", res.best_val}}.dump() << "\n";
  return kExitOk;
}

int cmd_plan(const CommonOptions& o) {
  const AppConfig c = resolve_config(o);
  if (o.task.empty()) throw ConfigError("plan requires --task");
  const auto task = load_task(o.task);
  const std::string planner = o.planner.empty() ? kTemp : o.planner;
  json result;
  if (planner == kTemp) {
    const ModelBundle model = ModelBundle::load(or_default(o.model, o, "model.ckpt").string());
    if (model.config().dim != task->dim()) throw ConfigError("model dimension does not match task");
    TempConfig tc = c.temp;
    tc.planner.rng_seed = c.seed;
    const PlanOutcome out = temp_full(*task, tc, model);
    std::string ref;
    if (out.attention.size() >= 2) {
      const std::string id = task->id().empty() ? "task" : task->id();
      const fs::path p = out_path(o, "attention_" + id + ".csv");
      std::ostringstream csv;
      write_attention_csv(csv, normalize_attention(out.attention));
      write_text_file(p, csv.str());
      ref = p.string();
    }
    result = outcome_to_json(out, task->id(), ref);
    std::cout << result.dump(2) << "\n";
    return out.path ? kExitOk : kExitFailure;
  }
  if (planner != kRrtStar && planner != kIrrtStar) {
    throw ConfigError("unknown planner '" + planner + "'");
  }
  PlannerConfig pc = c.planner;
  pc.rng_seed = c.seed;
  const PlanResult r = planner == kRrtStar ? rrt_star(*task, pc) : irrt_star(*task, pc);
  result = metrics_to_json(r.metrics);
  result["path"] = r.path ? path_to_json(*r.path) : json(nullptr);
  std::cout << result.dump(2) << "\n";
  return r.path ? kExitOk : kExitFailure;
}

std::vector<double> linear_grid(double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(hi * i / n);
  return g;
}

int cmd_bench(const CommonOptions& o) {
  const AppConfig c = resolve_config(o);
  const JsonDocument tdoc = read_json_document(or_default(o.tasks, o, "tasks.json"));
  BenchmarkSuite suite;
  const auto& arr = tdoc.root.at("tasks");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = "/tasks/" + std::to_string(i);
    suite.tasks.push_back({task_from_json(tdoc, p + "/task"),
                           arr[i].value("difficulty", std::string("easy"))});
  }
  const fs::path ws_file = fs::path(o.out_dir) / "workspaces.json";
  if (fs::exists(ws_file)) {
    const JsonDocument wdoc = read_json_document(ws_file);
    suite.training_workspaces = workspaces_from(wdoc, "train");
  }
  suite.planners = c.planners;
  if (!o.planner.empty()) {
    suite.planners.clear();
    std::stringstream ss(o.planner);
    for (std::string p; std::getline(ss, p, ',');) suite.planners.push_back(p);
  }
  suite.repetitions = c.repetitions;
  suite.seed = c.seed;
  suite.tau = c.tau;
  suite.baseline = c.planner;
  suite.temp = c.temp;
  suite.matched_cost = c.matched_cost;
  suite.threads = c.threads;

  std::optional<ModelBundle> model;
  if (std::find(suite.planners.begin(), suite.planners.end(), kTemp) != suite.planners.end()) {
    model = ModelBundle::load(or_default(o.model, o, "model.ckpt").string());
  }
  const SuiteResult res = run_suite(suite, model ? &*model : nullptr);

  double t_max = 0.0, n_max = 1.0;
  for (const auto& r : res.records) {
    t_max = std::max(t_max, r.time_s);
    n_max = std::max(n_max, static_cast<double>(r.nodes));
  }
  BenchOutputs outs;
  outs.records = res.records;
  outs.success = success_curve(res.records, linear_grid(t_max, 50));
  outs.cost = cost_vs_nodes(res.records, linear_grid(n_max, 50), c.penalty);
  for (const auto& [idx, episode] : res.attention) {
    if (episode.size() >= 2) {
      outs.attention = normalize_attention(episode);
      break;
    }
  }
  for (const auto& p : emit_outputs(o.out_dir, outs)) std::cerr << "wrote " << p.string() << "\n";

  json summary = json::array();
  for (const auto& r : summarize(res.records)) {
    summary.push_back({{"planner", r.planner},
                       {"difficulty", r.difficulty},
                       {"runs", r.runs},
                       {"success_rate", r.success_rate},
                       {"time_mean", r.time_mean},
                       {"nodes_mean", r.nodes_mean},
                       {"failures_mean", r.failures_mean}});
  }
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_attn(const CommonOptions& o) {
  const AppConfig c = resolve_config(o);
  if (o.task.empty()) throw ConfigError("attn requires --task");
  const auto task = load_task(o.task);
  const ModelBundle model = ModelBundle::load(or_default(o.model, o, "model.ckpt").string());
  TempConfig tc = c.temp;
  tc.planner.rng_seed = c.seed;
  const PlanOutcome out = temp_ap(*task, tc, model);
  if (out.attention.size() < 2) {
    std::cerr << "episode too short for attention normalization (" << out.attention.size()
              << " steps)\n";
    return kExitFailure;
  }
  const auto cats = normalize_attention(out.attention);
  std::ostringstream csv;
  write_attention_csv(csv, cats);
  write_text_file(out_path(o, "attention.csv"), csv.str());
  write_text_file(out_path(o, "attention.svg"), attention_svg(cats));
  std::cout << json{{"task_id", task->id()},
                    {"phase_reached", phase_name(out.phase)},
                    {"steps", out.attention.size()}}
                   .dump()
            << "\n";
  return out.path ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TEMP motion planning toolkit"};
  app.require_subcommand(1);
  CommonOptions o;
  std::uint64_t seed = 0;
  int dim = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Overrides the config seed");
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--dim", dim, "Overrides the config dimension");
  };
  auto* gen = app.add_subcommand("gen-data", "Generate workspaces, expert paths and examples");
  auto* trn = app.add_subcommand("train", "Train EISE and MPT on a dataset");
  auto* pln = app.add_subcommand("plan", "Plan one task and print the outcome as JSON");
  auto* bch = app.add_subcommand("bench", "Run the benchmark suite");
  auto* atn = app.add_subcommand("attn", "Export per-step attention for one task");
  for (auto* s : {gen, trn, pln, bch, atn}) add_common(s);
  trn->add_option("--data", o.data, "Dataset (default <out-dir>/dataset.ndjson)");
  for (auto* s : {pln, bch, atn}) {
    s->add_option("--model", o.model, "Checkpoint (default <out-dir>/model.ckpt)");
  }
  for (auto* s : {pln, bch}) s->add_option("--planner", o.planner, "TEMP, RRT* or IRRT*");
  for (auto* s : {pln, atn}) s->add_option("--task", o.task, "Task JSON file");
  bch->add_option("--tasks", o.tasks, "Task list (default <out-dir>/tasks.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  for (auto* s : {gen, trn, pln, bch, atn}) {
    if (s->count("--seed")) o.seed = seed;
    if (s->count("--dim")) o.dim = dim;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*trn) return cmd_train(o);
    if (*pln) return cmd_plan(o);
    if (*bch) return cmd_bench(o);
    if (*atn) return cmd_attn(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    // Unreadable inputs and unwritable outputs are invocation errors.
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
