#include "temp/config.hpp"

#include <set>

namespace temp {

void AppConfig::set_dim(int d) {
  scene.dim = d;
  model.dim = d;
}

namespace {

/// Typed access to one JSON object; remembers which keys were consumed so
/// leftovers can be reported.
class Section {
 public:
  Section(const JsonDocument& doc, std::string pointer) : doc_(doc), ptr_(std::move(pointer)) {
    const json::json_pointer jp(ptr_);
    if (doc_.root.contains(jp)) {
      node_ = &doc_.root.at(jp);
      if (!node_->is_object()) fail(ptr_, "section must be an object");
    }
  }

  bool present() const { return node_ != nullptr; }
  void allow(const std::string& key) { seen_.insert(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    const json& j = node_->at(key);
    const std::string p = ptr_ + "/" + key;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) fail(p, key + " must be a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) fail(p, key + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (j.get<long long>() < 0 && !j.is_number_unsigned()) fail(p, key + " must be >= 0");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!j.is_number()) fail(p, key + " must be a number");
      }
      out = j.get<T>();
    } catch (const json::exception& e) {
      fail(p, key + ": " + e.what());
    }
  }

  template <class T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!node_ || !node_->contains(key)) return;
    if (node_->at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  void finish() const {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it) {
      if (!seen_.count(it.key())) fail(ptr_ + "/" + it.key(), "unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& p, const std::string& msg) const {
    try {
      doc_.fail(p, msg);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
  }

 private:
  const JsonDocument& doc_;
  std::string ptr_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

void read_planner(Section& s, PlannerConfig& p) {
  s.get("step_size", p.step_size);
  s.get("max_iters", p.max_iters);
  s.get("near_gamma", p.near_gamma);
  s.get("goal_bias", p.goal_bias);
  s.get_optional("time_budget", p.time_budget);
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

}  // namespace

AppConfig parse_config(const JsonDocument& doc) {
  AppConfig c;
  Section root(doc, "");
  int dim = c.scene.dim;
  root.get("dim", dim);
  root.get("seed", c.seed);
  root.get("threads", c.threads);
  c.set_dim(dim);
  for (const char* k :
       {"scene", "tasks", "dataset", "model", "train", "planner", "temp", "bench"}) {
    root.allow(k);
  }
  root.finish();

  Section scene(doc, "/scene");
  scene.get("low", c.scene.low);
  scene.get("high", c.scene.high);
  scene.get("min_obstacles", c.scene.min_obstacles);
  scene.get("max_obstacles", c.scene.max_obstacles);
  scene.get("min_half_extent", c.scene.min_half_extent);
  scene.get("max_half_extent", c.scene.max_half_extent);
  scene.get("max_attempts", c.scene.max_attempts);
  scene.get("probe_iters", c.scene.probe_iters);
  scene.get("probe_step", c.scene.probe_step);
  scene.finish();

  Section tasks(doc, "/tasks");
  tasks.get("goal_radius", c.tasks.goal_radius);
  tasks.get("min_distance_fraction", c.tasks.min_distance_fraction);
  tasks.get("max_attempts", c.tasks.max_attempts);
  tasks.finish();

  Section ds(doc, "/dataset");
  ds.get("train_workspaces", c.train_workspaces);
  ds.get("val_workspaces", c.val_workspaces);
  ds.get("pairs_per_workspace", c.pairs_per_workspace);
  ds.get("refine_iters", c.refine_iters);
  read_planner(ds, c.expert);
  ds.finish();

  Section model(doc, "/model");
  model.get("max_obstacles", c.model.max_obstacles);
  model.get("d_hidden", c.model.d_hidden);
  model.get("eise_two_layer", c.model.eise_two_layer);
  model.get("eise_task_conditioning", c.model.eise_task_conditioning);
  model.get("max_seq_len", c.model.max_seq_len);
  model.get("d_model", c.model.attn.d_model);
  model.get("n_heads", c.model.attn.n_heads);
  model.get("n_layers", c.model.attn.n_layers);
  model.get("d_ffn", c.model.attn.d_ffn);
  model.finish();

  Section tr(doc, "/train");
  tr.get("lambda", c.train.weights.lambda);
  tr.get("eta", c.train.weights.eta);
  tr.get("beta1", c.train.beta1);
  tr.get("beta2", c.train.beta2);
  tr.get("eps", c.train.eps);
  tr.get("lr", c.train.schedule.initial_lr);
  tr.get("lr_factor", c.train.schedule.factor);
  tr.get("lr_patience", c.train.schedule.patience_epochs);
  tr.get("lr_min_improvement", c.train.schedule.min_improvement);
  tr.get("lr_floor", c.train.schedule.floor);
  tr.get("batch_size", c.train.batch_size);
  tr.get("max_epochs", c.train.max_epochs);
  tr.get_optional("time_budget", c.train.time_budget);
  tr.finish();

  Section pl(doc, "/planner");
  read_planner(pl, c.planner);
  pl.finish();

  Section tp(doc, "/temp");
  read_planner(tp, c.temp.planner);
  tp.get("cp_iters", c.temp.cp_iters);
  tp.get_optional("cp_time_budget", c.temp.cp_time_budget);
  tp.get("cp_informed", c.temp.cp_informed);
  tp.get("noise_fraction", c.temp.noise_fraction);
  tp.get("max_fallback_retries", c.temp.max_fallback_retries);
  tp.get("attention_layer", c.temp.attention_layer);
  std::string hpd = "mean";
  tp.get("hpd_aggregation", hpd);
  tp.finish();
  check(hpd == "mean" || hpd == "sum", "temp.hpd_aggregation must be \"mean\" or \"sum\"");
  c.temp.hpd_aggregation = hpd == "sum" ? HpdAggregation::Sum : HpdAggregation::Mean;

  Section b(doc, "/bench");
  b.get("test_workspaces", c.test_workspaces);
  b.get("test_tasks_per_workspace", c.test_tasks_per_workspace);
  b.get("repetitions", c.repetitions);
  b.get("tau", c.tau);
  b.get("matched_cost", c.matched_cost);
  b.get("planners", c.planners);
  b.get("difficulty_ratio", c.difficulty_ratio);
  b.get("penalty", c.penalty);
  b.finish();

  check(c.scene.dim >= 1, "dim must be >= 1");
  check(c.train_workspaces >= 1 && c.val_workspaces >= 1, "workspace counts must be positive");
  check(c.pairs_per_workspace >= 1 && c.refine_iters >= 0, "dataset counts must be positive");
  check(c.test_workspaces >= 1 && c.test_tasks_per_workspace >= 1 && c.repetitions >= 1,
        "bench counts must be positive");
  check(c.tau >= 0.0, "bench.tau must be >= 0");
  check(c.train.batch_size >= 1 && c.train.max_epochs >= 1, "train counts must be positive");
  for (const auto* p : {&c.expert, &c.planner, &c.temp.planner}) {
    check(p->step_size > 0.0 && p->max_iters >= 1 && p->near_gamma > 0.0,
          "planner step_size, max_iters and near_gamma must be positive");
    check(p->goal_bias >= 0.0 && p->goal_bias <= 1.0, "goal_bias must lie in [0,1]");
  }
  for (const auto& p : c.planners) {
    check(p == kTemp || p == kRrtStar || p == kIrrtStar, "unknown planner '" + p + "'");
  }
  try {
    c.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_json_document(path));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace temp
