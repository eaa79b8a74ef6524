#include "temp/temp_planner.hpp"

#include "temp/eise.hpp"

namespace temp {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::ApFailed: return "AP_failed";
    case Phase::ApSolved: return "AP_solved";
    case Phase::CpRefined: return "CP_refined";
  }
  return "?";
}

MptGuide::MptGuide(const ModelBundle& model, const PlanningTask& task, const TempConfig& cfg)
    : model_(model), cfg_(cfg) {
  if (model.config().dim != task.dim()) {
    throw InvalidInput("model dimension " + std::to_string(model.config().dim) +
                       " does not match task dimension " + std::to_string(task.dim()));
  }
  // S is computed once per task.
  sei_ = eise::encode(model_, encoder_input(model_.config(), task));
}

State MptGuide::sample(const PlanningTask& task, const Path& sigma_prime, Rng& rng) {
  auto pred = mpt_predict(model_, sei_, task, sigma_prime);
  attention_.push_back(extract_attention(pred.attention, pred.roles, attention_.size(),
                                         cfg_.attention_layer, cfg_.hpd_aggregation));
  State x = pred.x_hat;
  if (cfg_.noise_fraction > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg_.noise_fraction * task.workspace().span());
    for (int i = 0; i < x.size(); ++i) x[i] += noise(rng);
  }
  return task.workspace().clamp(x);
}

Path sigma_prime_update(const PlanningTree& tree, int new_index) {
  return tree.path_to(new_index);
}

namespace {

PlanOutcome run_ap(RrtStarSearch& search, const TempConfig& cfg, GuideSampler& guide) {
  const auto& task = search.task();
  PlanOutcome out{std::nullopt, search.tree(), {}, {}, {}, Phase::ApFailed};
  Path sigma_prime{{task.x_init()}};
  for (int i = 0; i < cfg.planner.max_iters && !search.out_of_time(); ++i) {
    search.count_iteration();
    auto ext = search.extend_toward(guide.sample(task, sigma_prime, search.rng()));
    if (ext.collided) {
      search.count_failure();
      ++out.fallback_entries;
      for (int r = 0; r < cfg.max_fallback_retries && ext.collided; ++r) {
        ext = search.extend_toward(sample_uniform(task.workspace(), search.rng()));
        if (ext.collided) {
          search.count_failure();
          ++out.fallback_retries_failed;
        }
      }
      if (ext.collided) continue;
    }
    const int idx = search.insert(ext.x_new);
    if (idx < 0) continue;
    sigma_prime = sigma_prime_update(search.tree(), idx);
    if (in_goal(task, ext.x_new)) {
      out.path = sigma_prime;
      out.j_best = path_cost(sigma_prime);
      out.phase = Phase::ApSolved;
      break;
    }
  }
  out.metrics = search.finish();
  out.ap_metrics = out.metrics;
  out.tree = search.tree();
  return out;
}

}  // namespace

PlanOutcome temp_ap(const PlanningTask& task, const TempConfig& cfg, GuideSampler& guide) {
  RrtStarSearch search(task, cfg.planner, "TEMP");
  return run_ap(search, cfg, guide);
}

PlanOutcome temp_ap(const PlanningTask& task, const TempConfig& cfg, const ModelBundle& model) {
  MptGuide guide(model, task, cfg);
  auto out = temp_ap(task, cfg, guide);
  out.attention = guide.attention();
  return out;
}

PlanOutcome temp_full(const PlanningTask& task, const TempConfig& cfg, GuideSampler& guide) {
  RrtStarSearch search(task, cfg.planner, "TEMP");
  PlanOutcome out = run_ap(search, cfg, guide);
  if (out.phase != Phase::ApSolved || cfg.cp_iters <= 0) return out;

  search.set_time_budget(cfg.cp_time_budget);
  UniformSampler uniform(cfg.planner.goal_bias);
  run_rrt_star_loop(search, uniform, cfg.cp_iters, cfg.cp_informed);
  out.path = search.best_path();
  out.j_best = search.best_cost();
  out.phase = Phase::CpRefined;
  out.metrics = search.finish();
  out.tree = search.tree();
  return out;
}

PlanOutcome temp_full(const PlanningTask& task, const TempConfig& cfg, const ModelBundle& model) {
  MptGuide guide(model, task, cfg);
  auto out = temp_full(task, cfg, guide);
  out.attention = guide.attention();
  return out;
}

}  // namespace temp
