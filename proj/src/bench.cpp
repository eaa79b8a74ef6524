#include "temp/bench.hpp"

#include "temp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

namespace temp {

bool eq7_accepts(double baseline_cost, double temp_cost, double tau) {
  return baseline_cost <= (1.0 + tau) * temp_cost;
}

std::string label_difficulty(const PlanningTask& task, double expert_cost, double ratio) {
  const double straight = (task.goal_center() - task.x_init()).norm();
  return expert_cost > ratio * straight ? "challenging" : "easy";
}

namespace {

bool same_workspace(const Workspace& a, const Workspace& b) {
  if (a.dim() != b.dim() || a.obstacles().size() != b.obstacles().size()) return false;
  for (int i = 0; i < a.dim(); ++i) {
    if (a.bounds()[i].low != b.bounds()[i].low || a.bounds()[i].high != b.bounds()[i].high) {
      return false;
    }
  }
  for (std::size_t k = 0; k < a.obstacles().size(); ++k) {
    if (a.obstacles()[k].center != b.obstacles()[k].center ||
        a.obstacles()[k].half_extent != b.obstacles()[k].half_extent) {
      return false;
    }
  }
  return true;
}

void validate_suite(const BenchmarkSuite& suite, const ModelBundle* model) {
  if (!(suite.tau >= 0.0)) throw InvalidInput("suite: tau must be >= 0");
  if (suite.repetitions < 1) throw InvalidInput("suite: repetitions must be >= 1");
  for (const auto& p : suite.planners) {
    if (p != kTemp && p != kRrtStar && p != kIrrtStar) {
      throw InvalidInput("suite: unknown planner '" + p + "'");
    }
    if (p == kTemp && model == nullptr) throw InvalidInput("suite: TEMP requires a model");
  }
  for (const auto& bt : suite.tasks) {
    if (!bt.task) throw InvalidInput("suite: null task");
    if (model && bt.task->dim() != model->config().dim) {
      throw InvalidInput("suite: task " + bt.task->id() + " does not match the model dimension");
    }
    for (const auto& ws : suite.training_workspaces) {
      if (same_workspace(bt.task->workspace(), *ws)) {
        throw InvalidInput("suite: task " + bt.task->id() + " uses a training workspace");
      }
    }
  }
}

struct JobOutput {
  std::vector<MetricsRecord> records;
  std::vector<std::optional<Path>> paths;
  std::vector<AttentionEntry> attention;
  int temp_slot = -1;
};

}  // namespace

SuiteResult run_suite(const BenchmarkSuite& suite, const ModelBundle* model) {
  validate_suite(suite, model);
  const bool with_temp =
      std::find(suite.planners.begin(), suite.planners.end(), kTemp) != suite.planners.end();
  const std::size_t reps = static_cast<std::size_t>(suite.repetitions);
  std::vector<JobOutput> jobs(suite.tasks.size() * reps);

  parallel_for(jobs.size(), suite.threads, [&](std::size_t j) {
    const std::size_t t = j / reps;
    const std::size_t r = j % reps;
    const BenchTask& bt = suite.tasks[t];
    const PlanningTask& task = *bt.task;
    const std::uint64_t seed = derive_seed(suite.seed, t, r);
    JobOutput& out = jobs[j];

    double j_temp = std::numeric_limits<double>::infinity();
    if (with_temp) {
      TempConfig tc = suite.temp;
      tc.planner.rng_seed = seed;
      tc.cp_iters = 0;
      PlanOutcome po = temp_ap(task, tc, *model);
      MetricsRecord rec = po.ap_metrics;
      rec.seed = seed;
      rec.difficulty = bt.difficulty;
      rec.tau = suite.tau;
      j_temp = po.j_best;
      out.temp_slot = static_cast<int>(out.records.size());
      out.records.push_back(std::move(rec));
      out.paths.push_back(po.path);
      out.attention = std::move(po.attention);
    }
    const bool temp_solved = std::isfinite(j_temp);

    for (const auto& name : suite.planners) {
      if (name == kTemp) continue;
      PlannerConfig pc = suite.baseline;
      pc.rng_seed = seed;
      pc.target_cost.reset();
      const bool matched = suite.matched_cost && with_temp;
      if (matched) {
        if (temp_solved) {
          pc.target_cost = (1.0 + suite.tau) * j_temp;
        } else {
          pc.stop_on_first_solution = true;
        }
      }
      PlanResult res = name == kRrtStar ? rrt_star(task, pc) : irrt_star(task, pc);
      MetricsRecord rec = std::move(res.metrics);
      std::optional<Path> path = std::move(res.path);
      rec.seed = seed;
      rec.difficulty = bt.difficulty;
      rec.tau = suite.tau;
      if (matched && !temp_solved) rec.flagged = true;
      if (matched && temp_solved && rec.success && !eq7_accepts(rec.cost, j_temp, suite.tau)) {
        // Budget ran out before the tolerance was met: not a matched solution.
        rec.success = false;
        rec.cost = std::numeric_limits<double>::infinity();
        path.reset();
      }
      out.records.push_back(std::move(rec));
      out.paths.push_back(std::move(path));
    }
    if (with_temp && !temp_solved) out.records[out.temp_slot].flagged = true;
  });

  SuiteResult result;
  for (auto& job : jobs) {
    for (std::size_t k = 0; k < job.records.size(); ++k) {
      if (static_cast<int>(k) == job.temp_slot) {
        result.attention[result.records.size()] = std::move(job.attention);
      }
      result.records.push_back(std::move(job.records[k]));
      result.paths.push_back(std::move(job.paths[k]));
    }
  }
  return result;
}

std::vector<Curve> success_curve(const std::vector<MetricsRecord>& records,
                                 const std::vector<double>& time_grid) {
  std::map<std::string, std::vector<const MetricsRecord*>> by_planner;
  for (const auto& r : records) by_planner[r.planner].push_back(&r);
  std::vector<Curve> out;
  for (const auto& [planner, rs] : by_planner) {
    Curve c{planner, time_grid, {}};
    for (double t : time_grid) {
      std::size_t solved = 0;
      for (const auto* r : rs) {
        if (r->success && r->time_s <= t) ++solved;
      }
      c.y.push_back(static_cast<double>(solved) / static_cast<double>(rs.size()));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Curve> cost_vs_nodes(const std::vector<MetricsRecord>& records,
                                 const std::vector<double>& node_grid, double penalty) {
  std::map<std::string, double> task_max;
  for (const auto& r : records) {
    const double lowest = -std::numeric_limits<double>::infinity();
    double& m = task_max.try_emplace(r.task_id, lowest).first->second;
    for (const auto& tp : r.trace) m = std::max(m, tp.cost);
    if (std::isfinite(r.cost)) m = std::max(m, r.cost);
  }
  std::map<std::string, std::vector<const MetricsRecord*>> by_planner;
  for (const auto& r : records) {
    if (std::isfinite(task_max[r.task_id])) by_planner[r.planner].push_back(&r);
  }
  std::vector<Curve> out;
  for (const auto& [planner, rs] : by_planner) {
    Curve c{planner, node_grid, {}};
    for (double n : node_grid) {
      double sum = 0.0;
      for (const auto* r : rs) {
        double best = penalty * task_max[r->task_id];
        for (const auto& tp : r->trace) {
          if (static_cast<double>(tp.nodes) <= n) best = std::min(best, tp.cost);
        }
        sum += best;
      }
      c.y.push_back(sum / static_cast<double>(rs.size()));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records) groups[{r.planner, r.difficulty}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, rs] : groups) {
    SummaryRow row;
    row.planner = key.first;
    row.difficulty = key.second;
    row.runs = rs.size();
    double ok = 0, t = 0, n = 0, f = 0;
    for (const auto* r : rs) {
      ok += r->success ? 1.0 : 0.0;
      t += r->time_s;
      n += static_cast<double>(r->nodes);
      f += static_cast<double>(r->sampling_failures);
    }
    const double k = static_cast<double>(rs.size());
    row.success_rate = ok / k;
    row.time_mean = t / k;
    row.nodes_mean = n / k;
    row.failures_mean = f / k;
    out.push_back(row);
  }
  return out;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame2d {
  double w = 640, h = 400, left = 70, right = 150, top = 40, bottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
  double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

void open_svg(std::ostringstream& os, const Frame2d& f, const std::string& title,
              const std::string& xlabel, const std::string& ylabel) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(f.w) << "\" height=\""
     << num(f.h) << "\" viewBox=\"0 0 " << num(f.w) << ' ' << num(f.h) << "\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << num(f.w) << "\" height=\"" << num(f.h)
     << "\" fill=\"white\"/>\n"
     << "<text x=\"" << num(f.w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << xml_escape(title) << "</text>\n"
     << "<text x=\"" << num((f.left + f.w - f.right) / 2) << "\" y=\"" << num(f.h - 12)
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(xlabel) << "</text>\n"
     << "<text x=\"16\" y=\"" << num(f.h / 2) << "\" text-anchor=\"middle\" font-size=\"12\" "
     << "transform=\"rotate(-90 16 " << num(f.h / 2) << ")\">" << xml_escape(ylabel)
     << "</text>\n";
}

void draw_axes(std::ostringstream& os, const Frame2d& f, bool x_ticks) {
  os << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.py(f.y0)) << "\" x2=\""
     << num(f.w - f.right) << "\" y2=\"" << num(f.py(f.y0)) << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << num(f.left) << "\" y1=\"" << num(f.py(f.y0)) << "\" x2=\""
     << num(f.left) << "\" y2=\"" << num(f.top) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    os << "<text x=\"" << num(f.left - 6) << "\" y=\"" << num(f.py(y) + 4)
       << "\" text-anchor=\"end\" font-size=\"10\">" << num(y) << "</text>\n";
    if (x_ticks) {
      const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
      os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << num(f.py(f.y0) + 16)
         << "\" text-anchor=\"middle\" font-size=\"10\">" << num(x) << "</text>\n";
    }
  }
}

void draw_legend(std::ostringstream& os, const Frame2d& f, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = f.top + 16.0 * static_cast<double>(i);
    os << "<rect x=\"" << num(f.w - f.right + 12) << "\" y=\"" << num(y) << "\" width=\"10\" "
       << "height=\"10\" fill=\"" << kPalette[i % 8] << "\"/>\n"
       << "<text x=\"" << num(f.w - f.right + 28) << "\" y=\"" << num(y + 9)
       << "\" font-size=\"11\">" << xml_escape(names[i]) << "</text>\n";
  }
}

std::string line_plot(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<Curve>& curves) {
  Frame2d f;
  bool any = false;
  f.x0 = f.y0 = std::numeric_limits<double>::infinity();
  f.x1 = f.y1 = -std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.y[i])) continue;
      any = true;
      f.x0 = std::min(f.x0, c.x[i]);
      f.x1 = std::max(f.x1, c.x[i]);
      f.y0 = std::min(f.y0, c.y[i]);
      f.y1 = std::max(f.y1, c.y[i]);
    }
  }
  if (!any) f.x0 = f.y0 = 0.0, f.x1 = f.y1 = 1.0;
  f.y0 = std::min(f.y0, 0.0);
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1.0;
  if (f.y1 <= f.y0) f.y1 = f.y0 + 1.0;
  std::ostringstream os;
  open_svg(os, f, title, xlabel, ylabel);
  draw_axes(os, f, true);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    names.push_back(curves[k].planner);
    os << "<polyline fill=\"none\" stroke=\"" << kPalette[k % 8] << "\" stroke-width=\"2\" "
       << "points=\"";
    bool first = true;
    for (std::size_t i = 0; i < curves[k].x.size(); ++i) {
      if (!std::isfinite(curves[k].x[i]) || !std::isfinite(curves[k].y[i])) continue;
      os << (first ? "" : " ") << num(f.px(curves[k].x[i])) << ',' << num(f.py(curves[k].y[i]));
      first = false;
    }
    os << "\"/>\n";
  }
  draw_legend(os, f, names);
  os << "</svg>\n";
  return os.str();
}

/// values[s][g]: series s within group g.
std::string bar_chart(const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::vector<std::string>& groups,
                      const std::vector<std::string>& series,
                      const std::vector<std::vector<double>>& values) {
  Frame2d f;
  f.w = std::max(640.0, 220.0 + 24.0 * static_cast<double>(groups.size() * series.size()));
  f.y1 = 0.0;
  for (const auto& row : values)
    for (double v : row)
      if (std::isfinite(v)) f.y1 = std::max(f.y1, v);
  if (f.y1 <= 0.0) f.y1 = 1.0;
  std::ostringstream os;
  open_svg(os, f, title, xlabel, ylabel);
  draw_axes(os, f, false);
  const double plot_w = f.w - f.left - f.right;
  const double group_w = plot_w / static_cast<double>(std::max<std::size_t>(1, groups.size()));
  const double bar_w = 0.8 * group_w / static_cast<double>(std::max<std::size_t>(1, series.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double gx = f.left + group_w * static_cast<double>(g) + 0.1 * group_w;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = std::isfinite(values[s][g]) ? values[s][g] : 0.0;
      const double x = gx + bar_w * static_cast<double>(s);
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(f.py(v)) << "\" width=\"" << num(bar_w)
         << "\" height=\"" << num(f.py(0.0) - f.py(v)) << "\" fill=\"" << kPalette[s % 8]
         << "\"/>\n";
    }
    os << "<text x=\"" << num(gx + 0.4 * group_w) << "\" y=\"" << num(f.py(0.0) + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << xml_escape(groups[g]) << "</text>\n";
  }
  draw_legend(os, f, series);
  os << "</svg>\n";
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "planner,difficulty,runs,success_rate,time_mean,nodes_mean,failures_mean\n";
  for (const auto& r : rows) {
    os << r.planner << ',' << r.difficulty << ',' << r.runs << ',' << r.success_rate << ','
       << r.time_mean << ',' << r.nodes_mean << ',' << r.failures_mean << '\n';
  }
  return os.str();
}

}  // namespace

std::string attention_svg(const std::vector<NormalizedCategory>& cats) {
  std::set<std::size_t> node_set;
  for (const auto& c : cats) node_set.insert(c.node_index.begin(), c.node_index.end());
  const std::vector<std::size_t> nodes(node_set.begin(), node_set.end());
  std::vector<std::string> groups;
  for (auto n : nodes) groups.push_back(std::to_string(n));
  std::vector<std::string> series;
  std::vector<std::vector<double>> vals;
  for (const auto& c : cats) {
    series.push_back(role_name(c.role));
    std::vector<double> v(nodes.size(), 0.0);
    for (std::size_t i = 0; i < c.node_index.size(); ++i) {
      v[std::find(nodes.begin(), nodes.end(), c.node_index[i]) - nodes.begin()] = c.norm[i];
    }
    vals.push_back(std::move(v));
  }
  return bar_chart("Normalized attention per sampling step", "node index",
                   "normalized weight", groups, series, vals);
}

std::vector<std::filesystem::path> emit_outputs(const std::filesystem::path& dir,
                                                const BenchOutputs& out) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    write_text_file(p, text);
    written.push_back(p);
  };

  const auto rows = summarize(out.records);
  put("summary.csv", summary_csv(rows));

  json records = json::array();
  for (const auto& r : out.records) records.push_back(metrics_to_json(r));
  put("records.json", records.dump(2) + "\n");

  put("success_rate.svg",
      line_plot("Success rate vs time", "time (s)", "success rate", out.success));
  put("cost_vs_nodes.svg", line_plot("Average cost vs nodes", "nodes", "average cost", out.cost));

  std::set<std::string> planner_set, diff_set;
  for (const auto& r : rows) {
    planner_set.insert(r.planner);
    diff_set.insert(r.difficulty);
  }
  const std::vector<std::string> planners(planner_set.begin(), planner_set.end());
  const std::vector<std::string> diffs(diff_set.begin(), diff_set.end());
  std::vector<std::vector<double>> fails(planners.size(), std::vector<double>(diffs.size(), 0.0));
  for (const auto& r : rows) {
    const auto s = std::find(planners.begin(), planners.end(), r.planner) - planners.begin();
    const auto g = std::find(diffs.begin(), diffs.end(), r.difficulty) - diffs.begin();
    fails[s][g] = r.failures_mean;
  }
  put("sampling_failures.svg", bar_chart("Average sampling failures", "difficulty",
                                         "failures per run", diffs, planners, fails));

  if (!out.attention.empty()) {
    std::ostringstream csv;
    write_attention_csv(csv, out.attention);
    put("attention.csv", csv.str());
    put("attention.svg", attention_svg(out.attention));
  }
  return written;
}

}  // namespace temp
