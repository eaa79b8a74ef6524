#include "temp/io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

namespace temp {

namespace {

/// Character iterator that tracks the line of the most recently consumed
/// character, so parser callbacks can be anchored to source lines.
struct LineCountingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  int* line = nullptr;
  int* last_line = nullptr;

  reference operator*() const { return *p; }
  LineCountingIterator& operator++() {
    *last_line = *line;
    if (*p == '\n') ++*line;
    ++p;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const LineCountingIterator& o) const { return p == o.p; }
  bool operator!=(const LineCountingIterator& o) const { return p != o.p; }
};

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

struct Frame {
  bool is_array = false;
  std::size_t next_index = 0;
  std::string key;
  std::string pointer;
};

const json& at_pointer(const JsonDocument& doc, const std::string& ptr) {
  const json::json_pointer jp(ptr);
  if (!doc.root.contains(jp)) doc.fail(ptr, "missing required field '" + ptr + "'");
  return doc.root.at(jp);
}

double get_number(const JsonDocument& doc, const std::string& ptr) {
  const json& j = at_pointer(doc, ptr);
  if (!j.is_number()) doc.fail(ptr, ptr + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) doc.fail(ptr, ptr + " must be finite");
  return v;
}

State get_state(const JsonDocument& doc, const std::string& ptr, int dim) {
  const json& j = at_pointer(doc, ptr);
  if (!j.is_array()) doc.fail(ptr, ptr + " must be an array of numbers");
  if (static_cast<int>(j.size()) != dim) {
    doc.fail(ptr, ptr + " has length " + std::to_string(j.size()) + ", expected " +
                      std::to_string(dim));
  }
  State s(dim);
  for (int i = 0; i < dim; ++i) s[i] = get_number(doc, ptr + "/" + std::to_string(i));
  return s;
}

}  // namespace

int JsonDocument::line_of(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    const auto it = lines.find(p);
    if (it != lines.end()) return it->second;
    if (p.empty()) return 1;
    p.erase(p.rfind('/'));
  }
}

void JsonDocument::fail(const std::string& pointer, const std::string& message) const {
  throw InvalidInput(source + ":" + std::to_string(line_of(pointer)) + ": " + message);
}

JsonDocument parse_json_document(const std::string& text, const std::string& source) {
  JsonDocument doc;
  doc.source = source;
  int line = 1;
  int last_line = 1;
  std::vector<Frame> stack;
  auto child_pointer = [&]() -> std::string {
    if (stack.empty()) return "";
    Frame& top = stack.back();
    if (top.is_array) return top.pointer + "/" + std::to_string(top.next_index++);
    return top.pointer + "/" + escape_token(top.key);
  };
  json::parser_callback_t cb = [&](int, json::parse_event_t ev, json& parsed) {
    switch (ev) {
      case json::parse_event_t::object_start:
      case json::parse_event_t::array_start: {
        const std::string ptr = child_pointer();
        doc.lines.emplace(ptr, last_line);
        stack.push_back({ev == json::parse_event_t::array_start, 0, {}, ptr});
        break;
      }
      case json::parse_event_t::object_end:
      case json::parse_event_t::array_end:
        stack.pop_back();
        break;
      case json::parse_event_t::key:
        stack.back().key = parsed.get<std::string>();
        break;
      case json::parse_event_t::value:
        doc.lines.emplace(child_pointer(), last_line);
        break;
    }
    return true;
  };
  LineCountingIterator first{text.data(), &line, &last_line};
  LineCountingIterator last{text.data() + text.size(), &line, &last_line};
  try {
    doc.root = json::parse(first, last, cb);
  } catch (const json::parse_error& e) {
    throw InvalidInput(source + ":" + std::to_string(last_line) + ": malformed JSON (" +
                       e.what() + ")");
  }
  return doc;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

JsonDocument read_json_document(const std::filesystem::path& path) {
  return parse_json_document(read_text_file(path), path.string());
}

json state_to_json(const State& s) {
  return std::vector<double>(s.data(), s.data() + s.size());
}

json workspace_to_json(const Workspace& ws) {
  json bounds = json::array();
  for (const auto& b : ws.bounds()) bounds.push_back({b.low, b.high});
  json obs = json::array();
  for (const auto& o : ws.obstacles()) {
    obs.push_back({{"center", state_to_json(o.center)},
                   {"half_extent", state_to_json(o.half_extent)}});
  }
  return {{"dim", ws.dim()}, {"bounds", bounds}, {"obstacles", obs}};
}

std::shared_ptr<const Workspace> workspace_from_json(const JsonDocument& doc,
                                                     const std::string& pointer) {
  const json& root = at_pointer(doc, pointer);
  if (!root.is_object()) doc.fail(pointer, "workspace must be an object");
  const json& jdim = at_pointer(doc, pointer + "/dim");
  if (!jdim.is_number_integer() || jdim.get<long long>() < 1) {
    doc.fail(pointer + "/dim", "dim must be a positive integer");
  }
  const int dim = jdim.get<int>();

  const std::string bptr = pointer + "/bounds";
  const json& jb = at_pointer(doc, bptr);
  if (!jb.is_array() || static_cast<int>(jb.size()) != dim) {
    doc.fail(bptr, "bounds must list one [low, high] pair per axis");
  }
  std::vector<Bounds> bounds;
  for (int i = 0; i < dim; ++i) {
    const std::string p = bptr + "/" + std::to_string(i);
    const State pair = get_state(doc, p, 2);
    if (!(pair[0] < pair[1])) doc.fail(p, "axis " + std::to_string(i) + " requires low < high");
    bounds.push_back({pair[0], pair[1]});
  }

  std::vector<BoxObstacle> obstacles;
  const std::string optr = pointer + "/obstacles";
  if (root.contains("obstacles")) {
    const json& jo = at_pointer(doc, optr);
    if (!jo.is_array()) doc.fail(optr, "obstacles must be an array");
    for (std::size_t k = 0; k < jo.size(); ++k) {
      const std::string p = optr + "/" + std::to_string(k);
      BoxObstacle b{get_state(doc, p + "/center", dim), get_state(doc, p + "/half_extent", dim)};
      if (!(b.half_extent.array() > 0.0).all()) {
        doc.fail(p + "/half_extent", "obstacle " + std::to_string(k) +
                                         " half_extent must be strictly positive");
      }
      for (int i = 0; i < dim; ++i) {
        if (b.center[i] - b.half_extent[i] < bounds[i].low ||
            b.center[i] + b.half_extent[i] > bounds[i].high) {
          doc.fail(p, "obstacle " + std::to_string(k) + " leaves the workspace bounds");
        }
      }
      obstacles.push_back(std::move(b));
    }
  }
  try {
    return std::make_shared<const Workspace>(std::move(bounds), std::move(obstacles));
  } catch (const InvalidInput& e) {
    doc.fail(pointer, e.what());
  }
}

std::shared_ptr<const Workspace> load_workspace(const std::filesystem::path& path) {
  return workspace_from_json(read_json_document(path));
}

json task_to_json(const PlanningTask& task) {
  return {{"id", task.id()},
          {"workspace", workspace_to_json(task.workspace())},
          {"x_init", state_to_json(task.x_init())},
          {"goal_center", state_to_json(task.goal_center())},
          {"goal_radius", task.goal_radius()}};
}

std::shared_ptr<const PlanningTask> task_from_json(const JsonDocument& doc,
                                                   const std::string& pointer) {
  const json& root = at_pointer(doc, pointer);
  if (!root.is_object()) doc.fail(pointer, "task must be an object");
  auto ws = workspace_from_json(doc, pointer + "/workspace");
  State x_init = get_state(doc, pointer + "/x_init", ws->dim());
  State goal = get_state(doc, pointer + "/goal_center", ws->dim());
  const double radius = get_number(doc, pointer + "/goal_radius");
  std::string id;
  if (root.contains("id")) {
    if (!root["id"].is_string()) doc.fail(pointer + "/id", "id must be a string");
    id = root["id"].get<std::string>();
  }
  if (!(radius > 0.0)) doc.fail(pointer + "/goal_radius", "goal_radius must be positive");
  if (!ws->inside_bounds(x_init) || point_in_collision(*ws, x_init)) {
    doc.fail(pointer + "/x_init", "x_init must be a free state inside bounds");
  }
  if (!ws->inside_bounds(goal) || point_in_collision(*ws, goal)) {
    doc.fail(pointer + "/goal_center", "goal_center must be a free state inside bounds");
  }
  try {
    return std::make_shared<const PlanningTask>(ws, x_init, goal, radius, id);
  } catch (const InvalidInput& e) {
    doc.fail(pointer, e.what());
  }
}

std::shared_ptr<const PlanningTask> load_task(const std::filesystem::path& path) {
  return task_from_json(read_json_document(path));
}

json path_to_json(const Path& p) {
  json out = json::array();
  for (const auto& s : p.states) out.push_back(state_to_json(s));
  return out;
}

Path path_from_json(const json& j) {
  Path p;
  for (const auto& s : j) {
    const auto v = s.get<std::vector<double>>();
    p.states.push_back(Eigen::Map<const State>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  return p;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double null_as_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

json metrics_to_json(const MetricsRecord& m) {
  json trace = json::array();
  for (const auto& t : m.trace) trace.push_back({t.nodes, t.time_s, t.cost});
  return {{"task_id", m.task_id},
          {"planner", m.planner},
          {"seed", m.seed},
          {"success", m.success},
          {"time_s", m.time_s},
          {"nodes", m.nodes},
          {"sampling_failures", m.sampling_failures},
          {"cost", finite_or_null(m.cost)},
          {"first_solution_time", finite_or_null(m.first_solution_time)},
          {"iterations", m.iterations},
          {"difficulty", m.difficulty},
          {"tau", m.tau},
          {"flagged", m.flagged},
          {"trace", trace}};
}

MetricsRecord metrics_from_json(const json& j) {
  MetricsRecord m;
  m.task_id = j.at("task_id").get<std::string>();
  m.planner = j.at("planner").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.success = j.at("success").get<bool>();
  m.time_s = j.at("time_s").get<double>();
  m.nodes = j.at("nodes").get<std::size_t>();
  m.sampling_failures = j.at("sampling_failures").get<std::size_t>();
  m.cost = null_as_inf(j.at("cost"));
  m.first_solution_time = null_as_inf(j.at("first_solution_time"));
  m.iterations = j.value("iterations", std::size_t{0});
  m.difficulty = j.value("difficulty", std::string{});
  m.tau = j.value("tau", 0.0);
  m.flagged = j.value("flagged", false);
  if (j.contains("trace")) {
    for (const auto& t : j["trace"]) {
      m.trace.push_back({t.at(0).get<std::size_t>(), t.at(1).get<double>(), t.at(2).get<double>()});
    }
  }
  return m;
}

json outcome_to_json(const PlanOutcome& out, const std::string& task_id,
                     const std::string& attention_csv_ref) {
  return {{"task_id", task_id},
          {"phase_reached", phase_name(out.phase)},
          {"cost", finite_or_null(out.j_best)},
          {"time_s", out.metrics.time_s},
          {"nodes", out.metrics.nodes},
          {"sampling_failures", out.metrics.sampling_failures},
          {"path", out.path ? path_to_json(*out.path) : json(nullptr)},
          {"attention_csv_ref", attention_csv_ref}};
}

}  // namespace temp
