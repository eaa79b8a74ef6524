#pragma once

#include "temp/metrics.hpp"
#include "temp/sbmp.hpp"
#include "temp/temp_planner.hpp"
#include "temp/world.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

namespace temp {

using nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parsed JSON plus the source line of every value, keyed by JSON pointer.
struct JsonDocument {
  json root;
  std::string source;
  std::map<std::string, int> lines;

  /// Line of `pointer`, or of its closest recorded ancestor.
  int line_of(const std::string& pointer) const;
  /// InvalidInput carrying "source:line: message".
  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const;
};

/// Parse errors are reported as InvalidInput with the offending line.
JsonDocument parse_json_document(const std::string& text, const std::string& source);
JsonDocument read_json_document(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

json state_to_json(const State& s);

/// {dim, bounds: [[low, high]...], obstacles: [{center, half_extent}...]}
json workspace_to_json(const Workspace& ws);
/// Validates against the Workspace invariants; errors name the line.
std::shared_ptr<const Workspace> workspace_from_json(const JsonDocument& doc,
                                                     const std::string& pointer = "");
std::shared_ptr<const Workspace> load_workspace(const std::filesystem::path& path);

/// {id, workspace: {...}, x_init, goal_center, goal_radius}
json task_to_json(const PlanningTask& task);
std::shared_ptr<const PlanningTask> task_from_json(const JsonDocument& doc,
                                                   const std::string& pointer = "");
std::shared_ptr<const PlanningTask> load_task(const std::filesystem::path& path);

/// List of coordinate lists.
json path_to_json(const Path& p);
Path path_from_json(const json& j);

/// Infinite costs and times are written as null.
json metrics_to_json(const MetricsRecord& m);
MetricsRecord metrics_from_json(const json& j);

json outcome_to_json(const PlanOutcome& out, const std::string& task_id,
                     const std::string& attention_csv_ref);

}  // namespace temp
