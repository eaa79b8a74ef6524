#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace temp {

/// One improvement of the best solution cost during a run.
struct TracePoint {
  std::size_t nodes = 0;
  double time_s = 0.0;
  double cost = 0.0;
};

/// Per-run planning outcome. `cost` is infinite iff `success` is false.
struct MetricsRecord {
  std::string task_id;
  std::string planner;
  std::uint64_t seed = 0;
  bool success = false;
  double time_s = 0.0;
  std::size_t nodes = 0;
  std::size_t sampling_failures = 0;
  double cost = std::numeric_limits<double>::infinity();
  double first_solution_time = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::string difficulty;
  double tau = 0.0;
  bool flagged = false;
  std::vector<TracePoint> trace;
};

}  // namespace temp
