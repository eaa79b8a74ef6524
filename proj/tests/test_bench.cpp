#include "support.hpp"
#include "temp/bench.hpp"

#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace temp;
using temp::testing::box_world;
using temp::testing::path_is_valid;
using temp::testing::tiny_model_config;
using temp::testing::vec;

namespace fs = std::filesystem;

namespace {

MetricsRecord record(const std::string& task, const std::string& planner, bool ok, double time,
                     double cost, std::vector<TracePoint> trace = {}) {
  MetricsRecord r;
  r.task_id = task;
  r.planner = planner;
  r.success = ok;
  r.time_s = time;
  r.cost = ok ? cost : std::numeric_limits<double>::infinity();
  r.trace = std::move(trace);
  r.nodes = 10;
  r.difficulty = "easy";
  return r;
}

BenchmarkSuite small_suite(int threads) {
  auto ws = box_world(2, 0, 10, {BoxObstacle{vec({5, 5}), vec({1.5, 1.5})}});
  auto ws2 = box_world(2, 0, 10, {BoxObstacle{vec({3, 6}), vec({1, 2})}});
  BenchmarkSuite s;
  s.tasks = {{std::make_shared<const PlanningTask>(ws, vec({1, 1}), vec({9, 9}), 0.5, "a"), "easy"},
             {std::make_shared<const PlanningTask>(ws2, vec({1, 6}), vec({9, 6}), 0.5, "b"),
              "challenging"}};
  s.repetitions = 2;
  s.seed = 11;
  s.baseline.max_iters = 2000;
  s.temp.planner.max_iters = 2000;
  // Large noise turns the untrained model into a near-uniform sampler.
  s.temp.noise_fraction = 0.5;
  s.threads = threads;
  return s;
}

fs::path scratch(const std::string& leaf) {
  const auto p = fs::temp_directory_path() / ("temp_test_bench_" + leaf);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("eq7 tolerance boundary") {
  CHECK(eq7_accepts(1.05 * 10.0, 10.0, 0.05));
  CHECK(eq7_accepts(10.0, 10.0, 0.05));
  CHECK_FALSE(eq7_accepts(std::nextafter(1.05 * 10.0, 100.0), 10.0, 0.05));
  CHECK(eq7_accepts(4.0, 10.0, 0.0));
  CHECK_FALSE(eq7_accepts(10.5, 10.0, 0.0));
  CHECK_FALSE(eq7_accepts(std::numeric_limits<double>::infinity(), 10.0, 0.05));
}

TEST_CASE("difficulty labels use the cost ratio") {
  auto ws = box_world(2, 0, 10);
  PlanningTask t(ws, vec({1, 1}), vec({1, 9}), 0.5);
  CHECK(label_difficulty(t, 8.0 * 1.3) == "easy");
  CHECK(label_difficulty(t, 8.0 * 1.31) == "challenging");
}

TEST_CASE("success curves") {
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, std::numeric_limits<double>::infinity()};
  const std::vector<MetricsRecord> all{record("a", "X", true, 0.0, 1), record("b", "X", true, 0.0, 1)};
  const auto solved = success_curve(all, grid);
  for (double v : solved.front().y) CHECK(v == 1.0);

  const std::vector<MetricsRecord> none{record("a", "X", false, 0.1, 0), record("b", "X", false, 0.2, 0)};
  const auto unsolved = success_curve(none, grid);
  for (double v : unsolved.front().y) CHECK(v == 0.0);

  const std::vector<MetricsRecord> mixed{record("a", "X", true, 0.4, 1), record("b", "X", false, 0.1, 0),
                                         record("c", "X", true, 1.5, 1), record("a", "Y", true, 3, 1)};
  const auto curves = success_curve(mixed, grid);
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].planner == "X");
  CHECK(curves[0].y == std::vector<double>{0.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0});
  CHECK(curves[1].y == std::vector<double>{0, 0, 0, 0, 1});
  for (const auto& c : curves) {
    for (std::size_t i = 1; i < c.y.size(); ++i) CHECK(c.y[i] >= c.y[i - 1]);
  }
}

TEST_CASE("cost against nodes with the penalty rule") {
  const std::vector<double> grid{1, 5, 10, 100};
  // Solved from node 1: plain average, no penalty.
  const std::vector<MetricsRecord> easy{record("a", "X", true, 0, 4, {{1, 0, 4}}),
                                        record("b", "X", true, 0, 6, {{1, 0, 8}, {5, 0, 6}})};
  CHECK(cost_vs_nodes(easy, grid).front().y == std::vector<double>{6, 5, 5, 5});

  // Y never solves task "c", whose largest observed cost is 20.
  const std::vector<MetricsRecord> pen{record("c", "X", true, 0, 12, {{2, 0, 20}, {10, 0, 12}}),
                                       record("c", "Y", false, 0, 0)};
  const auto curves = cost_vs_nodes(pen, grid);
  REQUIRE(curves.size() == 2);
  CHECK(curves[0].y == std::vector<double>{30, 20, 12, 12});
  CHECK(curves[1].y == std::vector<double>{30, 30, 30, 30});

  // No planner ever solved "d": it is skipped.
  const std::vector<MetricsRecord> skip{record("d", "X", false, 0, 0), record("a", "X", true, 0, 4, {{1, 0, 4}})};
  CHECK(cost_vs_nodes(skip, grid).front().y == std::vector<double>{4, 4, 4, 4});
}

TEST_CASE("suite validation") {
  const ModelBundle m = ModelBundle::create(tiny_model_config(), 1);
  BenchmarkSuite s = small_suite(1);
  s.tau = -0.1;
  CHECK_THROWS_AS(run_suite(s, &m), InvalidInput);
  s = small_suite(1);
  s.planners = {"PRM"};
  CHECK_THROWS_AS(run_suite(s, &m), InvalidInput);
  s = small_suite(1);
  CHECK_THROWS_AS(run_suite(s, nullptr), InvalidInput);
  // A structurally identical copy of a benchmark workspace counts as seen.
  s.training_workspaces = {box_world(2, 0, 10, {BoxObstacle{vec({5, 5}), vec({1.5, 1.5})}})};
  CHECK_THROWS_AS(run_suite(s, &m), InvalidInput);
  const ModelBundle m3 = ModelBundle::create(tiny_model_config(3), 1);
  CHECK_THROWS_AS(run_suite(small_suite(1), &m3), InvalidInput);
}

TEST_CASE("suite runs are deterministic and store consistent paths") {
  const ModelBundle m = ModelBundle::create(tiny_model_config(), 1);
  const SuiteResult a = run_suite(small_suite(1), &m);
  const SuiteResult b = run_suite(small_suite(3), &m);
  REQUIRE(a.records.size() == 2 * 2 * 3);
  REQUIRE(b.records.size() == a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    CHECK(x.planner == y.planner);
    CHECK(x.task_id == y.task_id);
    CHECK(x.seed == y.seed);
    CHECK(x.success == y.success);
    CHECK(x.nodes == y.nodes);
    CHECK(x.sampling_failures == y.sampling_failures);
    CHECK(x.iterations == y.iterations);
    CHECK((x.cost == y.cost || (std::isinf(x.cost) && std::isinf(y.cost))));
    CHECK(x.tau == 0.05);
    CHECK(x.success == a.paths[i].has_value());
    CHECK(x.nodes >= 1);
    if (x.success) {
      CHECK(std::abs(path_cost(*a.paths[i]) - x.cost) <= 1e-9);
    } else {
      CHECK(std::isinf(x.cost));
    }
  }
  // Each job is (TEMP, RRT*, IRRT*) on one seed.
  for (std::size_t j = 0; j < a.records.size(); j += 3) {
    CHECK(a.records[j].planner == kTemp);
    CHECK(a.attention.count(j) == 1);
    CHECK(a.attention.at(j).size() == a.records[j].iterations);
    const double jt = a.records[j].cost;
    for (std::size_t k = j + 1; k < j + 3; ++k) {
      CHECK(a.records[k].seed == a.records[j].seed);
      if (std::isfinite(jt) && a.records[k].success) CHECK(eq7_accepts(a.records[k].cost, jt, 0.05));
      CHECK(a.records[k].flagged == !std::isfinite(jt));
    }
  }
  CHECK(a.records[0].seed != a.records[3].seed);
}

TEST_CASE("failed TEMP runs flag the rows and baselines stop at their first solution") {
  const ModelBundle m = ModelBundle::create(tiny_model_config(), 1);
  BenchmarkSuite s = small_suite(1);
  s.repetitions = 1;
  s.temp.planner.max_iters = 1;
  const SuiteResult r = run_suite(s, &m);
  REQUIRE(r.records.size() == 6);
  for (const auto& rec : r.records) CHECK(rec.flagged);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    if (rec.planner == kTemp || !rec.success) continue;
    // First solution and final cost coincide.
    REQUIRE(!rec.trace.empty());
    CHECK(rec.trace.size() == 1);
    CHECK(rec.trace.front().cost == rec.cost);
    CHECK(path_is_valid(*s.tasks[i / 3].task, *r.paths[i]));
  }
}

TEST_CASE("emitted files are well formed, consistent and reproducible") {
  const ModelBundle m = ModelBundle::create(tiny_model_config(), 1);
  BenchmarkSuite s = small_suite(2);
  s.matched_cost = false;
  const SuiteResult res = run_suite(s, &m);
  BenchOutputs out;
  out.records = res.records;
  std::vector<double> tgrid, ngrid;
  for (int i = 0; i <= 20; ++i) {
    tgrid.push_back(0.01 * i);
    ngrid.push_back(100.0 * i);
  }
  out.success = success_curve(out.records, tgrid);
  out.cost = cost_vs_nodes(out.records, ngrid);
  for (const auto& c : out.cost) {
    if (c.planner == kTemp) continue;
    for (std::size_t i = 1; i < c.y.size(); ++i) CHECK(c.y[i] <= c.y[i - 1]);
  }
  out.attention = normalize_attention(res.attention.begin()->second);

  const fs::path dir = scratch("a");
  const auto files = emit_outputs(dir, out);
  CHECK(files.size() == 7);
  for (const auto& f : files) {
    if (f.extension() != ".svg") continue;
    boost::property_tree::ptree tree;
    std::ifstream in(f);
    CHECK_NOTHROW(boost::property_tree::read_xml(in, tree));
    CHECK(tree.count("svg") == 1);
  }

  // Summary rows match a recomputation from the raw JSON records.
  std::vector<MetricsRecord> reread;
  for (const auto& j : json::parse(slurp(dir / "records.json"))) reread.push_back(metrics_from_json(j));
  REQUIRE(reread.size() == out.records.size());
  const auto rows = summarize(reread);
  const auto csv = read_csv(dir / "summary.csv");
  REQUIRE(csv.size() == rows.size() + 1);
  CHECK(csv[0] == std::vector<std::string>{"planner", "difficulty", "runs", "success_rate",
                                           "time_mean", "nodes_mean", "failures_mean"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& c = csv[i + 1];
    CHECK(c[0] == rows[i].planner);
    CHECK(c[1] == rows[i].difficulty);
    CHECK(std::stoul(c[2]) == rows[i].runs);
    CHECK(std::stod(c[3]) == rows[i].success_rate);
    CHECK(std::stod(c[4]) == rows[i].time_mean);
    CHECK(std::stod(c[5]) == rows[i].nodes_mean);
    CHECK(std::stod(c[6]) == rows[i].failures_mean);
  }
  CHECK(rows.size() == 6);

  const fs::path dir2 = scratch("b");
  emit_outputs(dir2, out);
  for (const auto& f : files) CHECK(slurp(f) == slurp(dir2 / f.filename()));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("unwritable output directories are reported") {
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  try {
    emit_outputs(file / "sub", BenchOutputs{});
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(file.string()) != std::string::npos);
  }
  fs::remove(file);
}

TEST_CASE("records can hold the magnitudes of the published table") {
  MetricsRecord r = record("t", kTemp, true, 0.154, 12.0);
  r.nodes = 117;
  const MetricsRecord back = metrics_from_json(metrics_to_json(r));
  CHECK(back.time_s == 0.154);
  CHECK(back.nodes == 117);
}
