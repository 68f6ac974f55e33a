#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "snakecpg/harness.hpp"
#include "snakecpg/scenario.hpp"

using namespace snakecpg;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

harness::ScenarioConfig short_scenario() {
  harness::ScenarioConfig cfg;
  cfg.cpg_params.c = 1.0;
  cfg.cpg_params.k_f = 0.3;
  cfg.actuator.gain = 3.0;
  cfg.goals.push_back({{100.0, 0.0}, 0.1});
  cfg.limits.max_time = 5.0;
  cfg.limits.stall_timeout = 1e9;
  return cfg;
}

}  // namespace

TEST_CASE("trace schema has one column per recorded quantity") {
  const auto cols = harness::trace_columns();
  REQUIRE(cols.size() == 47);
  CHECK(cols.front() == "t");
  CHECK(cols[1] == "pair1_x_e");
  CHECK(cols[37] == "N1");
  CHECK(cols[42] == "head_x");
  CHECK(cols.back() == "event");
}

TEST_CASE("run fills the trace at the body step rate") {
  const auto cfg = short_scenario();
  const auto res = harness::run(cfg);
  CHECK(res.summary.steps == res.trace.size());
  CHECK(res.trace.size() == doctest::Approx(5.0 / cfg.dt_body).epsilon(0.01));
  for (const auto& row : res.trace) REQUIRE(row.size() == 47);
  const double t_last = res.trace.back()[0];
  CHECK(t_last == doctest::Approx(5.0).epsilon(0.01));
  // an unreachable goal times out rather than succeeding
  CHECK_FALSE(res.summary.success);
  CHECK(res.summary.failure_reason == "timeout");
}

TEST_CASE("identical config and seed give byte-identical trace files") {
  auto cfg = short_scenario();
  cfg.seed = 11;
  const std::string a = "/tmp/snakecpg_trace_a.csv";
  const std::string b = "/tmp/snakecpg_trace_b.csv";
  harness::run(cfg, a);
  harness::run(cfg, b);
  const auto ta = slurp(a);
  CHECK(!ta.empty());
  CHECK(ta == slurp(b));
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("format_cell survives a parse round trip") {
  for (double v : {0.0, -1.5, 3.141592653589793, 1e-17, 6.02e23}) {
    CHECK(std::stod(harness::format_cell(v)) == v);
  }
}

TEST_CASE("scenario JSON round trip preserves the configuration") {
  auto cfg = harness::escape_scenario();
  cfg.seed = 99;
  cfg.controller.mode = reflex::ControlMode::MpfLocal;
  const auto text = harness::scenario_to_json(cfg);
  const auto back = harness::parse_scenario(text);
  CHECK(back.seed == cfg.seed);
  CHECK(back.controller.mode == cfg.controller.mode);
  CHECK(back.controller.bias_limit == cfg.controller.bias_limit);
  CHECK(back.cpg_params.c == cfg.cpg_params.c);
  CHECK(back.cpg_params.k_f == cfg.cpg_params.k_f);
  CHECK(back.actuator.gain == cfg.actuator.gain);
  CHECK(back.actuator.torque_limit == cfg.actuator.torque_limit);
  CHECK(back.body.joint_rate_limit == cfg.body.joint_rate_limit);
  CHECK(back.obstacles.layout == cfg.obstacles.layout);
  CHECK(back.obstacles.corridor_gap_min == cfg.obstacles.corridor_gap_min);
  REQUIRE(back.goals.size() == cfg.goals.size());
  CHECK(back.goals[0].position == cfg.goals[0].position);
  CHECK(harness::scenario_to_json(back) == text);
}

TEST_CASE("parse_scenario rejects malformed input with a diagnostic") {
  CHECK_THROWS(harness::parse_scenario("not json"));
  CHECK_THROWS(harness::parse_scenario(R"({"dt_cpg": -1})"));
}

TEST_CASE("obstacle generation is deterministic per seed") {
  harness::ObstacleConfig oc;
  oc.layout = harness::ObstacleLayout::EscapeCorridor;
  const auto a = harness::generate_obstacles(oc, 5);
  const auto b = harness::generate_obstacles(oc, 5);
  const auto c = harness::generate_obstacles(oc, 6);
  REQUIRE(a.size() == b.size());
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i].center == b[i].center && a[i].radius == b[i].radius;
  }
  CHECK(same);
  bool differs = c.size() != a.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i)
    differs = a[i].center != c[i].center;
  CHECK(differs);
}

TEST_CASE("training grid has one obstacle per cell") {
  harness::ObstacleConfig oc;
  oc.layout = harness::ObstacleLayout::TrainingGrid;
  oc.grid_rows = 4;
  oc.grid_cols = 3;
  const auto circles = harness::generate_obstacles(oc, 1);
  CHECK(circles.size() == 12);
}

TEST_CASE("escape corridor walls bound the randomized slalom") {
  harness::ObstacleConfig oc;
  oc.layout = harness::ObstacleLayout::EscapeCorridor;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto circles = harness::generate_obstacles(oc, seed);
    REQUIRE(circles.size() > 5);
    const double h = 0.5 * oc.corridor_gap_max + 2.0 * oc.obstacle_radius;
    int interior = 0;
    for (const auto& circ : circles) {
      if (std::abs(circ.center.y()) < h) {
        ++interior;
        // each peg leaves a passage on the opposite side sized by the
        // sampled surface gap plus the body clearance padding
        const double passage = std::abs(circ.center.y()) + h - circ.radius;
        CHECK(passage >= oc.corridor_gap_min + 2.5 * oc.obstacle_radius - 1e-9);
        CHECK(passage <= oc.corridor_gap_max + 2.5 * oc.obstacle_radius + 1e-9);
      }
    }
    CHECK(interior == 5);
  }
}

TEST_CASE("escape scenario reaches the goal in local-reflex mode") {
  auto cfg = harness::escape_scenario();
  cfg.controller.mode = reflex::ControlMode::AfLocal;
  cfg.seed = 1;
  const auto res = harness::run(cfg);
  CHECK(res.summary.success);
  CHECK(res.summary.goals_reached == 1);
  CHECK(res.summary.finish_time < cfg.limits.max_time);
  CHECK(res.summary.path_length > 1.5);
}

TEST_CASE("escape table aggregates per mode and drive level") {
  harness::EscapeTable table;
  using reflex::ControlMode;
  auto cell = [](ControlMode m, double c, bool ok, double t) {
    harness::EscapeCell e;
    e.mode = m;
    e.c = c;
    e.summary.success = ok;
    e.summary.finish_time = t;
    return e;
  };
  table.cells = {cell(ControlMode::AfLocal, 0.2, true, 40.0),
                 cell(ControlMode::AfLocal, 0.5, false, 180.0),
                 cell(ControlMode::MpfLocal, 0.2, true, 60.0)};
  CHECK(table.success_rate(ControlMode::AfLocal) == doctest::Approx(0.5));
  CHECK(table.success_rate(ControlMode::AfLocal, 0.2) == doctest::Approx(1.0));
  CHECK(table.mean_finish_time(ControlMode::MpfLocal) == doctest::Approx(60.0));
}
