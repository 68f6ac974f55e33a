#ifndef SNAKECPG_SCENARIO_HPP
#define SNAKECPG_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snakecpg/cpg.hpp"
#include "snakecpg/reflex.hpp"
#include "snakecpg/snake_sim.hpp"
#include "snakecpg/tactile.hpp"

namespace snakecpg::harness {

struct Goal {
  Eigen::Vector2d position{0.0, 0.0};
  double radius = 0.1;
};

enum class ObstacleLayout { None, Explicit, TrainingGrid, EscapeCorridor };

struct ObstacleConfig {
  ObstacleLayout layout = ObstacleLayout::None;
  std::vector<tactile::Circle> circles;  // Explicit
  // TrainingGrid: rows x cols grid; surface gap sampled per seed in
  // [spacing_min, spacing_max], centers jittered by clipped Gaussian noise.
  int grid_rows = 6;
  int grid_cols = 5;
  double spacing_min = 0.12;
  double spacing_max = 0.18;
  double jitter_clip = 0.01;
  double obstacle_radius = 0.05;
  Eigen::Vector2d origin{0.0, 0.0};
  // EscapeCorridor: staggered walls, surface gap in [85, 150] mm.
  double corridor_gap_min = 0.085;
  double corridor_gap_max = 0.15;
};

struct LimitsConfig {
  double max_time = 120.0;           // [s]
  double stall_timeout = 0.9;        // [s] of < 1 mm progress
  int retreat_timeout_steps = 360;   // 20 ms decision steps of retreat
};

struct ControllerConfig {
  reflex::ControlMode mode = reflex::ControlMode::C1Only;
  double steering_gain = 1.2;
  double attenuation = 0.8;
  double bias_limit = 0.5;
  double epsilon = 0.05;  // event-trigger threshold [N]
  reflex::ReflexTopology topology;
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  cpg::OscillatorParams cpg_params;
  double w_descending = 8.8669;
  double w_ascending = 0.7844;
  double dt_cpg = 0.0005;
  double dt_body = 0.002;
  ControllerConfig controller;
  sim::BodyParams body;
  sim::FrictionModel friction;
  sim::ActuatorParams actuator;
  double sensor_a_sig = 2.0;
  double sensor_radius = 0.02;
  double sensor_k_e = 200.0;
  double sensor_lateral_offset = 0.025;
  bool randomize_physics = false;
  sim::RandomizationRanges randomization;
  ObstacleConfig obstacles;
  std::vector<Goal> goals;
  LimitsConfig limits;
  Eigen::Vector2d start{0.0, 0.0};
  double start_heading = 0.0;
  reflex::RewardParams reward;

  void validate() const;
};

// JSON round trip; parse throws with a schema diagnostic before any
// simulation starts.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);
std::string scenario_to_json(const ScenarioConfig& config);

// Deterministic per-seed obstacle instantiation.
std::vector<tactile::Circle> generate_obstacles(const ObstacleConfig& config,
                                                std::uint64_t seed);

}  // namespace snakecpg::harness

#endif
