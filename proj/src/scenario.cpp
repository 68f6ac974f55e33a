#include "snakecpg/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace snakecpg::harness {

using nlohmann::json;

void ScenarioConfig::validate() const {
  cpg_params.validate();
  friction.validate();
  controller.topology.validate();
  reward.validate();
  if (!(dt_cpg > 0.0) || !(dt_body > 0.0)) {
    throw std::invalid_argument("scenario: integration steps must be positive");
  }
  if (dt_body + 1e-12 < dt_cpg) {
    throw std::invalid_argument("scenario: dt_body must be >= dt_cpg");
  }
  if (!(limits.max_time > 0.0) || !(limits.stall_timeout > 0.0) ||
      limits.retreat_timeout_steps <= 0) {
    throw std::invalid_argument("scenario: limits must be positive");
  }
  if (goals.empty()) throw std::invalid_argument("scenario: goal list is empty");
  for (const auto& g : goals) {
    if (!(g.radius > 0.0)) {
      throw std::invalid_argument("scenario: goal radius must be positive");
    }
  }
  if (!(controller.epsilon > 0.0)) {
    throw std::invalid_argument("scenario: event-trigger epsilon must be positive");
  }
}

namespace {

reflex::ControlMode mode_from_string(const std::string& s) {
  if (s == "af-local") return reflex::ControlMode::AfLocal;
  if (s == "mpf-local") return reflex::ControlMode::MpfLocal;
  if (s == "af-learning") return reflex::ControlMode::AfLearningInterface;
  if (s == "mpf-learning") return reflex::ControlMode::MpfLearningInterface;
  if (s == "c1-only") return reflex::ControlMode::C1Only;
  throw std::invalid_argument("scenario: unknown controller mode '" + s + "'");
}

std::string mode_to_string(reflex::ControlMode m) {
  switch (m) {
    case reflex::ControlMode::AfLocal: return "af-local";
    case reflex::ControlMode::MpfLocal: return "mpf-local";
    case reflex::ControlMode::AfLearningInterface: return "af-learning";
    case reflex::ControlMode::MpfLearningInterface: return "mpf-learning";
    case reflex::ControlMode::C1Only: return "c1-only";
  }
  return "c1-only";
}

ObstacleLayout layout_from_string(const std::string& s) {
  if (s == "none") return ObstacleLayout::None;
  if (s == "explicit") return ObstacleLayout::Explicit;
  if (s == "training-grid") return ObstacleLayout::TrainingGrid;
  if (s == "escape-corridor") return ObstacleLayout::EscapeCorridor;
  throw std::invalid_argument("scenario: unknown obstacle layout '" + s + "'");
}

std::string layout_to_string(ObstacleLayout l) {
  switch (l) {
    case ObstacleLayout::None: return "none";
    case ObstacleLayout::Explicit: return "explicit";
    case ObstacleLayout::TrainingGrid: return "training-grid";
    case ObstacleLayout::EscapeCorridor: return "escape-corridor";
  }
  return "none";
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: invalid JSON: ") + e.what());
  }
  // accept a run manifest directly: the resolved scenario sits under "config"
  if (j.contains("tool") && j.contains("config")) j = j.at("config");
  ScenarioConfig c;
  try {
    maybe(j, "seed", c.seed);
    if (j.contains("cpg")) {
      const auto& g = j.at("cpg");
      maybe(g, "a", c.cpg_params.a);
      maybe(g, "b", c.cpg_params.b);
      maybe(g, "tau_r", c.cpg_params.tau_r);
      maybe(g, "tau_a", c.cpg_params.tau_a);
      maybe(g, "k_f", c.cpg_params.k_f);
      maybe(g, "c", c.cpg_params.c);
      maybe(g, "w_descending", c.w_descending);
      maybe(g, "w_ascending", c.w_ascending);
      maybe(g, "dt", c.dt_cpg);
    }
    if (j.contains("controller")) {
      const auto& g = j.at("controller");
      if (g.contains("mode")) c.controller.mode = mode_from_string(g.at("mode"));
      maybe(g, "steering_gain", c.controller.steering_gain);
      maybe(g, "attenuation", c.controller.attenuation);
      maybe(g, "bias_limit", c.controller.bias_limit);
      maybe(g, "epsilon", c.controller.epsilon);
    }
    if (j.contains("body")) {
      const auto& g = j.at("body");
      maybe(g, "dt", c.dt_body);
      if (g.contains("masses")) {
        const auto m = g.at("masses").get<std::vector<double>>();
        if (m.size() != sim::kNumBodies) {
          throw std::invalid_argument("scenario: body.masses needs 5 entries");
        }
        std::copy(m.begin(), m.end(), c.body.masses.begin());
      }
      maybe(g, "joint_limit", c.body.joint_limit);
      maybe(g, "joint_damping", c.body.joint_damping);
      maybe(g, "joint_rate_limit", c.body.joint_rate_limit);
    }
    if (j.contains("actuator")) {
      const auto& g = j.at("actuator");
      maybe(g, "gain", c.actuator.gain);
      maybe(g, "stiffness", c.actuator.stiffness);
      maybe(g, "damping", c.actuator.damping);
      maybe(g, "torque_limit", c.actuator.torque_limit);
    }
    if (j.contains("friction")) {
      const auto& g = j.at("friction");
      maybe(g, "mu_lateral", c.friction.mu_lateral);
      maybe(g, "mu_longitudinal_fwd", c.friction.mu_longitudinal_fwd);
      maybe(g, "mu_longitudinal_back", c.friction.mu_longitudinal_back);
      maybe(g, "smoothing_speed", c.friction.smoothing_speed);
    }
    if (j.contains("sensors")) {
      const auto& g = j.at("sensors");
      maybe(g, "a_sig", c.sensor_a_sig);
      maybe(g, "radius", c.sensor_radius);
      maybe(g, "k_e", c.sensor_k_e);
      maybe(g, "lateral_offset", c.sensor_lateral_offset);
    }
    maybe(j, "randomize_physics", c.randomize_physics);
    if (j.contains("obstacles")) {
      const auto& g = j.at("obstacles");
      if (g.contains("layout")) c.obstacles.layout = layout_from_string(g.at("layout"));
      if (g.contains("circles")) {
        for (const auto& e : g.at("circles")) {
          c.obstacles.circles.push_back(
              {{e.at(0).get<double>(), e.at(1).get<double>()}, e.at(2).get<double>()});
        }
      }
      maybe(g, "grid_rows", c.obstacles.grid_rows);
      maybe(g, "grid_cols", c.obstacles.grid_cols);
      maybe(g, "spacing_min", c.obstacles.spacing_min);
      maybe(g, "spacing_max", c.obstacles.spacing_max);
      maybe(g, "jitter_clip", c.obstacles.jitter_clip);
      maybe(g, "obstacle_radius", c.obstacles.obstacle_radius);
      maybe(g, "corridor_gap_min", c.obstacles.corridor_gap_min);
      maybe(g, "corridor_gap_max", c.obstacles.corridor_gap_max);
      if (g.contains("origin")) {
        c.obstacles.origin = {g.at("origin").at(0).get<double>(),
                              g.at("origin").at(1).get<double>()};
      }
    }
    if (j.contains("goals")) {
      for (const auto& e : j.at("goals")) {
        Goal goal;
        goal.position = {e.at("x").get<double>(), e.at("y").get<double>()};
        maybe(e, "radius", goal.radius);
        c.goals.push_back(goal);
      }
    }
    if (j.contains("limits")) {
      const auto& g = j.at("limits");
      maybe(g, "max_time", c.limits.max_time);
      maybe(g, "stall_timeout", c.limits.stall_timeout);
      maybe(g, "retreat_timeout_steps", c.limits.retreat_timeout_steps);
    }
    if (j.contains("start")) {
      const auto& g = j.at("start");
      c.start = {g.at("x").get<double>(), g.at("y").get<double>()};
      maybe(g, "heading", c.start_heading);
    }
    if (j.contains("reward")) {
      const auto& g = j.at("reward");
      maybe(g, "k_att", c.reward.k_att);
      maybe(g, "omega_1", c.reward.omega_1);
      maybe(g, "omega_2", c.reward.omega_2);
      maybe(g, "levels", c.reward.levels);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario: schema violation: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["cpg"] = {{"a", c.cpg_params.a},       {"b", c.cpg_params.b},
              {"tau_r", c.cpg_params.tau_r}, {"tau_a", c.cpg_params.tau_a},
              {"k_f", c.cpg_params.k_f},   {"c", c.cpg_params.c},
              {"w_descending", c.w_descending}, {"w_ascending", c.w_ascending},
              {"dt", c.dt_cpg}};
  j["controller"] = {{"mode", mode_to_string(c.controller.mode)},
                     {"steering_gain", c.controller.steering_gain},
                     {"attenuation", c.controller.attenuation},
                     {"bias_limit", c.controller.bias_limit},
                     {"epsilon", c.controller.epsilon}};
  j["body"] = {{"dt", c.dt_body},
               {"masses", std::vector<double>(c.body.masses.begin(), c.body.masses.end())},
               {"joint_limit", c.body.joint_limit},
               {"joint_damping", c.body.joint_damping},
               {"joint_rate_limit", c.body.joint_rate_limit}};
  j["actuator"] = {{"gain", c.actuator.gain},
                   {"stiffness", c.actuator.stiffness},
                   {"damping", c.actuator.damping},
                   {"torque_limit", c.actuator.torque_limit}};
  j["friction"] = {{"mu_lateral", c.friction.mu_lateral},
                   {"mu_longitudinal_fwd", c.friction.mu_longitudinal_fwd},
                   {"mu_longitudinal_back", c.friction.mu_longitudinal_back},
                   {"smoothing_speed", c.friction.smoothing_speed}};
  j["sensors"] = {{"a_sig", c.sensor_a_sig},
                  {"radius", c.sensor_radius},
                  {"k_e", c.sensor_k_e},
                  {"lateral_offset", c.sensor_lateral_offset}};
  j["randomize_physics"] = c.randomize_physics;
  json obs;
  obs["layout"] = layout_to_string(c.obstacles.layout);
  json circles = json::array();
  for (const auto& circ : c.obstacles.circles) {
    circles.push_back({circ.center.x(), circ.center.y(), circ.radius});
  }
  obs["circles"] = circles;
  obs["grid_rows"] = c.obstacles.grid_rows;
  obs["grid_cols"] = c.obstacles.grid_cols;
  obs["spacing_min"] = c.obstacles.spacing_min;
  obs["spacing_max"] = c.obstacles.spacing_max;
  obs["jitter_clip"] = c.obstacles.jitter_clip;
  obs["obstacle_radius"] = c.obstacles.obstacle_radius;
  obs["corridor_gap_min"] = c.obstacles.corridor_gap_min;
  obs["corridor_gap_max"] = c.obstacles.corridor_gap_max;
  obs["origin"] = {c.obstacles.origin.x(), c.obstacles.origin.y()};
  j["obstacles"] = obs;
  json goals = json::array();
  for (const auto& g : c.goals) {
    goals.push_back({{"x", g.position.x()}, {"y", g.position.y()}, {"radius", g.radius}});
  }
  j["goals"] = goals;
  j["limits"] = {{"max_time", c.limits.max_time},
                 {"stall_timeout", c.limits.stall_timeout},
                 {"retreat_timeout_steps", c.limits.retreat_timeout_steps}};
  j["start"] = {{"x", c.start.x()}, {"y", c.start.y()}, {"heading", c.start_heading}};
  j["reward"] = {{"k_att", c.reward.k_att},
                 {"omega_1", c.reward.omega_1},
                 {"omega_2", c.reward.omega_2},
                 {"levels", c.reward.levels}};
  return j.dump(2);
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

// clipped standard Gaussian via Box-Muller
double clipped_gaussian(std::mt19937_64& rng, double clip) {
  const double u1 = std::max(static_cast<double>(rng() >> 11) * 0x1.0p-53, 1e-300);
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  const double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return std::clamp(g, -clip, clip);
}

}  // namespace

std::vector<tactile::Circle> generate_obstacles(const ObstacleConfig& config,
                                                std::uint64_t seed) {
  switch (config.layout) {
    case ObstacleLayout::None:
      return {};
    case ObstacleLayout::Explicit:
      return config.circles;
    case ObstacleLayout::TrainingGrid: {
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
      std::vector<tactile::Circle> out;
      const double r = config.obstacle_radius;
      // spacing is the surface gap between neighboring cans
      const double gap = uniform(rng, config.spacing_min, config.spacing_max);
      const double pitch = gap + 2.0 * r;
      for (int row = 0; row < config.grid_rows; ++row) {
        for (int col = 0; col < config.grid_cols; ++col) {
          Eigen::Vector2d center =
              config.origin + Eigen::Vector2d(row * pitch, col * pitch);
          center.x() += clipped_gaussian(rng, config.jitter_clip);
          center.y() += clipped_gaussian(rng, config.jitter_clip);
          out.push_back({center, r});
        }
      }
      return out;
    }
    case ObstacleLayout::EscapeCorridor: {
      std::mt19937_64 rng(seed ^ 0x6a09e667f3bcc909ULL);
      std::vector<tactile::Circle> out;
      const double r = config.obstacle_radius;
      // a straight channel with solid side walls and staggered interior
      // pegs; per-column passage widths vary with a draw from the
      // configured gap range, padded by a body-width clearance so the
      // slalom is passable by feel rather than impassable by size
      const double h = 0.5 * config.corridor_gap_max + 2.0 * r;  // inner half-width
      const double clearance = 2.5 * r;
      const double x0 = config.origin.x();
      const int n_cols = 5;
      double x = x0;
      double sign = 1.0;
      for (int i = 0; i < n_cols; ++i) {
        const double gap = uniform(rng, config.corridor_gap_min, config.corridor_gap_max);
        // passage between the peg surface and the far wall = gap + clearance
        const double y_peg = sign * (gap + clearance + r - h);
        out.push_back({{x, config.origin.y() + y_peg}, r});
        sign = -sign;
        x += 1.5 * (gap + 2.0 * r);
      }
      // overlapping circles make the walls impassable along the channel
      for (double wx = x0 - 2.0 * r; wx < x + 2.0 * r; wx += r) {
        out.push_back({{wx, config.origin.y() + h + r}, r});
        out.push_back({{wx, config.origin.y() - h - r}, r});
      }
      return out;
    }
  }
  return {};
}

}  // namespace snakecpg::harness
