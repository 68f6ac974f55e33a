#include "snakecpg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace snakecpg::harness {

namespace {

double wrap_pi(double angle) { return std::remainder(angle, 2.0 * M_PI); }

struct PairTrace {
  std::vector<double> z, z_e, z_f;
};

// Single primitive pair driven by time-scheduled inputs.
PairTrace run_pair(const cpg::OscillatorParams& params, cpg::Form form,
                   cpg::FeedbackPolarity polarity, double dt, double duration,
                   const std::function<cpg::PairInput(double)>& u_of_t,
                   const std::function<cpg::PairInput(double)>& p_of_t) {
  cpg::CpgNetwork net = cpg::build_chain(1, params, 0.0, 0.0, form);
  net.polarity = polarity;
  auto state = cpg::zero_state(net);
  cpg::apply_symmetry_break(state);
  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  PairTrace trace;
  trace.z.reserve(steps);
  trace.z_e.reserve(steps);
  trace.z_f.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const auto u = u_of_t(t);
    const auto p = p_of_t(t);
    cpg::set_tonic(state, 0, u.e, u.f);
    cpg::set_feedback(state, 0, p.e, p.f);
    const auto out = cpg::step(net, state, dt);
    trace.z.push_back(out.z[0]);
    trace.z_e.push_back(out.z_e[0]);
    trace.z_f.push_back(out.z_f[0]);
  }
  return trace;
}

// Free-running period at constant inputs.
double free_period(const cpg::OscillatorParams& params, double dt,
                   const cpg::PairInput& u, const cpg::PairInput& p,
                   cpg::Form form = cpg::Form::Af) {
  const double duration = 120.0 * params.k_f;
  const auto trace = run_pair(
      params, form, cpg::FeedbackPolarity::Inhibiting, dt, duration,
      [&](double) { return u; }, [&](double) { return p; });
  const std::size_t n = trace.z.size();
  const double period = signal::estimate_period(trace.z, dt, n / 2, n);
  if (period <= 0.0) {
    throw std::runtime_error("free_period: no oscillation detected");
  }
  return period;
}

}  // namespace

std::string format_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_cell(row[i]);
    }
    out << '\n';
  }
}

std::vector<std::string> trace_columns() {
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= 4; ++i) {
    const std::string p = "pair" + std::to_string(i) + "_";
    for (const char* f : {"x_e", "x_f", "y_e", "y_f", "z", "u_e", "u_f", "p_e", "p_f"}) {
      cols.push_back(p + f);
    }
  }
  for (int i = 1; i <= 5; ++i) cols.push_back("N" + std::to_string(i));
  cols.insert(cols.end(), {"head_x", "head_y", "head_heading", "reward", "event"});
  return cols;
}

RunResult run(const ScenarioConfig& config,
              const std::optional<std::string>& trace_path,
              reflex::PolicyCallback policy) {
  config.validate();
  ScenarioConfig cfg = config;
  if (cfg.randomize_physics) {
    const auto rp = sim::randomize(cfg.randomization, cfg.seed);
    cfg.friction.mu_lateral = rp.ground_friction;
    cfg.friction.mu_longitudinal_fwd = rp.wheel_friction;
    cfg.friction.mu_longitudinal_back =
        std::max(2.0 * rp.wheel_friction, 0.25 * rp.ground_friction);
    // keep the friction model well ordered under extreme draws
    cfg.friction.mu_lateral =
        std::max(cfg.friction.mu_lateral, 2.0 * cfg.friction.mu_longitudinal_back);
    cfg.body.masses = {rp.head_mass, rp.body_mass, rp.body_mass, rp.body_mass,
                       rp.tail_mass};
    cfg.actuator.gain = rp.torque_gain;
  }

  const auto mode = cfg.controller.mode;
  cpg::CpgNetwork net = cpg::build_chain(4, cfg.cpg_params, cfg.w_descending,
                                         cfg.w_ascending, reflex::form_for_mode(mode));
  auto cpg_state = cpg::zero_state(net);
  for (std::size_t i = 0; i < 4; ++i) cpg::set_tonic(cpg_state, i, 0.5, 0.5);
  if (cfg.cpg_params.c > 0.0) cpg::apply_symmetry_break(cpg_state);

  std::array<double, 5> half_lengths{};
  for (std::size_t i = 0; i < sim::kNumBodies; ++i) half_lengths[i] = cfg.body.lengths[i] / 2.0;
  auto sensors = tactile::default_layout(half_lengths, cfg.sensor_lateral_offset,
                                         cfg.sensor_radius, cfg.sensor_k_e);
  const auto obstacles = generate_obstacles(cfg.obstacles, cfg.seed);
  // rate damping is handled implicitly by the world; the explicit torque
  // keeps only the gain and stiffness terms
  sim::BodyParams body = cfg.body;
  body.joint_damping = cfg.actuator.damping;
  sim::ActuatorParams actuator = cfg.actuator;
  actuator.damping = 0.0;
  sim::World world(body, cfg.friction, obstacles, sensors);
  world.reset(cfg.start, cfg.start_heading);

  reflex::FeedbackMux mux(mode, cfg.controller.topology, cfg.controller.epsilon,
                          std::move(policy));
  reflex::TrackerGains gains{cfg.controller.steering_gain, cfg.controller.attenuation,
                             cfg.cpg_params.k_f, cfg.controller.bias_limit};

  const auto substeps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.dt_body / cfg.dt_cpg)));
  const double dt_cpg = cfg.dt_body / static_cast<double>(substeps);
  const auto decision_stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.02 / cfg.dt_body)));

  RunResult result;
  std::size_t goal_index = 0;
  double t = 0.0;
  Eigen::Vector2d prev_head = world.poses()[0].position;
  double ref_dist = (cfg.goals[0].position - prev_head).norm();
  double ref_time = 0.0;
  int retreat_count = 0;
  std::vector<double> raw_forces(sensors.size(), 0.0);
  std::array<double, 4> prev_action{};

  // goal already satisfied at the start counts as an immediate success
  while (goal_index < cfg.goals.size() &&
         (cfg.goals[goal_index].position - prev_head).norm() <
             cfg.goals[goal_index].radius) {
    ++goal_index;
    ++result.summary.goals_reached;
  }
  if (goal_index >= cfg.goals.size()) {
    result.summary.success = true;
    result.summary.finish_time = 0.0;
    return result;
  }

  const auto max_steps =
      static_cast<std::size_t>(std::llround(cfg.limits.max_time / cfg.dt_body));
  for (std::size_t step = 0; step < max_steps; ++step) {
    const auto poses = world.poses();
    const auto body_state = world.state();
    const Goal& goal = cfg.goals[goal_index];

    // observation
    reflex::Observation obs;
    const Eigen::Vector2d head = poses[0].position;
    const Eigen::Vector2d to_goal = goal.position - head;
    obs.goal_distance = to_goal.norm();
    obs.goal_angle = wrap_pi(std::atan2(to_goal.y(), to_goal.x()) - poses[0].heading);
    const Eigen::Vector2d head_v = body_state.linear_velocities[0];
    const Eigen::Vector2d e_long{std::cos(poses[0].heading), std::sin(poses[0].heading)};
    const Eigen::Vector2d e_lat{-e_long.y(), e_long.x()};
    obs.forward_velocity = head_v.dot(e_long);
    obs.lateral_velocity = head_v.dot(e_lat);
    for (std::size_t j = 0; j < 4; ++j) obs.joint_angles[j] = body_state.joints[j].angle;
    obs.previous_action = prev_action;

    // tactile pipeline on pre-step pose
    tactile::ContactFrame frame;
    frame.raw = raw_forces;
    frame.normalized.clear();
    for (double f : frame.raw) frame.normalized.push_back(tactile::normalize(f, cfg.sensor_a_sig));
    frame.n_vector = tactile::aggregate(sensors, frame.normalized);
    obs.contact = frame.n_vector;

    const bool event = reflex::event_trigger(frame.raw, cfg.controller.epsilon);
    const auto u = reflex::goal_tracker(obs, gains);
    const auto p = mux.route(frame, obs);
    for (std::size_t i = 0; i < 4; ++i) {
      cpg::set_tonic(cpg_state, i, u[i].e, u[i].f);
      cpg::set_feedback(cpg_state, i, p[i].e, p[i].f);
      prev_action[i] = p[i].e - p[i].f;
    }

    cpg::CpgOutput out;
    for (std::size_t s = 0; s < substeps; ++s) out = cpg::step(net, cpg_state, dt_cpg);

    std::array<double, 4> torques{};
    for (std::size_t j = 0; j < 4; ++j) {
      torques[j] = sim::actuate(actuator, out.z[j], body_state.joints[j].angle,
                                body_state.joints[j].rate);
    }
    raw_forces = world.step(torques, cfg.dt_body);
    t += cfg.dt_body;

    const double r = reflex::reward(head, head_v, obs.goal_angle, goal.position, cfg.reward);
    result.summary.total_reward += r * cfg.dt_body;

    // trace row
    std::vector<double> row;
    row.reserve(47);
    row.push_back(t);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& pair = cpg_state.pairs[i];
      row.insert(row.end(), {pair.x_e, pair.x_f, pair.y_e, pair.y_f, out.z[i],
                             u[i].e, u[i].f, p[i].e, p[i].f});
    }
    row.insert(row.end(), frame.n_vector.begin(), frame.n_vector.end());
    row.insert(row.end(), {head.x(), head.y(), poses[0].heading, r, event ? 1.0 : 0.0});
    result.trace.push_back(std::move(row));
    ++result.summary.steps;

    const Eigen::Vector2d new_head = world.poses()[0].position;
    result.summary.path_length += (new_head - prev_head).norm();
    prev_head = new_head;

    const double dist = (goal.position - new_head).norm();
    if (dist < goal.radius) {
      ++result.summary.goals_reached;
      ++goal_index;
      if (goal_index >= cfg.goals.size()) {
        result.summary.success = true;
        result.summary.finish_time = t;
        break;
      }
      ref_dist = (cfg.goals[goal_index].position - new_head).norm();
      ref_time = t;
      retreat_count = 0;
      continue;
    }

    // stall: no >= 1 mm progress toward the goal within the stall window
    if (dist <= ref_dist - 0.001) {
      ref_dist = dist;
      ref_time = t;
    } else if (t - ref_time > cfg.limits.stall_timeout) {
      result.summary.failure_reason = "stall";
      result.summary.finish_time = t;
      break;
    }

    // retreat: sustained negative velocity in the goal direction, judged at
    // the 20 ms decision cadence
    if (step % decision_stride == 0) {
      const Eigen::Vector2d goal_dir = (goal.position - new_head).normalized();
      const auto vel = world.state().linear_velocities[0];
      if (vel.dot(goal_dir) < 0.0) {
        ++retreat_count;
        if (retreat_count > cfg.limits.retreat_timeout_steps) {
          result.summary.failure_reason = "retreat";
          result.summary.finish_time = t;
          break;
        }
      } else {
        retreat_count = 0;
      }
    }
  }

  if (!result.summary.success && result.summary.failure_reason.empty()) {
    result.summary.failure_reason = "timeout";
    result.summary.finish_time = t;
  }
  if (trace_path) write_csv(*trace_path, trace_columns(), result.trace);
  return result;
}

FeedbackComparison compare_feedback(const PulseSchedule& schedule,
                                    const cpg::OscillatorParams& params,
                                    double dt) {
  if (schedule.n_pulses < 1) throw std::invalid_argument("compare_feedback: no pulses");
  FeedbackComparison cmp;
  const cpg::PairInput tonic{schedule.tonic, schedule.tonic};
  cmp.period = free_period(params, dt, tonic, {0.0, 0.0});
  const double period = cmp.period;

  const double settle = 12.0 * period;
  const double gap = schedule.gap_periods * period;
  const double pulse_len = schedule.pulse_periods * period;
  const double duration = settle + schedule.n_pulses * gap + 4.0 * period;

  auto pulse_p = [&](double t) -> cpg::PairInput {
    if (t >= settle) {
      const double phase = std::fmod(t - settle, gap);
      const double k = std::floor((t - settle) / gap);
      if (k < schedule.n_pulses && phase < pulse_len) return {schedule.amplitude, 0.0};
    }
    return {0.0, 0.0};
  };

  for (cpg::Form form : {cpg::Form::Af, cpg::Form::Mpf}) {
    const auto trace = run_pair(params, form, cpg::FeedbackPolarity::Inhibiting, dt,
                                duration, [&](double) { return tonic; }, pulse_p);
    auto& metrics = form == cpg::Form::Af ? cmp.af : cmp.mpf;
    for (int k = 0; k < schedule.n_pulses; ++k) {
      const double t_on = settle + k * gap;
      const double slice_start = t_on - 4.0 * period;
      const auto i_start = static_cast<std::size_t>(std::llround(slice_start / dt));
      const auto i_end = std::min(trace.z.size(),
                                  static_cast<std::size_t>(std::llround((t_on + gap) / dt)));
      std::span<const double> z(trace.z);
      metrics.push_back(signal::measure(z.subspan(i_start, i_end - i_start), dt,
                                        t_on - slice_start, t_on + pulse_len - slice_start));
    }
  }
  return cmp;
}

BiasSweepReport bias_sweep(const cpg::OscillatorParams& params, double dt,
                           std::vector<double> grid) {
  BiasSweepReport report;
  const auto slopes = signal::prop1_predicted_slopes(params);
  report.predicted_coeff_u = slopes.coeff_u;
  report.predicted_coeff_p = slopes.coeff_p;
  report.grid = grid;

  // operating-point frequency: duty 0.5 on both channels averages to 0.5
  report.period = free_period(params, dt, {0.5, 0.5}, {0.5, 0.5});
  const double period = report.period;

  const double settle = 50.0 * period;
  const double measure_periods = 10.0;
  const double duration = settle + (measure_periods + 1.0) * period;
  const double carrier = period / 16.0;  // fast PWM carrier for the feedback

  const auto n = grid.size();
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n * n), 3);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n * n));
  Eigen::Index row = 0;
  for (double bias_u : grid) {
    for (double bias_p : grid) {
      const double duty_u = 0.5 * (1.0 + bias_u);
      const double duty_p = 0.5 * (1.0 + bias_p);
      // tonic square phase-referenced to upward crossings of z so that u_e
      // stays aligned with the extensor lobe as the duty varies
      cpg::CpgNetwork net = cpg::build_chain(1, params, 0.0, 0.0, cpg::Form::Af);
      auto state = cpg::zero_state(net);
      cpg::apply_symmetry_break(state);
      const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
      std::vector<double> z_trace;
      z_trace.reserve(steps);
      double z_prev = 0.0;
      double t_up = 0.0;
      for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double phase = std::fmod((t - t_up) / period, 1.0);
        const double u_e = phase < duty_u ? 1.0 : 0.0;
        const double p_e =
            std::fmod(t, carrier) < duty_p * carrier ? 1.0 : 0.0;
        cpg::set_tonic(state, 0, u_e, 1.0 - u_e);
        cpg::set_feedback(state, 0, p_e, 1.0 - p_e);
        const auto out = cpg::step(net, state, dt);
        if (z_prev <= 0.0 && out.z[0] > 0.0 && t - t_up > 0.5 * period) {
          t_up = t;
        }
        z_prev = out.z[0];
        z_trace.push_back(out.z[0]);
      }
      // integer number of drive periods for the bias average
      const auto samples_per_period = static_cast<std::size_t>(std::llround(period / dt));
      const std::size_t n_meas =
          samples_per_period * static_cast<std::size_t>(measure_periods);
      const std::size_t i1 = z_trace.size();
      const std::size_t i0 = i1 - n_meas;
      const double bias_z = signal::mean(z_trace, i0, i1);
      report.measured_bias.push_back(bias_z);
      design(row, 0) = 1.0;
      design(row, 1) = bias_u;
      design(row, 2) = bias_p;
      rhs(row) = bias_z;
      ++row;
    }
  }

  const Eigen::Vector3d beta =
      (design.transpose() * design).ldlt().solve(design.transpose() * rhs);
  report.fitted_coeff_u = beta(1);
  report.fitted_coeff_p = beta(2);
  const Eigen::VectorXd residual = rhs - design * beta;
  const double ss_res = residual.squaredNorm();
  const double mean_rhs = rhs.mean();
  const double ss_tot = (rhs.array() - mean_rhs).square().sum();
  report.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return report;
}

StallReport stall_experiment(const cpg::OscillatorParams& params, double dt,
                             double hold_periods) {
  StallReport report;
  const cpg::PairInput tonic{0.5, 0.5};
  report.period = free_period(params, dt, tonic, {0.0, 0.0});
  const double period = report.period;
  const double settle = 20.0 * period;
  const double hold = hold_periods * period;
  const double duration = settle + hold;

  for (auto polarity :
       {cpg::FeedbackPolarity::Inhibiting, cpg::FeedbackPolarity::Activating}) {
    const auto trace = run_pair(
        params, cpg::Form::Af, polarity, dt, duration,
        [&](double) { return tonic; },
        [&](double t) -> cpg::PairInput {
          return t >= settle ? cpg::PairInput{1.0, 1.0} : cpg::PairInput{0.0, 0.0};
        });
    const auto i0 = static_cast<std::size_t>(std::llround(settle / dt));
    const double fraction =
        signal::stall_fraction(trace.z_e, trace.z_f, i0, trace.z_e.size());
    if (polarity == cpg::FeedbackPolarity::Inhibiting) {
      report.inhibiting_fraction = fraction;
    } else {
      report.activating_fraction = fraction;
    }
  }
  return report;
}

double EscapeTable::success_rate(reflex::ControlMode mode,
                                 std::optional<double> c) const {
  std::size_t total = 0, ok = 0;
  for (const auto& cell : cells) {
    if (cell.mode != mode) continue;
    if (c && *c != cell.c) continue;
    ++total;
    if (cell.summary.success) ++ok;
  }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
}

double EscapeTable::mean_finish_time(reflex::ControlMode mode,
                                     std::optional<double> c) const {
  // failed runs count at the full time budget
  std::size_t total = 0;
  double acc = 0.0;
  for (const auto& cell : cells) {
    if (cell.mode != mode) continue;
    if (c && *c != cell.c) continue;
    ++total;
    acc += cell.summary.finish_time;
  }
  return total ? acc / static_cast<double>(total) : 0.0;
}

ScenarioConfig escape_scenario() {
  ScenarioConfig cfg;
  cfg.cpg_params.c = 0.2;
  cfg.cpg_params.k_f = 0.3;  // faster desk-scale gait
  cfg.actuator.gain = 4.0;   // enough torque authority at low c
  // a saturated steering bias stalls the rhythm at low c, so cap it well
  // below the open-field default
  cfg.controller.bias_limit = 0.2;
  cfg.obstacles.layout = ObstacleLayout::EscapeCorridor;
  cfg.obstacles.origin = {0.35, 0.0};
  cfg.start = {0.0, 0.0};
  cfg.start_heading = 0.0;
  // corridor exit points back toward -x; the goal sits past the obstacle
  // field on the far side, 540 mm beyond the last column
  cfg.goals.push_back({{1.9, 0.0}, 0.1});
  cfg.limits.max_time = 180.0;
  cfg.limits.stall_timeout = 20.0;
  cfg.limits.retreat_timeout_steps = 360;
  return cfg;
}

EscapeTable escape_benchmark(const std::vector<reflex::ControlMode>& modes,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<double>& c_values,
                             const ScenarioConfig& base) {
  EscapeTable table;
  for (auto mode : modes) {
    for (double c : c_values) {
      for (auto seed : seeds) {
        ScenarioConfig cfg = base;
        cfg.controller.mode = mode;
        cfg.cpg_params.c = c;
        cfg.seed = seed;
        auto result = run(cfg);
        if (!result.summary.success) {
          result.summary.finish_time = cfg.limits.max_time;
        }
        table.cells.push_back({mode, c, seed, result.summary});
      }
    }
  }
  return table;
}

}  // namespace snakecpg::harness
