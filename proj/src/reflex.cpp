#include "snakecpg/reflex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snakecpg::reflex {

void ReflexTopology::validate() const {
  if (!(delta_plus > 0.0)) {
    throw std::invalid_argument("reflex topology: delta_plus must be > 0");
  }
  for (const auto& d : d_sets) {
    for (std::size_t k : d) {
      if (k < 1 || k > 5) {
        throw std::invalid_argument("reflex topology: sensor index out of 1..5");
      }
    }
  }
}

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::array<cpg::PairInput, 4> reflex(const std::array<double, 5>& n_vector,
                                     const ReflexTopology& topology) {
  topology.validate();
  std::array<cpg::PairInput, 4> p{};
  for (std::size_t i = 0; i < 4; ++i) {
    double num_e = 0.0, num_f = 0.0, denom = 0.0;
    for (std::size_t k : topology.d_sets[i]) {
      const double n_k = n_vector[k - 1];
      const double jn = topology.j_markers[k - 1] * n_k;
      num_e += std::max(0.0, -sgn(jn)) * std::abs(n_k);
      num_f += std::max(0.0, sgn(jn)) * std::abs(n_k);
      denom += std::abs(n_k);
    }
    denom += topology.delta_plus;
    p[i] = {num_e / denom, num_f / denom};
  }
  return p;
}

std::array<double, 19> Observation::flatten() const {
  return {goal_distance,
          goal_angle,
          forward_velocity,
          lateral_velocity,
          joint_angles[0],
          joint_angles[1],
          joint_angles[2],
          joint_angles[3],
          previous_action[0],
          previous_action[1],
          previous_action[2],
          previous_action[3],
          previous_option,
          termination_probability,
          contact[0],
          contact[1],
          contact[2],
          contact[3],
          contact[4]};
}

std::array<cpg::PairInput, 4> goal_tracker(const Observation& obs,
                                           const TrackerGains& gains) {
  std::array<cpg::PairInput, 4> u{};
  // positive output bias arcs the body clockwise, so steer with the
  // negated bearing error
  double bias = std::clamp(-gains.steering_gain * obs.goal_angle,
                           -gains.bias_limit, gains.bias_limit);
  for (std::size_t i = 0; i < 4; ++i) {
    u[i] = {0.5 + bias, 0.5 - bias};
    bias *= gains.attenuation;
  }
  return u;
}

bool event_trigger(std::span<const double> raw_forces, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("event_trigger: epsilon <= 0");
  double sq = 0.0;
  for (double f : raw_forces) sq += f * f;
  return std::sqrt(sq) > epsilon;
}

std::array<cpg::PairInput, 4> decode_action(const std::array<double, 4>& action) {
  std::array<cpg::PairInput, 4> p{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!std::isfinite(action[i])) {
      throw std::invalid_argument("decode_action: non-finite action component");
    }
    const double pe = 1.0 / (1.0 + std::exp(-action[i]));
    p[i] = {pe, 1.0 - pe};
  }
  return p;
}

void RewardParams::validate() const {
  if (!(k_att > 0.0)) throw std::invalid_argument("reward: k_att must be > 0");
  if (!std::isfinite(omega_1) || !std::isfinite(omega_2)) {
    throw std::invalid_argument("reward: non-finite weight");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] < levels[i - 1])) {
      throw std::invalid_argument("reward: accepting radii must be strictly decreasing");
    }
  }
}

double reward(const Eigen::Vector2d& head_position,
              const Eigen::Vector2d& head_velocity, double goal_angle,
              const Eigen::Vector2d& goal, const RewardParams& params) {
  params.validate();
  const double rho = (head_position - goal).norm();
  double r_goal = 0.0;
  for (double l : params.levels) {
    if (rho < l) r_goal += 1.0 / l;
  }
  r_goal *= std::cos(goal_angle);
  const Eigen::Vector2d f_att = -params.k_att * (head_position - goal);
  const double r_att = head_velocity.dot(f_att);
  return params.omega_1 * r_goal + params.omega_2 * r_att;
}

cpg::Form form_for_mode(ControlMode mode) {
  switch (mode) {
    case ControlMode::AfLocal:
    case ControlMode::AfLearningInterface:
      return cpg::Form::Af;
    case ControlMode::MpfLocal:
    case ControlMode::MpfLearningInterface:
      return cpg::Form::Mpf;
    case ControlMode::C1Only:
      return cpg::Form::Original;
  }
  throw std::invalid_argument("unknown control mode");
}

FeedbackMux::FeedbackMux(ControlMode mode, ReflexTopology topology,
                         double epsilon, PolicyCallback policy)
    : mode_(mode),
      topology_(std::move(topology)),
      epsilon_(epsilon),
      policy_(std::move(policy)) {
  topology_.validate();
  if (!(epsilon_ > 0.0)) {
    throw std::invalid_argument("feedback mux: epsilon must be > 0");
  }
  const bool needs_policy = mode_ == ControlMode::AfLearningInterface ||
                            mode_ == ControlMode::MpfLearningInterface;
  if (needs_policy && !policy_) {
    throw std::invalid_argument(
        "feedback mux: learning-interface mode requires an attached policy");
  }
}

std::array<cpg::PairInput, 4> FeedbackMux::route(
    const tactile::ContactFrame& frame, const Observation& obs) const {
  switch (mode_) {
    case ControlMode::C1Only:
      return {};
    case ControlMode::AfLocal:
    case ControlMode::MpfLocal:
      return reflex(frame.n_vector, topology_);
    case ControlMode::AfLearningInterface:
    case ControlMode::MpfLearningInterface:
      if (event_trigger(frame.raw, epsilon_)) return decode_action(policy_(obs));
      return {};
  }
  throw std::invalid_argument("unknown control mode");
}

}  // namespace snakecpg::reflex
