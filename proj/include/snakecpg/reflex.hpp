#ifndef SNAKECPG_REFLEX_HPP
#define SNAKECPG_REFLEX_HPP

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "snakecpg/cpg.hpp"
#include "snakecpg/tactile.hpp"

namespace snakecpg::reflex {

// Local reflexive wiring: D[i] holds the 1-based aggregate-signal indices
// connected to CPG node i+1; J marks the connection direction per signal.
struct ReflexTopology {
  std::array<std::vector<std::size_t>, 4> d_sets{
      std::vector<std::size_t>{1},
      std::vector<std::size_t>{2, 3},
      std::vector<std::size_t>{3, 4, 5},
      std::vector<std::size_t>{5}};
  std::array<double, 5> j_markers{-1.0, -1.0, 1.0, 1.0, -1.0};
  double delta_plus = 1e-6;

  void validate() const;
};

// p_i^q = sum_{k in D_i} I^q(N_k) |N_k| / (sum_{k in D_i} |N_k| + delta+),
// with I^e(N) = max(0, -sgn(J_k N)) and I^f(N) = max(0, sgn(J_k N)).
std::array<cpg::PairInput, 4> reflex(const std::array<double, 5>& n_vector,
                                     const ReflexTopology& topology);

struct Observation {
  double goal_distance = 0.0;        // zeta_1 [m]
  double goal_angle = 0.0;           // zeta_2, deviation angle [rad]
  double forward_velocity = 0.0;     // zeta_3 [m/s]
  double lateral_velocity = 0.0;     // zeta_4 [m/s]
  std::array<double, 4> joint_angles{};     // zeta_5..8 [rad]
  std::array<double, 4> previous_action{};  // zeta_9..12
  double previous_option = 0.0;             // zeta_13
  double termination_probability = 0.0;     // zeta_14
  std::array<double, 5> contact{};          // zeta_15..19

  std::array<double, 19> flatten() const;
};

struct TrackerGains {
  double steering_gain = 1.2;   // tonic bias per rad of deviation
  double attenuation = 0.8;     // per-link decay of the steering bias
  double k_f = 1.0;             // frequency ratio selection
  // cap on the tonic asymmetry; past ~0.3 the rhythm can stall outright
  // when the free-response drive c is small
  double bias_limit = 0.5;
};

// Scripted goal-tracking stand-in for the trained locomotion policy:
// proportional steering on the deviation angle, saturated, complementary
// tonic pairs, bias attenuated down the chain.
std::array<cpg::PairInput, 4> goal_tracker(const Observation& obs,
                                           const TrackerGains& gains);

// True iff the raw per-node force vector exceeds epsilon in Euclidean norm.
bool event_trigger(std::span<const double> raw_forces, double epsilon);

// Action decoder: p^e = logistic(a), p^f = 1 - p^e.
std::array<cpg::PairInput, 4> decode_action(const std::array<double, 4>& action);

struct RewardParams {
  double k_att = 1.0;
  double omega_1 = 10.0;
  double omega_2 = 1.0;
  std::vector<double> levels{0.3, 0.2, 0.1};  // accepting radii, descending

  void validate() const;
};

double reward(const Eigen::Vector2d& head_position,
              const Eigen::Vector2d& head_velocity, double goal_angle,
              const Eigen::Vector2d& goal, const RewardParams& params);

enum class ControlMode {
  AfLocal,
  MpfLocal,
  AfLearningInterface,
  MpfLearningInterface,
  C1Only,
};

cpg::Form form_for_mode(ControlMode mode);

// External policy contract: Observation -> 4-vector action, queried only on
// steps where the event trigger fires.
using PolicyCallback = std::function<std::array<double, 4>(const Observation&)>;

class FeedbackMux {
 public:
  FeedbackMux(ControlMode mode, ReflexTopology topology, double epsilon,
              PolicyCallback policy = nullptr);

  ControlMode mode() const { return mode_; }

  // Feedback vector routed into the CPG for this step.
  std::array<cpg::PairInput, 4> route(const tactile::ContactFrame& frame,
                                      const Observation& obs) const;

 private:
  ControlMode mode_;
  ReflexTopology topology_;
  double epsilon_;
  PolicyCallback policy_;
};

}  // namespace snakecpg::reflex

#endif
