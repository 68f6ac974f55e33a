#ifndef SNAKECPG_SNAKE_SIM_HPP
#define SNAKECPG_SNAKE_SIM_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "snakecpg/tactile.hpp"

namespace snakecpg::sim {

inline constexpr std::size_t kNumBodies = 5;
inline constexpr std::size_t kNumJoints = 4;

struct BodyParams {
  // rod i spans rigid body i plus the adjoining soft-link halves
  std::array<double, kNumBodies> lengths{0.115, 0.17, 0.17, 0.17, 0.115};
  std::array<double, kNumBodies> masses{0.10, 0.055, 0.055, 0.055, 0.075};
  double joint_limit = 1.5707963267948966;  // soft-chamber bend limit [rad]
  double gravity = 9.81;
  // viscous joint damping applied implicitly inside the velocity solve, so
  // it stays stable regardless of the step size
  double joint_damping = 0.1;  // [N*m*s/rad]
  // servo speed limit; bounds how fast any single joint can slew
  double joint_rate_limit = 6.0;  // [rad/s]
};

struct FrictionModel {
  double mu_lateral = 0.8;
  double mu_longitudinal_fwd = 0.075;
  double mu_longitudinal_back = 0.4;
  double smoothing_speed = 1e-3;  // [m/s], tanh regularization scale

  void validate() const;
};

struct ActuatorParams {
  double gain = 0.5;      // torque per unit CPG output [N*m]
  double stiffness = 1.0;  // joint spring emulating the soft chamber [N*m/rad]
  double damping = 0.1;    // [N*m*s/rad]
  // chamber pressure is finite, so the commanded torque saturates; keeps
  // saturated feedback transients from whipping the chain
  double torque_limit = 1.5;  // [N*m]
};

// torque = G*z - k_s*angle - d_s*rate, saturated at +/- torque_limit
double actuate(const ActuatorParams& params, double z, double angle, double rate);

struct JointState {
  double angle = 0.0;
  double rate = 0.0;
};

struct SnakeBodyState {
  std::array<tactile::BodyPose, kNumBodies> bodies;
  std::array<Eigen::Vector2d, kNumBodies> linear_velocities;
  std::array<double, kNumBodies> angular_velocities{};
  std::array<JointState, kNumJoints> joints;
};

// Planar chain of 5 rods in generalized coordinates
// q = (x, y, psi_1, phi_1..phi_4); chain closure is exact by construction.
class World {
 public:
  World(BodyParams body, FrictionModel friction,
        std::vector<tactile::Circle> obstacles,
        std::vector<tactile::SensorNode> sensors);

  // Place the chain with the head rod center at `head`, all rods aligned
  // along `heading`, at rest.
  void reset(const Eigen::Vector2d& head, double heading);
  void reset(const Eigen::Vector2d& head, double heading,
             const std::array<double, kNumJoints>& joint_angles);

  // Semi-implicit step; returns raw per-sensor-node contact magnitudes
  // evaluated at the pre-step pose. Subdivides internally when body spin
  // rates are large, since the explicit Coriolis bias is only stable while
  // dt * |psi_dot| stays small. Throws on solver divergence.
  std::vector<double> step(const std::array<double, kNumJoints>& torques, double dt);

  SnakeBodyState state() const;
  std::array<tactile::BodyPose, kNumBodies> poses() const;
  const std::vector<tactile::Circle>& obstacles() const { return obstacles_; }
  const std::vector<tactile::SensorNode>& sensors() const { return sensors_; }
  const BodyParams& body() const { return body_; }
  const FrictionModel& friction() const { return friction_; }

  double kinetic_energy() const;
  void set_velocity(const Eigen::Matrix<double, 7, 1>& v) { v_ = v; }
  void disable_friction() { friction_enabled_ = false; }

  Eigen::Matrix<double, 7, 1> generalized_position() const { return q_; }
  Eigen::Matrix<double, 7, 1> generalized_velocity() const { return v_; }

 private:
  using Vec7 = Eigen::Matrix<double, 7, 1>;
  using Mat7 = Eigen::Matrix<double, 7, 7>;

  double body_heading(std::size_t i) const;
  Eigen::Vector2d body_center(std::size_t i) const;
  // Jacobian of a point attached to rod i at body-frame offset.
  Eigen::Matrix<double, 2, 7> point_jacobian(std::size_t i,
                                             const Eigen::Vector2d& offset) const;
  std::vector<double> step_once(const std::array<double, kNumJoints>& torques,
                                double dt);

  BodyParams body_;
  FrictionModel friction_;
  std::vector<tactile::Circle> obstacles_;
  std::vector<tactile::SensorNode> sensors_;
  std::array<double, kNumBodies> inertias_{};
  bool friction_enabled_ = true;
  std::uint64_t step_index_ = 0;
  Vec7 q_ = Vec7::Zero();
  Vec7 v_ = Vec7::Zero();
};

// Domain-randomization ranges; uniform per-seed sampling.
struct RandomizationRanges {
  std::array<double, 2> ground_friction{0.1, 1.5};
  std::array<double, 2> wheel_friction{0.05, 0.10};
  std::array<double, 2> body_mass{0.035, 0.075};
  std::array<double, 2> tail_mass{0.065, 0.085};
  std::array<double, 2> head_mass{0.075, 0.125};
  std::array<double, 2> torque_gain{0.3, 0.8};  // stands in for max link pressure
};

struct RandomizedParams {
  double ground_friction = 0.0;
  double wheel_friction = 0.0;
  double body_mass = 0.0;
  double tail_mass = 0.0;
  double head_mass = 0.0;
  double torque_gain = 0.0;
};

RandomizedParams randomize(const RandomizationRanges& ranges, std::uint64_t seed);

}  // namespace snakecpg::sim

#endif
