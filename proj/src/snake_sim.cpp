#include "snakecpg/snake_sim.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace snakecpg::sim {

namespace {

Eigen::Vector2d dir(double psi) { return {std::cos(psi), std::sin(psi)}; }
Eigen::Vector2d perp(double psi) { return {-std::sin(psi), std::cos(psi)}; }

}  // namespace

void FrictionModel::validate() const {
  if (!(mu_lateral > mu_longitudinal_fwd)) {
    throw std::invalid_argument("friction: mu_lateral must exceed mu_longitudinal_fwd");
  }
  if (!(mu_longitudinal_back > mu_longitudinal_fwd)) {
    throw std::invalid_argument("friction: mu_longitudinal_back must exceed mu_longitudinal_fwd");
  }
  if (!(smoothing_speed > 0.0)) {
    throw std::invalid_argument("friction: smoothing_speed must be > 0");
  }
}

double actuate(const ActuatorParams& params, double z, double angle, double rate) {
  if (!std::isfinite(z)) throw std::invalid_argument("actuate: non-finite z");
  const double tau =
      params.gain * z - params.stiffness * angle - params.damping * rate;
  return std::clamp(tau, -params.torque_limit, params.torque_limit);
}

World::World(BodyParams body, FrictionModel friction,
             std::vector<tactile::Circle> obstacles,
             std::vector<tactile::SensorNode> sensors)
    : body_(body),
      friction_(friction),
      obstacles_(std::move(obstacles)),
      sensors_(std::move(sensors)) {
  friction_.validate();
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    // uniform rod
    inertias_[i] = body_.masses[i] * body_.lengths[i] * body_.lengths[i] / 12.0;
  }
}

double World::body_heading(std::size_t i) const {
  double psi = q_(2);
  for (std::size_t j = 0; j < i; ++j) psi += q_(3 + static_cast<Eigen::Index>(j));
  return psi;
}

Eigen::Vector2d World::body_center(std::size_t i) const {
  Eigen::Vector2d r = q_.head<2>();
  if (i == 0) return r;
  r -= 0.5 * body_.lengths[0] * dir(body_heading(0));
  for (std::size_t k = 1; k < i; ++k) r -= body_.lengths[k] * dir(body_heading(k));
  r -= 0.5 * body_.lengths[i] * dir(body_heading(i));
  return r;
}

Eigen::Matrix<double, 2, 7> World::point_jacobian(
    std::size_t i, const Eigen::Vector2d& offset) const {
  Eigen::Matrix<double, 2, 7> jac = Eigen::Matrix<double, 2, 7>::Zero();
  jac(0, 0) = 1.0;
  jac(1, 1) = 1.0;
  // chain terms: r = (x,y) + sum_k c_k * dir(psi_k), psi_k depends on
  // q_2 and q_{3+j} for j < k
  auto add_chain = [&](std::size_t k, double coeff) {
    const Eigen::Vector2d dpsi = coeff * perp(body_heading(k));
    jac.col(2) += dpsi;
    for (std::size_t j = 0; j < k; ++j) jac.col(3 + static_cast<Eigen::Index>(j)) += dpsi;
  };
  if (i > 0) {
    add_chain(0, -0.5 * body_.lengths[0]);
    for (std::size_t k = 1; k < i; ++k) add_chain(k, -body_.lengths[k]);
    add_chain(i, -0.5 * body_.lengths[i]);
  }
  // body-frame offset on rod i
  const double psi = body_heading(i);
  const Eigen::Vector2d doff = offset.x() * perp(psi) - offset.y() * dir(psi);
  jac.col(2) += doff;
  for (std::size_t j = 0; j < i; ++j) jac.col(3 + static_cast<Eigen::Index>(j)) += doff;
  return jac;
}

void World::reset(const Eigen::Vector2d& head, double heading) {
  reset(head, heading, {});
}

void World::reset(const Eigen::Vector2d& head, double heading,
                  const std::array<double, kNumJoints>& joint_angles) {
  q_.setZero();
  v_.setZero();
  q_.head<2>() = head;
  q_(2) = heading;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    q_(3 + static_cast<Eigen::Index>(j)) = joint_angles[j];
  }
  step_index_ = 0;
}

std::array<tactile::BodyPose, kNumBodies> World::poses() const {
  std::array<tactile::BodyPose, kNumBodies> out;
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    out[i] = {body_center(i), body_heading(i)};
  }
  return out;
}

std::vector<double> World::step(const std::array<double, kNumJoints>& torques,
                                double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_body: dt must be > 0");

  // the Coriolis bias is quadratic in the spin rates and integrated
  // explicitly, so keep h * max|psi_dot| below a fixed phase budget;
  // contact impulses can briefly spin the chain far above gait rates
  constexpr double kMaxPhasePerStep = 0.004;  // [rad]
  constexpr int kMaxSubsteps = 256;
  std::vector<double> raw;
  double remaining = dt;
  for (int s = 0; s < kMaxSubsteps && remaining > 0.0; ++s) {
    double max_rate = std::abs(v_(2));
    double acc = v_(2);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      acc += v_(3 + static_cast<Eigen::Index>(j));
      max_rate = std::max(max_rate, std::abs(acc));
    }
    double h = remaining;
    if (h * max_rate > kMaxPhasePerStep) h = kMaxPhasePerStep / max_rate;
    if (s == kMaxSubsteps - 1) h = remaining;  // never lose simulated time
    auto sub_raw = step_once(torques, h);
    if (s == 0) raw = std::move(sub_raw);
    remaining -= h;
  }
  return raw;
}

std::vector<double> World::step_once(
    const std::array<double, kNumJoints>& torques, double dt) {

  // per-body angular velocities psi_dot_i = v2 + sum_{j<i} v_{3+j}
  std::array<double, kNumBodies> psi{}, psidot{};
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    psi[i] = body_heading(i);
    psidot[i] = v_(2);
    for (std::size_t j = 0; j < i; ++j) psidot[i] += v_(3 + static_cast<Eigen::Index>(j));
  }

  std::array<Eigen::Matrix<double, 2, 7>, kNumBodies> jv;
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    jv[i] = point_jacobian(i, Eigen::Vector2d::Zero());
  }

  Mat7 mass = Mat7::Zero();
  Vec7 force = Vec7::Zero();
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    mass.noalias() += body_.masses[i] * jv[i].transpose() * jv[i];
    // angular rows: Jw has ones at col 2 and cols 3..3+i-1
    // accumulate I * Jw^T Jw directly
    mass(2, 2) += inertias_[i];
    for (std::size_t j = 0; j < i; ++j) {
      const auto cj = 3 + static_cast<Eigen::Index>(j);
      mass(2, cj) += inertias_[i];
      mass(cj, 2) += inertias_[i];
      for (std::size_t k = 0; k < i; ++k) {
        mass(cj, 3 + static_cast<Eigen::Index>(k)) += inertias_[i];
      }
    }

    // Coriolis bias: r_ddot contains -dir(psi_k) * psidot_k^2 chain terms
    Eigen::Vector2d a_bias = Eigen::Vector2d::Zero();
    auto add_bias = [&](std::size_t k, double coeff) {
      a_bias -= coeff * dir(psi[k]) * psidot[k] * psidot[k];
    };
    if (i > 0) {
      add_bias(0, -0.5 * body_.lengths[0]);
      for (std::size_t k = 1; k < i; ++k) add_bias(k, -body_.lengths[k]);
      add_bias(i, -0.5 * body_.lengths[i]);
    }
    force.noalias() -= jv[i].transpose() * (body_.masses[i] * a_bias);
  }

  // joint torques act directly on the joint coordinates
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (!std::isfinite(torques[j])) {
      throw std::invalid_argument("step_body: non-finite joint torque");
    }
    force(3 + static_cast<Eigen::Index>(j)) += torques[j];
  }

  // anisotropic ground friction at rod centers, folded into the velocity
  // solve as a state-dependent viscous matrix so the near-rest stiction
  // slope (mu*g / smoothing_speed) stays stable at any dt
  Mat7 damping = Mat7::Zero();
  if (friction_enabled_) {
    for (std::size_t i = 0; i < kNumBodies; ++i) {
      const Eigen::Vector2d e_long = dir(psi[i]);
      const Eigen::Vector2d e_lat = perp(psi[i]);
      // two ground-contact samples per rod so spinning in place still sees
      // friction torque
      const double arm = 0.25 * body_.lengths[i];
      for (double off_x : {-arm, arm}) {
        const Eigen::Matrix<double, 2, 7> jp =
            point_jacobian(i, Eigen::Vector2d(off_x, 0.0));
        const Eigen::Vector2d vel = jp * v_;
        const double v_long = vel.dot(e_long);
        const double v_lat = vel.dot(e_lat);
        const double load = 0.5 * body_.masses[i] * body_.gravity;
        const double mu_long = v_long >= 0.0 ? friction_.mu_longitudinal_fwd
                                             : friction_.mu_longitudinal_back;
        // tanh(v/eps)/v: Coulomb magnitude at speed, mu*load/eps slope at rest
        auto coeff = [&](double mu, double v) {
          const double eps = friction_.smoothing_speed;
          const double av = std::abs(v);
          return av > 1e-12 * eps ? load * mu * std::tanh(av / eps) / av
                                  : load * mu / eps;
        };
        const double c_long = coeff(mu_long, v_long);
        const double c_lat = coeff(friction_.mu_lateral, v_lat);
        const Eigen::Matrix2d c_body = c_long * e_long * e_long.transpose() +
                                       c_lat * e_lat * e_lat.transpose();
        damping.noalias() += jp.transpose() * c_body * jp;
      }
    }
  }

  // elastic obstacle contacts at the sensor nodes (frictionless normals);
  // a critical normal dashpot, active only while approaching and folded
  // into the implicit solve, stops the spring from slingshotting the chain
  const auto pose = poses();
  std::vector<double> raw(sensors_.size(), 0.0);
  for (std::size_t s = 0; s < sensors_.size(); ++s) {
    const auto& node = sensors_[s];
    const std::size_t i = node.body_index - 1;
    const Eigen::Vector2d p = tactile::node_position(node, pose[i]);
    Eigen::Vector2d f_total = Eigen::Vector2d::Zero();
    Eigen::Matrix2d c_contact = Eigen::Matrix2d::Zero();
    const Eigen::Matrix<double, 2, 7> jp = point_jacobian(i, node.offset);
    const Eigen::Vector2d vel = jp * v_;
    for (const auto& obs : obstacles_) {
      const Eigen::Vector2d delta = p - obs.center;
      const double d = delta.norm();
      const double penetration = node.radius + obs.radius - d;
      if (penetration <= 0.0) continue;
      raw[s] += node.k_e * penetration;
      if (d > 1e-12) {
        const Eigen::Vector2d normal = delta / d;
        f_total += node.k_e * penetration * normal;
        if (vel.dot(normal) < 0.0) {
          const double c_n = 2.0 * std::sqrt(node.k_e * body_.masses[i]);
          c_contact.noalias() += c_n * normal * normal.transpose();
        }
      }
    }
    if (!f_total.isZero()) {
      force.noalias() += jp.transpose() * f_total;
      damping.noalias() += jp.transpose() * c_contact * jp;
    }
  }

  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto cj = 3 + static_cast<Eigen::Index>(j);
    damping(cj, cj) += body_.joint_damping;
    // servo slew limit: damping ramps up steeply once a joint overspeeds,
    // applied implicitly so it only ever removes energy
    const double overspeed =
        std::abs(v_(cj)) / body_.joint_rate_limit - 1.0;
    if (overspeed > 0.0) {
      damping(cj, cj) += 20.0 * body_.joint_damping * overspeed;
    }
  }

  // semi-implicit velocity update: (M + dt*C) v_new = M v + dt * F
  const Mat7 lhs = mass + dt * damping;
  const Vec7 v_new = lhs.llt().solve(mass * v_ + dt * force);
  if (!v_new.allFinite()) {
    throw std::runtime_error("step_body: solver divergence at step " +
                             std::to_string(step_index_));
  }
  v_ = v_new;
  q_ += dt * v_;

  // soft-chamber bend limit: inelastic stop. Zeroing the joint rate in
  // isolation can raise kinetic energy through the mass-matrix coupling,
  // so apply a generalized stop impulse v -= M^{-1} e_j * lambda instead,
  // which is guaranteed dissipative.
  const Eigen::LLT<Mat7> mass_llt(mass);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto cj = 3 + static_cast<Eigen::Index>(j);
    const bool hit_upper = q_(cj) > body_.joint_limit && v_(cj) > 0.0;
    const bool hit_lower = q_(cj) < -body_.joint_limit && v_(cj) < 0.0;
    q_(cj) = std::clamp(q_(cj), -body_.joint_limit, body_.joint_limit);
    if (!hit_upper && !hit_lower) continue;
    Vec7 unit = Vec7::Zero();
    unit(cj) = 1.0;
    const Vec7 minv_e = mass_llt.solve(unit);
    v_ -= minv_e * (v_(cj) / minv_e(cj));
  }
  ++step_index_;
  return raw;
}

SnakeBodyState World::state() const {
  SnakeBodyState s;
  s.bodies = poses();
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    const auto jv = point_jacobian(i, Eigen::Vector2d::Zero());
    s.linear_velocities[i] = jv * v_;
    double w = v_(2);
    for (std::size_t j = 0; j < i; ++j) w += v_(3 + static_cast<Eigen::Index>(j));
    s.angular_velocities[i] = w;
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto cj = 3 + static_cast<Eigen::Index>(j);
    s.joints[j] = {q_(cj), v_(cj)};
  }
  return s;
}

double World::kinetic_energy() const {
  double e = 0.0;
  for (std::size_t i = 0; i < kNumBodies; ++i) {
    const auto jv = point_jacobian(i, Eigen::Vector2d::Zero());
    const Eigen::Vector2d vel = jv * v_;
    double w = v_(2);
    for (std::size_t j = 0; j < i; ++j) w += v_(3 + static_cast<Eigen::Index>(j));
    e += 0.5 * body_.masses[i] * vel.squaredNorm() + 0.5 * inertias_[i] * w * w;
  }
  return e;
}

namespace {

double uniform(std::mt19937_64& rng, const std::array<double, 2>& range) {
  if (range[0] > range[1]) {
    throw std::invalid_argument("randomize: range low > high");
  }
  // 53-bit mantissa draw, stdlib-distribution-free for cross-version determinism
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return range[0] + (range[1] - range[0]) * u;
}

}  // namespace

RandomizedParams randomize(const RandomizationRanges& ranges, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RandomizedParams p;
  p.ground_friction = uniform(rng, ranges.ground_friction);
  p.wheel_friction = uniform(rng, ranges.wheel_friction);
  p.body_mass = uniform(rng, ranges.body_mass);
  p.tail_mass = uniform(rng, ranges.tail_mass);
  p.head_mass = uniform(rng, ranges.head_mass);
  p.torque_gain = uniform(rng, ranges.torque_gain);
  return p;
}

}  // namespace snakecpg::sim
