#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "snakecpg/tactile.hpp"

using namespace snakecpg;

namespace {

std::array<double, 5> half_lengths() {
  return {0.0575, 0.085, 0.085, 0.085, 0.0575};
}

std::array<tactile::BodyPose, 5> straight_poses() {
  std::array<tactile::BodyPose, 5> poses;
  const auto hl = half_lengths();
  double x = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    x -= hl[i];
    poses[i].position = {x, 0.0};
    poses[i].heading = 0.0;
    x -= hl[i];
  }
  return poses;
}

}  // namespace

TEST_CASE("force_magnitude is the Euclidean norm") {
  CHECK(tactile::force_magnitude(3.0, 4.0, 0.0) == doctest::Approx(5.0));
  CHECK(tactile::force_magnitude(0.0, 0.0, 0.0) == 0.0);
}

TEST_CASE("normalize is a bounded odd-centered sigmoid") {
  CHECK(tactile::normalize(0.0, 2.0) == 0.0);
  CHECK(tactile::normalize(-1.0, 2.0) == tactile::normalize(1.0, 2.0));
  double prev = 0.0;
  for (double f : {0.1, 0.5, 1.0, 5.0}) {
    const double n = tactile::normalize(f, 2.0);
    CHECK(n > prev);
    CHECK(n < 1.0);
    prev = n;
  }
  // saturates to 1 within double precision for extreme forces
  CHECK(tactile::normalize(100.0, 2.0) <= 1.0);
}

TEST_CASE("default_layout places twelve nodes, two per side on the head") {
  const auto hl = half_lengths();
  const auto nodes = tactile::default_layout(hl, 0.025, 0.02, 200.0);
  REQUIRE(nodes.size() == 12);
  std::array<std::array<int, 2>, 5> count{};
  for (const auto& n : nodes) {
    REQUIRE(n.body_index >= 1);
    REQUIRE(n.body_index <= 5);
    ++count[n.body_index - 1][n.side == tactile::Side::Extensor ? 0 : 1];
    CHECK(n.radius == 0.02);
    CHECK(n.k_e == 200.0);
  }
  CHECK(count[0][0] == 2);
  CHECK(count[0][1] == 2);
  for (std::size_t i = 1; i < 5; ++i) {
    CHECK(count[i][0] == 1);
    CHECK(count[i][1] == 1);
  }
}

TEST_CASE("node_position applies the body rotation") {
  tactile::SensorNode node;
  node.offset = {0.1, 0.025};
  tactile::BodyPose pose;
  pose.position = {1.0, 2.0};
  pose.heading = M_PI / 2.0;
  const auto p = tactile::node_position(node, pose);
  CHECK(p.x() == doctest::Approx(1.0 - 0.025));
  CHECK(p.y() == doctest::Approx(2.0 + 0.1));
}

TEST_CASE("sense reports spring force proportional to penetration depth") {
  const auto hl = half_lengths();
  const auto nodes = tactile::default_layout(hl, 0.025, 0.02, 200.0);
  const auto poses = straight_poses();
  // place a circle so it penetrates exactly one node by a known depth
  const auto target = tactile::node_position(nodes[0], poses[nodes[0].body_index - 1]);
  const double pen = 0.005;
  tactile::Circle obs;
  obs.radius = 0.05;
  obs.center = target + Eigen::Vector2d(0.0, obs.radius + nodes[0].radius - pen);
  const auto raw = tactile::sense(nodes, poses, std::vector<tactile::Circle>{obs});
  REQUIRE(raw.size() == nodes.size());
  CHECK(raw[0] == doctest::Approx(nodes[0].k_e * pen).epsilon(1e-9));
  // no other node overlaps the circle
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const auto pi = tactile::node_position(nodes[i], poses[nodes[i].body_index - 1]);
    if ((pi - obs.center).norm() > obs.radius + nodes[i].radius) CHECK(raw[i] == 0.0);
  }
}

TEST_CASE("sense is zero without penetration") {
  const auto hl = half_lengths();
  const auto nodes = tactile::default_layout(hl, 0.025, 0.02, 200.0);
  const auto poses = straight_poses();
  tactile::Circle far{{10.0, 10.0}, 0.05};
  for (double r : tactile::sense(nodes, poses, std::vector<tactile::Circle>{far}))
    CHECK(r == 0.0);
}

TEST_CASE("aggregate signs extensor readings positive and flexor negative") {
  const auto hl = half_lengths();
  const auto nodes = tactile::default_layout(hl, 0.025, 0.02, 200.0);
  std::vector<double> normalized(nodes.size(), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].body_index == 3) {
      normalized[i] = nodes[i].side == tactile::Side::Extensor ? 0.4 : 0.1;
    }
  }
  const auto n = tactile::aggregate(nodes, normalized);
  CHECK(n[2] == doctest::Approx(0.3));
  CHECK(n[0] == 0.0);
  CHECK(n[4] == 0.0);
  CHECK_THROWS_AS(tactile::aggregate(nodes, std::vector<double>(3, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("contact_frame composes sense, normalize and aggregate") {
  const auto hl = half_lengths();
  const auto nodes = tactile::default_layout(hl, 0.025, 0.02, 200.0);
  const auto poses = straight_poses();
  const auto target = tactile::node_position(nodes[0], poses[nodes[0].body_index - 1]);
  tactile::Circle obs;
  obs.radius = 0.05;
  obs.center = target + Eigen::Vector2d(0.0, obs.radius + nodes[0].radius - 0.004);
  const auto frame =
      tactile::contact_frame(nodes, poses, std::vector<tactile::Circle>{obs}, 2.0);
  REQUIRE(frame.raw.size() == nodes.size());
  REQUIRE(frame.normalized.size() == nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    CHECK(frame.normalized[i] == doctest::Approx(tactile::normalize(frame.raw[i], 2.0)));
  CHECK(frame.n_vector == tactile::aggregate(nodes, frame.normalized));
}

TEST_CASE("monomial enumeration") {
  CHECK(tactile::monomial_count(2) == 6);
  const auto m = tactile::monomials(2.0, 3.0, 2);
  REQUIRE(m.size() == 6);
  // k = 0..2, i = 0..k as B_z^i * B_r^(k-i)
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(3.0));
  CHECK(m[2] == doctest::Approx(2.0));
  CHECK(m[3] == doctest::Approx(9.0));
  CHECK(m[4] == doctest::Approx(6.0));
  CHECK(m[5] == doctest::Approx(4.0));
}

TEST_CASE("polynomial fit round-trips synthetic order-2 coefficients") {
  const std::vector<double> c_z{0.2, -1.1, 0.7, 0.05, -0.3, 0.9};
  const std::vector<double> c_r{-0.4, 0.6, 1.3, -0.8, 0.2, 0.1};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<tactile::MagneticSample> samples;
  for (int i = 0; i < 60; ++i) {
    tactile::MagneticSample s;
    s.b_z = dist(rng);
    s.b_r = dist(rng);
    const auto m = tactile::monomials(s.b_z, s.b_r, 2);
    for (std::size_t k = 0; k < m.size(); ++k) {
      s.f_z += c_z[k] * m[k];
      s.f_r += c_r[k] * m[k];
    }
    samples.push_back(s);
  }
  const auto cal = tactile::fit_force_polynomial(
      samples, 2, std::numeric_limits<double>::infinity());
  REQUIRE(cal.c_z.size() == 6);
  double residual = 0.0;
  for (const auto& s : samples) {
    const auto [fz, fr] = tactile::eval_calibration(cal, s.b_z, s.b_r);
    residual = std::max({residual, std::abs(fz - s.f_z), std::abs(fr - s.f_r)});
  }
  CHECK(residual < 1e-6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(cal.c_z[k] == doctest::Approx(c_z[k]).epsilon(1e-6));
    CHECK(cal.c_r[k] == doctest::Approx(c_r[k]).epsilon(1e-6));
  }
}

TEST_CASE("polynomial fit rejects underdetermined sample sets") {
  std::vector<tactile::MagneticSample> few(3);
  CHECK_THROWS(tactile::fit_force_polynomial(
      few, 2, std::numeric_limits<double>::infinity()));
}

TEST_CASE("weighted local fit reproduces the field near the query point") {
  // a cubic field is not exactly order-2, but a tight Gaussian window makes
  // the local quadratic model nearly exact at the query
  auto field = [](double bz, double br) { return bz * bz * bz + 0.5 * br * br - bz; };
  std::vector<tactile::MagneticSample> samples;
  for (double bz = -1.0; bz <= 1.0; bz += 0.1) {
    for (double br = -1.0; br <= 1.0; br += 0.1) {
      tactile::MagneticSample s;
      s.b_z = bz;
      s.b_r = br;
      s.f_z = field(bz, br);
      s.f_r = -field(br, bz);
      samples.push_back(s);
    }
  }
  const Eigen::Vector2d query{0.3, -0.2};
  const auto cal = tactile::fit_force_polynomial(samples, 2, 0.15, query);
  const auto [fz, fr] = tactile::eval_calibration(cal, query.x(), query.y());
  CHECK(fz == doctest::Approx(field(query.x(), query.y())).epsilon(5e-3));
  CHECK(fr == doctest::Approx(-field(query.y(), query.x())).epsilon(5e-3));
}
