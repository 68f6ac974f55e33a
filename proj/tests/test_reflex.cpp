#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "snakecpg/reflex.hpp"

using namespace snakecpg;

TEST_CASE("reflex returns zero feedback for zero contact") {
  const reflex::ReflexTopology topo;
  const auto p = reflex::reflex({0.0, 0.0, 0.0, 0.0, 0.0}, topo);
  for (const auto& pair : p) {
    CHECK(pair.e == 0.0);
    CHECK(pair.f == 0.0);
  }
}

TEST_CASE("tail-right contact activates the rear flexors") {
  const reflex::ReflexTopology topo;
  // N_5 = -0.6 with J_5 = -1 gives a positive direction marker, activating
  // the flexor channels of the two nodes whose sets contain signal 5
  const auto p = reflex::reflex({0.0, 0.0, 0.0, 0.0, -0.6}, topo);
  CHECK(p[2].f == doctest::Approx(0.6 / (0.6 + topo.delta_plus)));
  CHECK(p[2].e == 0.0);
  CHECK(p[3].f == doctest::Approx(0.6 / (0.6 + topo.delta_plus)));
  CHECK(p[3].e == 0.0);
  CHECK(p[0].e == 0.0);
  CHECK(p[0].f == 0.0);
  CHECK(p[1].e == 0.0);
  CHECK(p[1].f == 0.0);
}

TEST_CASE("balanced opposing contacts split the feedback evenly") {
  const reflex::ReflexTopology topo;
  // signals 3 and 4 both feed node 3; J_3 = +1, J_4 = +1, so equal and
  // opposite aggregates load both channels equally
  const auto p = reflex::reflex({0.0, 0.0, 0.5, -0.5, 0.0}, topo);
  CHECK(p[2].e == doctest::Approx(0.5 / (1.0 + topo.delta_plus)));
  CHECK(p[2].f == doctest::Approx(0.5 / (1.0 + topo.delta_plus)));
  CHECK(std::abs(p[2].e - p[2].f) < 1e-12);
}

TEST_CASE("reflex output partitions the saturation budget") {
  const reflex::ReflexTopology topo;
  for (const std::array<double, 5> n :
       {std::array<double, 5>{0.3, -0.2, 0.7, 0.1, -0.4},
        std::array<double, 5>{-1.0, 1.0, -1.0, 1.0, -1.0},
        std::array<double, 5>{0.0, 0.05, 0.0, 0.0, 0.9}}) {
    const auto p = reflex::reflex(n, topo);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(p[i].e >= 0.0);
      CHECK(p[i].f >= 0.0);
      double sum_abs = 0.0;
      for (std::size_t k : topo.d_sets[i]) sum_abs += std::abs(n[k - 1]);
      CHECK(p[i].e + p[i].f ==
            doctest::Approx(sum_abs / (sum_abs + topo.delta_plus)).epsilon(1e-12));
    }
  }
}

TEST_CASE("topology validation rejects out-of-range signal indices") {
  reflex::ReflexTopology topo;
  CHECK_NOTHROW(topo.validate());
  topo.d_sets[0] = {6};
  CHECK_THROWS(topo.validate());
  topo.d_sets[0] = {0};
  CHECK_THROWS(topo.validate());
}

TEST_CASE("goal_tracker steers with complementary attenuated tonic pairs") {
  reflex::TrackerGains gains;
  reflex::Observation obs;
  obs.goal_angle = 0.2;
  const auto u = reflex::goal_tracker(obs, gains);
  double prev_bias = 1e9;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(u[i].e + u[i].f == doctest::Approx(1.0));
    const double bias = u[i].e - u[i].f;
    CHECK(std::abs(bias) < std::abs(prev_bias));
    prev_bias = bias;
  }
  // zero deviation gives the symmetric drive
  obs.goal_angle = 0.0;
  for (const auto& pair : reflex::goal_tracker(obs, gains)) {
    CHECK(pair.e == doctest::Approx(0.5));
    CHECK(pair.f == doctest::Approx(0.5));
  }
}

TEST_CASE("goal_tracker saturates at the configured bias limit") {
  reflex::TrackerGains gains;
  gains.bias_limit = 0.2;
  reflex::Observation obs;
  obs.goal_angle = -2.0;  // demands far more steering than the cap allows
  const auto u = reflex::goal_tracker(obs, gains);
  CHECK(std::abs(u[0].e - u[0].f) == doctest::Approx(2.0 * gains.bias_limit));
  // mirrored deviation mirrors the tonic pair
  obs.goal_angle = 2.0;
  const auto v = reflex::goal_tracker(obs, gains);
  CHECK(v[0].e == doctest::Approx(u[0].f));
  CHECK(v[0].f == doctest::Approx(u[0].e));
}

TEST_CASE("event_trigger thresholds the raw force norm") {
  std::vector<double> quiet(12, 0.001);
  std::vector<double> loud(12, 0.0);
  loud[3] = 0.2;
  CHECK_FALSE(reflex::event_trigger(quiet, 0.05));
  CHECK(reflex::event_trigger(loud, 0.05));
}

TEST_CASE("decode_action is a complementary logistic pair") {
  const auto p = reflex::decode_action({0.0, 2.0, -2.0, 10.0});
  CHECK(p[0].e == doctest::Approx(0.5));
  CHECK(p[0].f == doctest::Approx(0.5));
  for (const auto& pair : p) CHECK(pair.e + pair.f == doctest::Approx(1.0));
  CHECK(p[1].e > 0.5);
  CHECK(p[2].e < 0.5);
  CHECK(p[3].e > 0.99);
}

TEST_CASE("observation flattens to nineteen entries in declared order") {
  reflex::Observation obs;
  obs.goal_distance = 1.0;
  obs.goal_angle = 2.0;
  obs.forward_velocity = 3.0;
  obs.lateral_velocity = 4.0;
  obs.joint_angles = {5.0, 6.0, 7.0, 8.0};
  obs.previous_action = {9.0, 10.0, 11.0, 12.0};
  obs.previous_option = 13.0;
  obs.termination_probability = 14.0;
  obs.contact = {15.0, 16.0, 17.0, 18.0, 19.0};
  const auto flat = obs.flatten();
  for (std::size_t i = 0; i < flat.size(); ++i)
    CHECK(flat[i] == doctest::Approx(static_cast<double>(i + 1)));
}

TEST_CASE("reward pays for velocity toward the goal and for accepting radii") {
  reflex::RewardParams params;
  const Eigen::Vector2d goal{1.0, 0.0};
  const double toward = reflex::reward({-1.0, 0.0}, {0.1, 0.0}, 0.0, goal, params);
  const double away = reflex::reward({-1.0, 0.0}, {-0.1, 0.0}, 0.0, goal, params);
  CHECK(toward > 0.0);
  CHECK(away < 0.0);
  // crossing an accepting radius pays a level bonus
  const Eigen::Vector2d v{0.1, 0.0};
  const double outside = reflex::reward({0.65, 0.0}, v, 0.0, goal, params);
  const double inside = reflex::reward({0.75, 0.0}, v, 0.0, goal, params);
  CHECK(inside - outside > 1.0);
  reflex::RewardParams bad;
  bad.levels = {0.1, 0.2};  // must be descending
  CHECK_THROWS(bad.validate());
}

TEST_CASE("control modes map to the matching equation form") {
  CHECK(reflex::form_for_mode(reflex::ControlMode::AfLocal) == cpg::Form::Af);
  CHECK(reflex::form_for_mode(reflex::ControlMode::AfLearningInterface) ==
        cpg::Form::Af);
  CHECK(reflex::form_for_mode(reflex::ControlMode::MpfLocal) == cpg::Form::Mpf);
  CHECK(reflex::form_for_mode(reflex::ControlMode::MpfLearningInterface) ==
        cpg::Form::Mpf);
  CHECK(reflex::form_for_mode(reflex::ControlMode::C1Only) == cpg::Form::Original);
}

TEST_CASE("feedback mux routes reflex output in local modes only") {
  const reflex::ReflexTopology topo;
  tactile::ContactFrame frame;
  frame.raw.assign(12, 0.0);
  frame.raw[0] = 1.0;
  frame.normalized.assign(12, 0.0);
  frame.n_vector = {0.0, 0.0, 0.0, 0.0, -0.6};
  reflex::Observation obs;

  const reflex::FeedbackMux local(reflex::ControlMode::AfLocal, topo, 0.05);
  const auto p_local = local.route(frame, obs);
  CHECK(p_local[3].f > 0.9);

  const reflex::FeedbackMux open(reflex::ControlMode::C1Only, topo, 0.05);
  for (const auto& pair : open.route(frame, obs)) {
    CHECK(pair.e == 0.0);
    CHECK(pair.f == 0.0);
  }

  // learning-interface mode queries the policy only when the trigger fires
  int calls = 0;
  reflex::PolicyCallback policy = [&](const reflex::Observation&) {
    ++calls;
    return std::array<double, 4>{10.0, 0.0, 0.0, 0.0};
  };
  const reflex::FeedbackMux learn(reflex::ControlMode::AfLearningInterface, topo,
                                  0.05, policy);
  const auto p_learn = learn.route(frame, obs);
  CHECK(calls == 1);
  CHECK(p_learn[0].e > 0.99);
  tactile::ContactFrame quiet = frame;
  quiet.raw.assign(12, 0.0);
  for (const auto& pair : learn.route(quiet, obs)) {
    CHECK(pair.e == 0.0);
    CHECK(pair.f == 0.0);
  }
  CHECK(calls == 1);
}
