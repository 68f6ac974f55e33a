#ifndef SNAKECPG_TACTILE_HPP
#define SNAKECPG_TACTILE_HPP

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace snakecpg::tactile {

enum class Side { Extensor, Flexor };  // extensor = left of heading

struct SensorNode {
  std::size_t body_index = 1;  // 1..5, head first
  Side side = Side::Extensor;
  Eigen::Vector2d offset{0.0, 0.0};  // position in the body frame [m]
  double radius = 0.02;              // force-field hemisphere radius [m]
  double k_e = 200.0;                // elastic constant [N/m]
};

struct Circle {
  Eigen::Vector2d center{0.0, 0.0};
  double radius = 0.05;
};

struct ContactFrame {
  std::vector<double> raw;         // per-node force magnitude [N]
  std::vector<double> normalized;  // sigma(F) in [0,1)
  std::array<double, 5> n_vector{};  // signed aggregate N_1..N_5
};

struct BodyPose {
  Eigen::Vector2d position{0.0, 0.0};
  double heading = 0.0;
};

// Fixed 12-sensor layout: two nodes per side on the head body, one per side
// on bodies 2-5. body_half_lengths[i] is half the rod length of body i+1,
// used to spread the head pair along the rod.
std::vector<SensorNode> default_layout(std::span<const double, 5> body_half_lengths,
                                       double lateral_offset, double radius,
                                       double k_e);

double force_magnitude(double fx, double fy, double fz);

// sigma(F) = 2 / (1 + exp(-a_sig |F|)) - 1; bounded normalization to [0,1).
double normalize(double force, double a_sig);

// Signed aggregation of 12 normalized readings into N_1..N_5. Rejects any
// node inventory that is not the fixed layout.
std::array<double, 5> aggregate(std::span<const SensorNode> nodes,
                                std::span<const double> normalized);

// Raw per-node force magnitudes from hemisphere force-field penetration,
// summed over obstacles.
std::vector<double> sense(std::span<const SensorNode> nodes,
                          std::span<const BodyPose, 5> poses,
                          std::span<const Circle> obstacles);

// World position of a node given its body pose.
Eigen::Vector2d node_position(const SensorNode& node, const BodyPose& pose);

// Full pipeline: raw magnitudes -> sigmoid -> N vector.
ContactFrame contact_frame(std::span<const SensorNode> nodes,
                           std::span<const BodyPose, 5> poses,
                           std::span<const Circle> obstacles, double a_sig);

struct MagneticSample {
  double b_z = 0.0;
  double b_r = 0.0;
  double f_z = 0.0;
  double f_r = 0.0;
};

struct MagneticCalibration {
  int order = 2;
  std::vector<double> c_z;  // coefficients over monomials B_z^i B_r^(k-i)
  std::vector<double> c_r;
};

// Monomials of total degree <= n in (B_z, B_r), enumerated k = 0..n,
// i = 0..k as B_z^i * B_r^(k-i).
std::size_t monomial_count(int order);
std::vector<double> monomials(double b_z, double b_r, int order);

// Weighted least squares centered at query with Gaussian weights of the
// given radius; radius = infinity gives the global fit. Throws on
// underdetermined or rank-deficient systems.
MagneticCalibration fit_force_polynomial(std::span<const MagneticSample> samples,
                                         int order, double weight_radius,
                                         Eigen::Vector2d query = {0.0, 0.0});

// Evaluate a fitted polynomial pair at a field point.
std::pair<double, double> eval_calibration(const MagneticCalibration& cal,
                                           double b_z, double b_r);

}  // namespace snakecpg::tactile

#endif
