#include "snakecpg/tactile.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace snakecpg::tactile {

std::vector<SensorNode> default_layout(std::span<const double, 5> body_half_lengths,
                                       double lateral_offset, double radius,
                                       double k_e) {
  std::vector<SensorNode> nodes;
  nodes.reserve(12);
  const double h0 = body_half_lengths[0];
  for (Side side : {Side::Extensor, Side::Flexor}) {
    const double y = side == Side::Extensor ? lateral_offset : -lateral_offset;
    // head carries a fore and an aft node per side
    nodes.push_back({1, side, {0.5 * h0, y}, radius, k_e});
    nodes.push_back({1, side, {-0.5 * h0, y}, radius, k_e});
  }
  for (std::size_t body = 2; body <= 5; ++body) {
    for (Side side : {Side::Extensor, Side::Flexor}) {
      const double y = side == Side::Extensor ? lateral_offset : -lateral_offset;
      nodes.push_back({body, side, {0.0, y}, radius, k_e});
    }
  }
  return nodes;
}

double force_magnitude(double fx, double fy, double fz) {
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(fz)) {
    throw std::invalid_argument("force_magnitude: non-finite component");
  }
  return std::sqrt(fx * fx + fy * fy + fz * fz);
}

double normalize(double force, double a_sig) {
  if (!(a_sig > 0.0)) throw std::invalid_argument("normalize: a_sig must be > 0");
  return 2.0 / (1.0 + std::exp(-a_sig * std::abs(force))) - 1.0;
}

namespace {

void check_layout(std::span<const SensorNode> nodes) {
  std::array<std::array<int, 2>, 5> count{};  // [body][side]
  for (const auto& n : nodes) {
    if (n.body_index < 1 || n.body_index > 5) {
      throw std::invalid_argument("sensor layout: body index " +
                                  std::to_string(n.body_index) + " out of 1..5");
    }
    ++count[n.body_index - 1][n.side == Side::Extensor ? 0 : 1];
  }
  std::string inventory;
  bool ok = nodes.size() == 12;
  for (std::size_t b = 0; b < 5; ++b) {
    const int expect = b == 0 ? 2 : 1;
    if (count[b][0] != expect || count[b][1] != expect) ok = false;
    inventory += "B" + std::to_string(b + 1) + ":e=" + std::to_string(count[b][0]) +
                 ",f=" + std::to_string(count[b][1]) + " ";
  }
  if (!ok) {
    throw std::invalid_argument("sensor layout mismatch (expected 12 nodes, "
                                "head 2/side, others 1/side): " + inventory);
  }
}

}  // namespace

std::array<double, 5> aggregate(std::span<const SensorNode> nodes,
                                std::span<const double> normalized) {
  check_layout(nodes);
  if (normalized.size() != nodes.size()) {
    throw std::invalid_argument("aggregate: reading count does not match layout");
  }
  std::array<double, 5> n_vec{};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double sign = nodes[i].side == Side::Extensor ? 1.0 : -1.0;
    n_vec[nodes[i].body_index - 1] += sign * normalized[i];
  }
  return n_vec;
}

Eigen::Vector2d node_position(const SensorNode& node, const BodyPose& pose) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return pose.position + Eigen::Vector2d(c * node.offset.x() - s * node.offset.y(),
                                         s * node.offset.x() + c * node.offset.y());
}

std::vector<double> sense(std::span<const SensorNode> nodes,
                          std::span<const BodyPose, 5> poses,
                          std::span<const Circle> obstacles) {
  std::vector<double> raw(nodes.size(), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& node = nodes[i];
    const Eigen::Vector2d p = node_position(node, poses[node.body_index - 1]);
    for (const auto& obs : obstacles) {
      const double d = (obs.center - p).norm();
      const double penetration = node.radius + obs.radius - d;
      if (penetration > 0.0) raw[i] += node.k_e * penetration;
    }
  }
  return raw;
}

ContactFrame contact_frame(std::span<const SensorNode> nodes,
                           std::span<const BodyPose, 5> poses,
                           std::span<const Circle> obstacles, double a_sig) {
  ContactFrame frame;
  frame.raw = sense(nodes, poses, obstacles);
  frame.normalized.reserve(frame.raw.size());
  for (double f : frame.raw) frame.normalized.push_back(normalize(f, a_sig));
  frame.n_vector = aggregate(nodes, frame.normalized);
  return frame;
}

std::size_t monomial_count(int order) {
  if (order < 1) throw std::invalid_argument("monomial order must be >= 1");
  return static_cast<std::size_t>((order + 1) * (order + 2) / 2);
}

std::vector<double> monomials(double b_z, double b_r, int order) {
  std::vector<double> m;
  m.reserve(monomial_count(order));
  for (int k = 0; k <= order; ++k) {
    for (int i = 0; i <= k; ++i) {
      m.push_back(std::pow(b_z, i) * std::pow(b_r, k - i));
    }
  }
  return m;
}

MagneticCalibration fit_force_polynomial(std::span<const MagneticSample> samples,
                                         int order, double weight_radius,
                                         Eigen::Vector2d query) {
  const std::size_t n_mono = monomial_count(order);
  if (samples.size() < n_mono) {
    throw std::invalid_argument(
        "fit_force_polynomial: " + std::to_string(samples.size()) +
        " samples for " + std::to_string(n_mono) + " monomials");
  }
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(n_mono);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd rhs_z(rows), rhs_r(rows), w(rows);
  const bool global = std::isinf(weight_radius);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const auto m = monomials(s.b_z, s.b_r, order);
    for (Eigen::Index j = 0; j < cols; ++j) design(i, j) = m[static_cast<std::size_t>(j)];
    rhs_z(i) = s.f_z;
    rhs_r(i) = s.f_r;
    if (global) {
      w(i) = 1.0;
    } else {
      const double d2 = (Eigen::Vector2d(s.b_z, s.b_r) - query).squaredNorm();
      w(i) = std::exp(-d2 / (2.0 * weight_radius * weight_radius));
    }
  }
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd wa = sw.asDiagonal() * design;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wa);
  if (qr.rank() < cols) {
    throw std::runtime_error("fit_force_polynomial: rank-deficient normal "
                             "equations (rank " + std::to_string(qr.rank()) +
                             " of " + std::to_string(cols) + ")");
  }
  MagneticCalibration cal;
  cal.order = order;
  const Eigen::VectorXd cz = qr.solve(sw.asDiagonal() * rhs_z);
  const Eigen::VectorXd cr = qr.solve(sw.asDiagonal() * rhs_r);
  cal.c_z.assign(cz.data(), cz.data() + cz.size());
  cal.c_r.assign(cr.data(), cr.data() + cr.size());
  return cal;
}

std::pair<double, double> eval_calibration(const MagneticCalibration& cal,
                                           double b_z, double b_r) {
  const auto m = monomials(b_z, b_r, cal.order);
  double fz = 0.0, fr = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    fz += cal.c_z[j] * m[j];
    fr += cal.c_r[j] * m[j];
  }
  return {fz, fr};
}

}  // namespace snakecpg::tactile
