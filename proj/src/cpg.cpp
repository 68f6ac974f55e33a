#include "snakecpg/cpg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace snakecpg::cpg {

namespace {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("non-finite value in field '") +
                                field + "'");
  }
}

void require_positive(double v, const char* field) {
  require_finite(v, field);
  if (v <= 0.0) {
    throw std::invalid_argument(std::string("field '") + field +
                                "' must be positive");
  }
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void OscillatorParams::validate() const {
  require_positive(a, "a");
  require_positive(b, "b");
  require_positive(tau_r, "tau_r");
  require_positive(tau_a, "tau_a");
  require_positive(k_f, "k_f");
  require_finite(c, "c");
  if (c < 0.0) throw std::invalid_argument("field 'c' must be >= 0");
}

void CpgNetwork::validate() const {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (n == 0) throw std::invalid_argument("network has no oscillator pairs");
  for (const auto& p : params) p.validate();
  if (coupling.rows() != n || coupling.cols() != n) {
    throw std::invalid_argument("coupling matrix size does not match pair count");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (coupling(i, i) != 0.0) {
      throw std::invalid_argument("coupling matrix must have zero diagonal");
    }
    for (Eigen::Index j = 0; j < n; ++j) require_finite(coupling(i, j), "coupling");
  }
}

CpgNetworkState zero_state(const CpgNetwork& net) {
  CpgNetworkState s;
  s.pairs.resize(net.size());
  s.u.resize(net.size());
  s.p.resize(net.size());
  return s;
}

void set_tonic(CpgNetworkState& state, std::size_t pair, double u_e, double u_f) {
  state.u.at(pair) = {clamp01(u_e), clamp01(u_f)};
}

void set_feedback(CpgNetworkState& state, std::size_t pair, double p_e, double p_f) {
  state.p.at(pair) = {clamp01(p_e), clamp01(p_f)};
}

void apply_symmetry_break(CpgNetworkState& state) {
  if (!state.pairs.empty()) state.pairs.front().x_e += 1e-3;
}

namespace {

std::vector<NeuronPairState> derivative_impl(const CpgNetwork& net,
                                             const std::vector<NeuronPairState>& pairs,
                                             const std::vector<PairInput>& u,
                                             const std::vector<PairInput>& p) {
  const std::size_t n = pairs.size();
  std::vector<NeuronPairState> d(n);
  // feedback sign in the adaptation equations (Af only)
  const double af_sign =
      net.polarity == FeedbackPolarity::Inhibiting ? -1.0 : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& q = net.params[i];
    const auto& s = pairs[i];
    const double z_e = rectify(s.x_e);
    const double z_f = rectify(s.x_f);

    double couple_e = 0.0;
    double couple_f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = net.coupling(static_cast<Eigen::Index>(j),
                                    static_cast<Eigen::Index>(i));
      if (w == 0.0) continue;
      couple_e += w * pairs[j].y_e;
      couple_f += w * pairs[j].y_f;
    }

    double fx_e = -s.x_e - q.a * z_f - q.b * s.y_e - couple_e + u[i].e + q.c;
    double fx_f = -s.x_f - q.a * z_e - q.b * s.y_f - couple_f + u[i].f + q.c;
    double fy_e = z_e - s.y_e;
    double fy_f = z_f - s.y_f;

    switch (net.form) {
      case Form::Original:
        break;
      case Form::Mpf:
        fx_e += q.b * p[i].e;
        fx_f += q.b * p[i].f;
        break;
      case Form::Af:
        fy_e += af_sign * p[i].e;
        fy_f += af_sign * p[i].f;
        break;
    }

    d[i].x_e = fx_e / (q.k_f * q.tau_r);
    d[i].x_f = fx_f / (q.k_f * q.tau_r);
    d[i].y_e = fy_e / (q.k_f * q.tau_a);
    d[i].y_f = fy_f / (q.k_f * q.tau_a);
  }
  return d;
}

void check_state_finite(const CpgNetworkState& state) {
  for (const auto& s : state.pairs) {
    require_finite(s.x_e, "x_e");
    require_finite(s.x_f, "x_f");
    require_finite(s.y_e, "y_e");
    require_finite(s.y_f, "y_f");
  }
  for (const auto& in : state.u) {
    require_finite(in.e, "u_e");
    require_finite(in.f, "u_f");
  }
  for (const auto& in : state.p) {
    require_finite(in.e, "p_e");
    require_finite(in.f, "p_f");
  }
}

}  // namespace

std::vector<NeuronPairState> derivative(const CpgNetwork& net,
                                        const CpgNetworkState& state) {
  net.validate();
  if (state.pairs.size() != net.size() || state.u.size() != net.size() ||
      state.p.size() != net.size()) {
    throw std::invalid_argument("state size does not match network size");
  }
  check_state_finite(state);
  return derivative_impl(net, state.pairs, state.u, state.p);
}

CpgOutput outputs(const CpgNetworkState& state) {
  CpgOutput out;
  out.z.reserve(state.size());
  out.z_e.reserve(state.size());
  out.z_f.reserve(state.size());
  for (const auto& s : state.pairs) {
    const double ze = rectify(s.x_e);
    const double zf = rectify(s.x_f);
    out.z_e.push_back(ze);
    out.z_f.push_back(zf);
    out.z.push_back(ze - zf);
  }
  return out;
}

CpgOutput step(const CpgNetwork& net, CpgNetworkState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const std::size_t n = state.pairs.size();

  auto advanced = [&](const std::vector<NeuronPairState>& base,
                      const std::vector<NeuronPairState>& slope, double h) {
    std::vector<NeuronPairState> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i].x_e = base[i].x_e + h * slope[i].x_e;
      r[i].x_f = base[i].x_f + h * slope[i].x_f;
      r[i].y_e = base[i].y_e + h * slope[i].y_e;
      r[i].y_f = base[i].y_f + h * slope[i].y_f;
    }
    return r;
  };

  const auto k1 = derivative(net, state);
  const auto k2 = derivative_impl(net, advanced(state.pairs, k1, dt / 2), state.u, state.p);
  const auto k3 = derivative_impl(net, advanced(state.pairs, k2, dt / 2), state.u, state.p);
  const auto k4 = derivative_impl(net, advanced(state.pairs, k3, dt), state.u, state.p);

  for (std::size_t i = 0; i < n; ++i) {
    auto& s = state.pairs[i];
    s.x_e += dt / 6.0 * (k1[i].x_e + 2 * k2[i].x_e + 2 * k3[i].x_e + k4[i].x_e);
    s.x_f += dt / 6.0 * (k1[i].x_f + 2 * k2[i].x_f + 2 * k3[i].x_f + k4[i].x_f);
    s.y_e += dt / 6.0 * (k1[i].y_e + 2 * k2[i].y_e + 2 * k3[i].y_e + k4[i].y_e);
    s.y_f += dt / 6.0 * (k1[i].y_f + 2 * k2[i].y_f + 2 * k3[i].y_f + k4[i].y_f);
    if (!std::isfinite(s.x_e) || !std::isfinite(s.x_f) || !std::isfinite(s.y_e) ||
        !std::isfinite(s.y_f)) {
      throw std::runtime_error("non-finite oscillator state at t=" +
                               std::to_string(state.t));
    }
  }
  state.t += dt;
  return outputs(state);
}

CpgNetwork build_chain(std::size_t n_links, const OscillatorParams& params,
                       double w_descending, double w_ascending, Form form) {
  if (n_links == 0) throw std::invalid_argument("n_links must be >= 1");
  params.validate();
  CpgNetwork net;
  net.form = form;
  net.params.assign(n_links, params);
  const auto n = static_cast<Eigen::Index>(n_links);
  net.coupling = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    net.coupling(i, i + 1) = w_descending;  // pair i inhibits pair i+1
    net.coupling(i + 1, i) = w_ascending;   // pair i+1 inhibits pair i
  }
  return net;
}

}  // namespace snakecpg::cpg
