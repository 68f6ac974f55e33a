#include "snakecpg/signal_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace snakecpg::signal {

namespace {

constexpr double kPi = std::numbers::pi;

// Adaptive Simpson on a smooth segment.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(f, a, m, fa, flm, fm, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, tol / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  return adaptive_simpson(f, a, b, f(a), f(m), f(b), tol, 40);
}

}  // namespace

KL compute_kl(double r) {
  if (!std::isfinite(r)) throw std::invalid_argument("compute_kl: r not finite");
  if (r <= -1.0) return {0.0, 0.0};
  if (r >= 1.0) return {1.0, r};

  // max(0, cos t + r) is supported on (-tc, tc) with tc = arccos(-r).
  const double tc = std::acos(-r);
  const auto wave = [r](double t) { return std::cos(t) + r; };
  const double tol = 1e-12;
  const double dc = integrate(wave, -tc, tc, tol) / (2.0 * kPi);
  const double fund =
      integrate([&](double t) { return wave(t) * std::cos(t); }, -tc, tc, tol) /
      kPi;
  return {fund, dc};
}

double invert_k(double k_target) {
  if (!(k_target > 0.0 && k_target < 1.0)) {
    throw std::domain_error("invert_k: target " + std::to_string(k_target) +
                            " outside (0, 1)");
  }
  double lo = -1.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (compute_kl(mid).k < k_target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-14) break;
  }
  return 0.5 * (lo + hi);
}

HarmonicPoint harmonic_point(const cpg::OscillatorParams& params) {
  params.validate();
  const double k_n = (params.tau_r + params.tau_a) / (params.tau_a * params.a);
  if (!(k_n > 0.0 && k_n < 1.0)) {
    throw std::domain_error("no harmonic point: K_n = " + std::to_string(k_n) +
                            " outside (0, 1)");
  }
  HarmonicPoint h;
  h.k_n = k_n;
  h.r_n = invert_k(k_n);
  const double denom =
      2.0 * k_n - 1.0 + 2.0 / kPi * (params.a + params.b) * std::asin(k_n);
  h.m = 1.0 / kPi / denom;
  // omega0^2 = m3/m1 with m1 = tau_r*tau_a and m3 = (b-a)K_n + 1
  const double m1 = params.tau_r * params.tau_a;
  const double m3 = (params.b - params.a) * k_n + 1.0;
  if (m3 <= 0.0) {
    throw std::domain_error("no harmonic point: (b-a)K_n + 1 <= 0");
  }
  h.omega0 = std::sqrt(m3 / m1) / params.k_f;
  return h;
}

Prop1Slopes prop1_predicted_slopes(const cpg::OscillatorParams& params) {
  const HarmonicPoint h = harmonic_point(params);
  const double denom = params.b - params.a + 2.0;
  if (denom == 0.0) {
    throw std::domain_error("prop1_predicted_slopes: b - a + 2 = 0");
  }
  return {(1.0 + 2.0 * h.m) / denom, params.b / denom};
}

std::vector<double> mpf_disturbance_term(std::span<const double> p_trace,
                                         const cpg::OscillatorParams& params,
                                         double dt) {
  if (p_trace.size() < 3) {
    throw std::invalid_argument("mpf_disturbance_term: trace shorter than 3 samples");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("mpf_disturbance_term: dt <= 0");
  const double scale = params.tau_a * params.b;
  const std::size_t n = p_trace.size();
  std::vector<double> out(n);
  out[0] = scale * (p_trace[1] - p_trace[0]) / dt;
  out[n - 1] = scale * (p_trace[n - 1] - p_trace[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] = scale * (p_trace[i + 1] - p_trace[i - 1]) / (2.0 * dt);
  }
  return out;
}

double mean(std::span<const double> v, std::size_t i0, std::size_t i1) {
  if (i1 <= i0 || i1 > v.size()) throw std::invalid_argument("mean: empty slice");
  double acc = 0.0;
  for (std::size_t i = i0; i < i1; ++i) acc += v[i];
  return acc / static_cast<double>(i1 - i0);
}

double estimate_period(std::span<const double> z, double dt, std::size_t i0,
                       std::size_t i1) {
  if (i1 <= i0 + 1 || i1 > z.size()) return 0.0;
  const double m = mean(z, i0, i1);
  std::vector<double> crossings;
  for (std::size_t i = i0 + 1; i < i1; ++i) {
    if (z[i - 1] < m && z[i] >= m) {
      // linear interpolation of the crossing instant
      const double frac = (m - z[i - 1]) / (z[i] - z[i - 1]);
      crossings.push_back((static_cast<double>(i - 1) + frac) * dt);
    }
  }
  if (crossings.size() < 2) return 0.0;
  return (crossings.back() - crossings.front()) /
         static_cast<double>(crossings.size() - 1);
}

TraceMetrics measure(std::span<const double> z, double dt, double t0, double t1) {
  if (!(dt > 0.0)) throw std::invalid_argument("measure: dt <= 0");
  if (!(t0 <= t1)) throw std::invalid_argument("measure: t0 > t1");
  const auto n = z.size();
  const auto idx = [&](double t) {
    return static_cast<std::size_t>(
        std::clamp(t / dt, 0.0, static_cast<double>(n - 1)));
  };
  const std::size_t i0 = idx(t0);
  if (i0 < 2) throw std::invalid_argument("measure: no pre-window before t0");

  TraceMetrics m;
  m.bias = mean(z, 0, i0);
  double lo = z[0], hi = z[0];
  for (std::size_t i = 0; i < i0; ++i) {
    lo = std::min(lo, z[i]);
    hi = std::max(hi, z[i]);
  }
  m.amplitude = 0.5 * (hi - lo);
  if (m.amplitude < 1e-6) throw std::runtime_error("measure: no carrier before t0");

  const double period = estimate_period(z, dt, 0, i0);
  const double horizon = period > 0.0 ? 2.0 * period : (t1 - t0);
  const std::size_t i1 = idx(t1);
  const std::size_t i_over = idx(t1 + horizon);

  double peak = 0.0;
  for (std::size_t i = i0; i <= i_over && i < n; ++i) {
    peak = std::max(peak, std::abs(z[i] - m.bias));
  }
  m.overshoot = std::max(0.0, peak / m.amplitude - 1.0);

  // recovery: first instant after t1 from which the oscillation envelope
  // (sliding half peak-to-peak over one period) stays within +-10% of the
  // steady amplitude for one full period
  const std::size_t window =
      period > 0.0 ? static_cast<std::size_t>(std::ceil(period / dt)) : 1;
  const std::size_t dwell = window;
  auto envelope = [&](std::size_t i) {
    double w_lo = z[i], w_hi = z[i];
    for (std::size_t k = i; k < std::min(n, i + window); ++k) {
      w_lo = std::min(w_lo, z[k]);
      w_hi = std::max(w_hi, z[k]);
    }
    return 0.5 * (w_hi - w_lo);
  };
  std::size_t start = i1;
  std::size_t run = 0;
  std::size_t recovered_at = n;  // sentinel: never recovered
  for (std::size_t i = i1; i + window <= n; ++i) {
    const double amp = envelope(i);
    if (std::abs(amp - m.amplitude) <= 0.1 * m.amplitude) {
      if (run == 0) start = i;
      ++run;
      if (run >= dwell) {
        recovered_at = start;
        break;
      }
    } else {
      run = 0;
    }
  }
  if (recovered_at == n) {
    m.recovery_latency = (static_cast<double>(n - 1) * dt) - t1;
  } else {
    m.recovery_latency =
        std::max(0.0, static_cast<double>(recovered_at) * dt - t1);
  }
  return m;
}

double stall_fraction(std::span<const double> z_e, std::span<const double> z_f,
                      std::size_t i0, std::size_t i1) {
  if (i1 <= i0 || i1 > z_e.size() || z_e.size() != z_f.size()) {
    throw std::invalid_argument("stall_fraction: empty or mismatched window");
  }
  std::size_t stalled = 0;
  for (std::size_t i = i0; i < i1; ++i) {
    if (z_e[i] <= 0.0 && z_f[i] <= 0.0) ++stalled;
  }
  return static_cast<double>(stalled) / static_cast<double>(i1 - i0);
}

}  // namespace snakecpg::signal
