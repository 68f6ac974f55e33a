#ifndef SNAKECPG_SIGNAL_ANALYSIS_HPP
#define SNAKECPG_SIGNAL_ANALYSIS_HPP

#include <span>
#include <vector>

#include "snakecpg/cpg.hpp"

namespace snakecpg::signal {

// DC (L) and fundamental-cosine (K) Fourier coefficients of the half-wave
// rectified biased unit sinusoid max(0, cos(theta) + r).
struct KL {
  double k = 0.0;
  double l = 0.0;
};

// Numerical quadrature, piecewise on the smooth segments between the
// rectification crossings; absolute error <= 1e-9.
KL compute_kl(double r);

// Monotone inversion of K on [-1, 1]; requires k_target in (0, 1).
double invert_k(double k_target);

struct HarmonicPoint {
  double k_n = 0.0;     // (tau_r + tau_a) / (tau_a * a)
  double r_n = 0.0;     // K(r_n) = k_n
  double m = 0.0;       // slope-prediction constant
  double omega0 = 0.0;  // natural angular frequency estimate [rad/s]
};

// Throws std::domain_error naming k_n when k_n is outside (0, 1).
HarmonicPoint harmonic_point(const cpg::OscillatorParams& params);

struct Prop1Slopes {
  double coeff_u = 0.0;  // (1 + 2m) / (b - a + 2)
  double coeff_p = 0.0;  // b / (b - a + 2)
};

Prop1Slopes prop1_predicted_slopes(const cpg::OscillatorParams& params);

// tau_a * b * dp/dt of a uniformly sampled feedback trace; central
// differences inside, one-sided at the endpoints. Needs >= 3 samples.
std::vector<double> mpf_disturbance_term(std::span<const double> p_trace,
                                         const cpg::OscillatorParams& params,
                                         double dt);

struct TraceMetrics {
  double bias = 0.0;
  double amplitude = 0.0;         // half peak-to-peak over the steady window
  double overshoot = 0.0;         // excess excursion ratio, floored at 0
  double recovery_latency = 0.0;  // seconds from disturbance end
};

// Steady amplitude and bias come from the window before t0; overshoot is
// evaluated in [t0, t1 + 2T]; recovery requires the signal to stay inside a
// +-10% amplitude band for one full period. Throws when no oscillation is
// present before t0 ("no carrier").
TraceMetrics measure(std::span<const double> z, double dt, double t0, double t1);

// Mean of a slice [i0, i1).
double mean(std::span<const double> v, std::size_t i0, std::size_t i1);

// Oscillation period of a trace slice from upward mean-crossings; returns 0
// when fewer than two crossings exist.
double estimate_period(std::span<const double> z, double dt, std::size_t i0,
                       std::size_t i1);

// Fraction of samples in [i0, i1) with z_e = z_f = 0.
double stall_fraction(std::span<const double> z_e, std::span<const double> z_f,
                      std::size_t i0, std::size_t i1);

}  // namespace snakecpg::signal

#endif
