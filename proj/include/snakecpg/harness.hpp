#ifndef SNAKECPG_HARNESS_HPP
#define SNAKECPG_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "snakecpg/scenario.hpp"
#include "snakecpg/signal_analysis.hpp"

namespace snakecpg::harness {

struct RunSummary {
  bool success = false;
  std::string failure_reason;  // empty on success
  double finish_time = 0.0;    // [s]
  double path_length = 0.0;    // head path [m]
  double total_reward = 0.0;
  std::size_t goals_reached = 0;
  std::size_t steps = 0;
};

// Fixed trace schema: one row per body step.
std::vector<std::string> trace_columns();

struct RunResult {
  RunSummary summary;
  // row-major trace matching trace_columns(); retained in memory for
  // analysis, optionally streamed to CSV by run()
  std::vector<std::vector<double>> trace;
};

// Simulate a scenario; when trace_path is set, writes the trace CSV there
// (byte-identical for identical config + seed).
RunResult run(const ScenarioConfig& config,
              const std::optional<std::string>& trace_path = std::nullopt,
              reflex::PolicyCallback policy = nullptr);

// --- feedback-pulse comparison ---------------------------------------------

struct PulseSchedule {
  double amplitude = 1.0;
  int n_pulses = 10;
  double pulse_periods = 1.0;  // pulse duration in oscillation periods
  double gap_periods = 8.0;    // spacing between pulse onsets
  double tonic = 0.5;          // constant u_e = u_f during the experiment
};

struct FeedbackComparison {
  double period = 0.0;  // free-running oscillation period [s]
  std::vector<signal::TraceMetrics> af;
  std::vector<signal::TraceMetrics> mpf;
};

// One primitive pair per form, identical pulse train on p_e; metrics per
// pulse via signal::measure.
FeedbackComparison compare_feedback(const PulseSchedule& schedule,
                                    const cpg::OscillatorParams& params,
                                    double dt);

// --- harmonic bias sweep -----------------------------------------------------

struct BiasSweepReport {
  double r_squared = 0.0;
  double fitted_coeff_u = 0.0;
  double fitted_coeff_p = 0.0;
  double predicted_coeff_u = 0.0;
  double predicted_coeff_p = 0.0;
  double period = 0.0;
  std::vector<double> grid;  // bias values used on both axes
  // row-major measured bias(z) over the grid, u-major
  std::vector<double> measured_bias;
};

// AF primitive pair driven by duty-modulated complementary square waves over
// a bias grid: the tonic square is phase-locked to the oscillation (u_e on
// while z > 0) and the feedback square runs on a fast carrier so only its
// duty-cycle average acts on the slow dynamics. OLS fit of bias(z) on
// (bias(u), bias(p)).
BiasSweepReport bias_sweep(const cpg::OscillatorParams& params, double dt,
                           std::vector<double> grid = {-0.4, -0.2, 0.0, 0.2, 0.4});

// --- sustained-feedback stall experiment ------------------------------------

struct StallReport {
  double inhibiting_fraction = 0.0;
  double activating_fraction = 0.0;
  double period = 0.0;
};

// AF pair with p_e = p_f = 1 held for hold_periods, once with the printed
// inhibiting feedback sign and once sign-flipped (activating).
StallReport stall_experiment(const cpg::OscillatorParams& params, double dt,
                             double hold_periods = 5.0);

// --- Escape benchmark --------------------------------------------------------

struct EscapeCell {
  reflex::ControlMode mode;
  double c = 0.0;
  std::uint64_t seed = 0;
  RunSummary summary;
};

struct EscapeTable {
  std::vector<EscapeCell> cells;
  double success_rate(reflex::ControlMode mode, std::optional<double> c = {}) const;
  double mean_finish_time(reflex::ControlMode mode, std::optional<double> c = {}) const;
};

EscapeTable escape_benchmark(const std::vector<reflex::ControlMode>& modes,
                             const std::vector<std::uint64_t>& seeds,
                             const std::vector<double>& c_values,
                             const ScenarioConfig& base);

// Escape-task scenario (corridor pocket, exit opposite the goal side).
ScenarioConfig escape_scenario();

// CSV helpers (deterministic %.17g formatting)
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::string format_cell(double v);

}  // namespace snakecpg::harness

#endif
