#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snakecpg/harness.hpp"
#include "snakecpg/signal_analysis.hpp"
#include "snakecpg/tactile.hpp"

namespace fs = std::filesystem;
using namespace snakecpg;

namespace {

constexpr const char* kVersion = "0.1.0";

void write_manifest(const fs::path& dir, const std::string& command,
                    const harness::ScenarioConfig* config) {
  nlohmann::json j;
  j["tool"] = "snakecpg";
  j["version"] = kVersion;
  j["command"] = command;
  if (config) j["config"] = nlohmann::json::parse(harness::scenario_to_json(*config));
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << j.dump(2) << '\n';
}

std::string mode_name(reflex::ControlMode m) {
  switch (m) {
    case reflex::ControlMode::AfLocal: return "af-local";
    case reflex::ControlMode::MpfLocal: return "mpf-local";
    case reflex::ControlMode::AfLearningInterface: return "af-learning";
    case reflex::ControlMode::MpfLearningInterface: return "mpf-learning";
    case reflex::ControlMode::C1Only: return "c1-only";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matsuoka CPG snake locomotion harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::optional<double> dt_cpg_override, dt_body_override;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "scenario config (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed_override, "seed override");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--dt-cpg", dt_cpg_override, "CPG integration step [s]");
    sub->add_option("--dt-body", dt_body_override, "body integration step [s]");
  };

  auto* simulate = app.add_subcommand("simulate", "run one scenario, emit trace CSV");
  add_common(simulate, true);

  auto* compare = app.add_subcommand(
      "compare-feedback", "AF vs MPF pulse-response metrics for a primitive pair");
  add_common(compare, false);
  double pulse_amplitude = 1.0;
  int n_pulses = 10;
  compare->add_option("--amplitude", pulse_amplitude, "pulse amplitude");
  compare->add_option("--pulses", n_pulses, "number of pulses");

  auto* sweep = app.add_subcommand("bias-sweep",
                                   "duty-cycle bias grid vs predicted slopes");
  add_common(sweep, false);

  auto* fourier = app.add_subcommand("fourier-table",
                                     "emit r,K,L table at step 0.01");
  fourier->add_option("--out", out_dir, "output directory");

  auto* escape = app.add_subcommand("escape-benchmark",
                                    "per-mode escape statistics over seeds");
  add_common(escape, false);
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  escape->add_option("--seeds", seeds, "seed list");

  auto* calibrate = app.add_subcommand(
      "calibrate-sensor", "fit force polynomials from a (B_z,B_r,F_z,F_r) CSV");
  std::string samples_path;
  int mls_order = 2;
  double mls_radius = std::numeric_limits<double>::infinity();
  calibrate->add_option("--samples", samples_path, "input CSV")->required();
  calibrate->add_option("--order", mls_order, "polynomial order");
  calibrate->add_option("--radius", mls_radius, "Gaussian weight radius (inf = global)");
  calibrate->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    auto load_config = [&](harness::ScenarioConfig fallback) {
      harness::ScenarioConfig cfg =
          config_path.empty() ? fallback : harness::load_scenario(config_path);
      if (seed_override) cfg.seed = *seed_override;
      if (dt_cpg_override) cfg.dt_cpg = *dt_cpg_override;
      if (dt_body_override) cfg.dt_body = *dt_body_override;
      return cfg;
    };

    if (simulate->parsed()) {
      const auto cfg = load_config({});
      write_manifest(out, "simulate", &cfg);
      const auto result = harness::run(cfg, (out / "trace.csv").string());
      harness::write_csv(
          (out / "summary.csv").string(),
          {"success", "finish_time", "path_length", "goals_reached", "reward", "steps"},
          {{result.summary.success ? 1.0 : 0.0, result.summary.finish_time,
            result.summary.path_length, static_cast<double>(result.summary.goals_reached),
            result.summary.total_reward, static_cast<double>(result.summary.steps)}});
      std::cout << (result.summary.success ? "success" : "failure: " +
                    result.summary.failure_reason)
                << " t=" << result.summary.finish_time
                << " path=" << result.summary.path_length << '\n';
    } else if (compare->parsed()) {
      const auto cfg = load_config([] {
        harness::ScenarioConfig c;
        c.cpg_params.c = 1.0;
        c.goals.push_back({{1.0, 0.0}, 0.1});
        return c;
      }());
      write_manifest(out, "compare-feedback", &cfg);
      harness::PulseSchedule schedule;
      schedule.amplitude = pulse_amplitude;
      schedule.n_pulses = n_pulses;
      const auto cmp = harness::compare_feedback(schedule, cfg.cpg_params, cfg.dt_cpg);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < cmp.af.size(); ++k) {
        rows.push_back({static_cast<double>(k), cmp.af[k].overshoot,
                        cmp.af[k].recovery_latency, cmp.mpf[k].overshoot,
                        cmp.mpf[k].recovery_latency});
      }
      harness::write_csv((out / "compare_feedback.csv").string(),
                         {"pulse", "af_overshoot", "af_latency", "mpf_overshoot",
                          "mpf_latency"},
                         rows);
      std::cout << "period=" << cmp.period << " s, " << rows.size()
                << " pulses written\n";
    } else if (sweep->parsed()) {
      // duty-modulated square drive works best without free-response input
      // masking it, so the default keeps c = 0
      const auto cfg = load_config([] {
        harness::ScenarioConfig c;
        c.goals.push_back({{1.0, 0.0}, 0.1});
        return c;
      }());
      write_manifest(out, "bias-sweep", &cfg);
      const auto report = harness::bias_sweep(cfg.cpg_params, cfg.dt_cpg);
      std::vector<std::vector<double>> rows;
      std::size_t idx = 0;
      for (double bu : report.grid) {
        for (double bp : report.grid) {
          rows.push_back({bu, bp, report.measured_bias[idx++]});
        }
      }
      harness::write_csv((out / "bias_sweep.csv").string(),
                         {"bias_u", "bias_p", "bias_z"}, rows);
      harness::write_csv(
          (out / "bias_sweep_fit.csv").string(),
          {"r_squared", "fitted_u", "fitted_p", "predicted_u", "predicted_p"},
          {{report.r_squared, report.fitted_coeff_u, report.fitted_coeff_p,
            report.predicted_coeff_u, report.predicted_coeff_p}});
      std::cout << "R^2=" << report.r_squared
                << " fitted=(" << report.fitted_coeff_u << ", " << report.fitted_coeff_p
                << ") predicted=(" << report.predicted_coeff_u << ", "
                << report.predicted_coeff_p << ")\n";
    } else if (fourier->parsed()) {
      std::vector<std::vector<double>> rows;
      for (int i = -120; i <= 120; ++i) {
        const double r = i * 0.01;
        const auto kl = signal::compute_kl(r);
        rows.push_back({r, kl.k, kl.l});
      }
      harness::write_csv((out / "fourier_table.csv").string(), {"r", "K", "L"}, rows);
      std::cout << "wrote " << rows.size() << " rows\n";
    } else if (escape->parsed()) {
      const auto base = load_config(harness::escape_scenario());
      write_manifest(out, "escape-benchmark", &base);
      const std::vector<reflex::ControlMode> modes{
          reflex::ControlMode::AfLocal, reflex::ControlMode::MpfLocal,
          reflex::ControlMode::C1Only};
      const auto table = harness::escape_benchmark(modes, seeds, {0.2, 0.5}, base);
      std::vector<std::vector<double>> rows;
      for (const auto& cell : table.cells) {
        rows.push_back({static_cast<double>(cell.seed), cell.c,
                        cell.summary.success ? 1.0 : 0.0, cell.summary.finish_time,
                        cell.summary.path_length});
      }
      // mode column is textual; emit a second file with one row per cell
      std::ofstream detail(out / "escape_benchmark.csv", std::ios::binary);
      detail << "mode,c,seed,success,finish_time,path_length\n";
      for (const auto& cell : table.cells) {
        detail << mode_name(cell.mode) << ',' << harness::format_cell(cell.c) << ','
               << cell.seed << ',' << (cell.summary.success ? 1 : 0) << ','
               << harness::format_cell(cell.summary.finish_time) << ','
               << harness::format_cell(cell.summary.path_length) << '\n';
      }
      for (auto mode : modes) {
        std::cout << mode_name(mode)
                  << ": success=" << table.success_rate(mode)
                  << " mean_time=" << table.mean_finish_time(mode) << '\n';
      }
    } else if (calibrate->parsed()) {
      std::ifstream in(samples_path);
      if (!in) throw std::runtime_error("cannot open samples file: " + samples_path);
      std::vector<tactile::MagneticSample> samples;
      std::string line;
      bool first = true;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line.find_first_not_of("0123456789+-.,eE \t") != std::string::npos) {
          first = false;
          continue;  // header row
        }
        first = false;
        tactile::MagneticSample s;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &s.b_z, &s.b_r, &s.f_z,
                        &s.f_r) != 4) {
          throw std::runtime_error("calibrate-sensor: malformed row: " + line);
        }
        samples.push_back(s);
      }
      const auto cal = tactile::fit_force_polynomial(samples, mls_order, mls_radius);
      std::vector<std::vector<double>> rows;
      for (std::size_t j = 0; j < cal.c_z.size(); ++j) {
        rows.push_back({static_cast<double>(j), cal.c_z[j], cal.c_r[j]});
      }
      harness::write_csv((out / "calibration.csv").string(),
                         {"monomial", "c_z", "c_r"}, rows);
      std::cout << "fitted " << cal.c_z.size() << " coefficients from "
                << samples.size() << " samples\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
