#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahumpc/time_util.hpp"

namespace ahumpc::report {

// Three-phase motor electrical energy: on_hours * U * I * cos(phi) * sqrt(3),
// in kWh.
double energy_kwh(double on_hours, double volts, double amps, double cos_phi);

struct DayEnergy {
  std::string date;  // YYYY-MM-DD
  double on_hours = 0.0;
  double kwh = 0.0;
};

struct RunSummary {
  std::string controller;
  std::vector<DayEnergy> days;
  double total_on_hours = 0.0;
  double total_kwh = 0.0;
  // Mean |AIT - setpoint| over control decisions inside the occupancy window.
  double tracking_mean_abs_err = 0.0;
  int movement_count = 0;
};

struct EnergyReport {
  RunSummary mpc;
  RunSummary manual;
  double savings_pct = 0.0;  // (E_manual - E_mpc) / E_manual * 100
};

// Per-day and total energy plus tracking statistics from a run directory's
// movement store and metadata.
RunSummary summarize_run(const std::filesystem::path& run_dir);

// Requires both runs to share start date, length and seed; throws
// std::invalid_argument otherwise.
EnergyReport compare(const std::filesystem::path& mpc_dir,
                     const std::filesystem::path& manual_dir);

nlohmann::ordered_json to_json(const EnergyReport& report);

// CSV / plot-data exports into <run_dir>/reports: movements (with per-row
// kWh), AIT series, per-day energy, and the metrics table from the nightly
// training log.
void write_report_files(const std::filesystem::path& run_dir);

}  // namespace ahumpc::report
