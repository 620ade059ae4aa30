#pragma once

#include <filesystem>

#include "ahumpc/scenario.hpp"

namespace ahumpc::sim {

// Store and artifact layout inside a run directory.
struct RunPaths {
  std::filesystem::path dir;
  std::filesystem::path sensor_db;      // sensor-db.ndjson
  std::filesystem::path movements;      // mpc-movements.ndjson
  std::filesystem::path ait;            // ait.ndjson
  std::filesystem::path connectivity;   // connectivity.ndjson
  std::filesystem::path events;         // events.ndjson (controller log)
  std::filesystem::path metrics;        // models/metrics.ndjson
  std::filesystem::path models_dir;     // models/
  std::filesystem::path meta;           // run_meta.json
  std::filesystem::path datasets_dir;   // datasets/

  static RunPaths at(const std::filesystem::path& dir);
};

struct RunResult {
  RunPaths paths;
  int days = 0;
  int movement_count = 0;
  double total_on_hours = 0.0;
  int retrains = 0;
  int edf_refreshes = 0;
  int edf_fallbacks = 0;
};

// Runs the scenario end to end: telemetry every 5 minutes, a control
// decision every sampling interval, the 6 a.m. EDF/FOS refresh, the nightly
// dataset build + retrain, and append-only persistence of everything.
// Deterministic for a fixed config + seed.
RunResult run_scenario(const scenario::ScenarioConfig& cfg,
                       const std::filesystem::path& out_dir,
                       bool export_datasets = false);

}  // namespace ahumpc::sim
