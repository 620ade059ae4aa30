#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ahumpc/telemetry.hpp"
#include "ahumpc/trace.hpp"

namespace ahumpc::dataset {

// Maximal run of constant AHU on/off state, carrying the 5-minute AIT trace
// it produced. Increasing sessions have input > 0 throughout; mean_gain is
// the average delivered fraction of the sampling interval.
struct Session {
  Minute start = 0;
  Minute end = 0;  // inclusive of the final sampling interval
  Direction direction = Direction::Increasing;
  TemperatureTrace ait_trace;  // absolute minutes on the 5-minute grid
  double mean_gain = 0.0;
};

// Splits the movement log into sessions at on/off state changes, log gaps and
// AIT gaps; sessions with fewer than 2 AIT samples are discarded.
std::vector<Session> extract_sessions(
    std::span<const telemetry::MpcMovement> movements,
    std::span<const telemetry::AitRecord> ait_log, int sampling_min = 30);

// The 8-input/1-output record the surrogate trains on.
struct TrainingSample {
  double t_init = 0.0;    // degC
  double delta_t = 0.0;   // minutes
  double i_ahu = 0.0;     // [0,1]
  double t_out = 0.0;     // degC
  double h_out = 0.0;     // %RH
  double w_speed = 0.0;   // m/s
  double s_rad = 0.0;     // W/m^2
  double s_energy = 0.0;  // Wh/m^2
  double target = 0.0;    // AIT(t_init_time + delta_t) - AIT(t_init_time)
};

std::array<double, 8> to_features(const TrainingSample& s);

using Dataset = std::vector<TrainingSample>;

using DisturbanceFn = std::function<plant::Disturbances(Minute)>;

// All ordered two-point records (i, j), i < j, within max_delta_min, with
// disturbances read at the pair's start time.
Dataset expand_pairs(const Session& session, const DisturbanceFn& disturbances,
                     int max_delta_min = 300);

struct SplitConfig {
  double train_fraction = 0.70;
  double val_fraction = 0.15;
  std::uint64_t seed = 1;
  int window_days = 60;  // trailing training window
  std::size_t max_samples = 0;  // 0 = keep everything
};

struct DatasetSplits {
  Dataset train, val, test;
  Direction direction = Direction::Increasing;

  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

// Seeded shuffle + 70/15/15 split of an already-assembled sample set.
DatasetSplits split_dataset(Dataset samples, Direction direction,
                            const SplitConfig& cfg);

// Builds the per-direction train/val/test datasets from the trailing
// window_days of logs ending at window_end (exclusive). Throws
// std::invalid_argument when a direction has no samples in the window.
std::pair<DatasetSplits, DatasetSplits> build_daily(
    Minute window_end, std::span<const telemetry::MpcMovement> movements,
    std::span<const telemetry::AitRecord> ait_log,
    const DisturbanceFn& disturbances, const SplitConfig& cfg);

// Newline-delimited JSON, 8 input fields plus target per line.
void export_ndjson(const Dataset& data, const std::filesystem::path& path);
Dataset import_ndjson(const std::filesystem::path& path);

}  // namespace ahumpc::dataset
