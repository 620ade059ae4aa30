#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ahumpc/dataset.hpp"
#include "ahumpc/fos.hpp"
#include "ahumpc/mpc.hpp"
#include "ahumpc/plant.hpp"
#include "ahumpc/surrogate.hpp"
#include "ahumpc/telemetry.hpp"

namespace ahumpc::scenario {

enum class ControllerKind { Mpc, Manual };

struct InitialState {
  double zone_temp_c = 16.0;
  double envelope_temp_c = 15.5;
  double humidity_rh = 50.0;
};

struct TrainingConfig {
  int window_days = 60;
  int k_folds = 3;
  std::size_t max_samples = 4000;
  std::size_t min_samples = 300;
  surrogate::Hyperparams hyper;
};

struct ElectricalParams {
  double volts = 380.0;
  double amps = 15.4;
  double cos_phi = 0.82;
};

// Full experiment description. The JSON schema mirrors this struct; the
// shipped reference scenario carries every default explicitly.
struct ScenarioConfig {
  int schema_version = 1;
  std::string name = "reference";
  CivilDate start_date{2024, 11, 11};
  int days = 14;
  std::uint64_t seed = 42;
  ControllerKind controller = ControllerKind::Mpc;
  int warmup_days = 1;  // clock-driven days that seed the first dataset

  plant::PlantCoeffs plant_coeffs;
  InitialState initial;
  plant::WeatherConfig weather;

  telemetry::SensorNoise sensor_noise;
  std::vector<telemetry::DropoutWindow> dropouts;

  std::vector<plant::ScheduleWindow> manual_schedule{{6 * 60, 21 * 60}};

  mpc::MpcConfig mpc;
  double delay_minutes = 13.0;
  int protection_minutes = 5;
  double epsilon_c = 0.05;
  plant::ActuatorMode actuator = plant::ActuatorMode::Binary;
  int active_start_min = 6 * 60;   // MPC tracks setpoints in this window
  int active_stop_min = 21 * 60;   // idle (setpoint below AIT) outside it
  double idle_drop_c = 3.0;
  int edf_minute = 6 * 60;     // daily model refresh
  int retrain_minute = 30;     // nightly dataset build + training
  int edf_horizon_min = 900;
  int edf_step_min = 30;
  double edf_noise_tol_c = 0.3;  // monotonicity slack for predicted curves
  fos::FosParams fos_prior_inc{8.0, 150.0, 13.0, 0.0};
  fos::FosParams fos_prior_dec{-8.0, 250.0, 13.0, 0.0};

  TrainingConfig training;
  std::optional<std::filesystem::path> feedback_script;
  ElectricalParams electrical;
  int occupancy_start_min = 8 * 60;   // window for tracking statistics
  int occupancy_stop_min = 18 * 60;

  Minute start_minute() const { return minutes_from_date(start_date); }
  Minute end_minute() const {
    return start_minute() + static_cast<Minute>(days) * kMinutesPerDay;
  }
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Throws ConfigError with a line-of-sight message on schema problems.
ScenarioConfig load_scenario(const std::filesystem::path& path);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg);
void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);

void validate(const ScenarioConfig& cfg);  // throws ConfigError

std::vector<mpc::SetpointFeedback> load_feedback(const std::filesystem::path& path);

}  // namespace ahumpc::scenario
