#pragma once

#include <cstdint>
#include <vector>

#include "ahumpc/time_util.hpp"

namespace ahumpc::plant {

// Lumped two-capacitance building model: one thermal node per zone coupled
// to a shared envelope node, with wind-dependent infiltration, solar gains
// on the south-facing half of the zones, occupant gains and a central AHU
// heat input shared by all zones. Deliberately richer than the first-order
// model the controller assumes.
struct PlantCoeffs {
  int zones = 24;
  double zone_envelope_rate = 1.0 / 180.0;   // 1/min
  double infiltration_rate = 0.0012;         // 1/min at zero wind
  double infiltration_wind_rate = 0.00025;   // 1/min per m/s
  double ahu_heat_rate = 0.13;               // degC/min at full gain
  double solar_gain_rate = 0.0015;            // degC/min per kW/m^2, south zones
  double occupancy_gain_rate = 0.0015;        // degC/min at full occupancy
  double envelope_zone_rate = 1.0 / 400.0;   // 1/min
  double envelope_out_rate = 1.0 / 500.0;    // 1/min
  double humidity_relax_rate = 1.0 / 240.0;  // 1/min
  double humidity_spray_rate = 0.02;         // %RH/min at full gain
  double substep_min = 0.25;                 // Euler substep
};

struct PlantState {
  std::vector<double> zone_temps;  // exactly `zones` entries, degC
  double envelope_temp = 15.0;
  double indoor_humidity = 50.0;

  double zone_mean() const;
};

PlantState make_initial_state(const PlantCoeffs& coeffs, double zone_temp_c,
                              double envelope_temp_c, double humidity_rh);

struct Disturbances {
  double t_out = 0.0;      // degC
  double h_out = 70.0;     // %RH
  double w_speed = 0.0;    // m/s
  double s_rad = 0.0;      // W/m^2
  double s_energy = 0.0;   // Wh/m^2, cumulative since midnight
  double occupancy = 0.0;  // fraction in [0,1]
};

enum class ActuatorMode { Binary, Analog };

struct AhuCommand {
  double gain = 0.0;  // [0,1]; binary mode admits only 0 or 1
  ActuatorMode mode = ActuatorMode::Binary;
};

// Advances the plant by dt minutes (0 < dt <= 5) under constant command and
// disturbances. Throws std::invalid_argument on malformed state or command.
PlantState step_plant(const PlantState& state, const AhuCommand& cmd,
                      const Disturbances& dist, double dt_min,
                      const PlantCoeffs& coeffs);

// One day of disturbances on the 5-minute grid (288 ticks from 00:00).
struct DisturbanceSeries {
  std::vector<Disturbances> ticks;

  const Disturbances& at_minute_of_day(int minute) const;
};

struct WeatherConfig {
  enum class Mode { Generated, Constant };
  Mode mode = Mode::Generated;

  // Generated mode: seasonal + diurnal sinusoids with seeded smooth noise.
  double t_mean_annual_c = 8.0;
  double t_seasonal_amp_c = 10.0;
  int warmest_day_offset = -120;  // scenario day index of the seasonal peak
  double t_diurnal_amp_c = 2.5;
  double t_noise_c = 0.8;
  double h_mean_rh = 70.0;
  double wind_mean_ms = 3.0;
  double solar_peak_wm2 = 300.0;
  int sunrise_min = 7 * 60;
  int sunset_min = 17 * 60;

  // Constant mode: every tick carries these values (s_energy still
  // integrates s_rad).
  Disturbances constant{};
};

// Deterministic per (seed, day_index); s_energy is the running integral of
// s_rad and resets at midnight.
DisturbanceSeries generate_weather(std::uint64_t seed, std::int64_t day_index,
                                   const WeatherConfig& cfg = {});

struct ScheduleWindow {
  int start_min = 0;  // minute of day, inclusive
  int stop_min = 0;   // minute of day, exclusive
};

// Clock-based manual baseline: full gain inside any window, off otherwise.
// Throws std::invalid_argument on overlapping windows.
AhuCommand clock_controller(int time_of_day_min,
                            const std::vector<ScheduleWindow>& schedule);

}  // namespace ahumpc::plant
