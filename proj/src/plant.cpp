#include "ahumpc/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ahumpc/rng.hpp"

namespace ahumpc::plant {

double PlantState::zone_mean() const {
  double sum = 0.0;
  for (double t : zone_temps) sum += t;
  return zone_temps.empty() ? 0.0 : sum / static_cast<double>(zone_temps.size());
}

PlantState make_initial_state(const PlantCoeffs& coeffs, double zone_temp_c,
                              double envelope_temp_c, double humidity_rh) {
  PlantState s;
  s.zone_temps.assign(coeffs.zones, zone_temp_c);
  s.envelope_temp = envelope_temp_c;
  s.indoor_humidity = humidity_rh;
  return s;
}

namespace {

void validate_state(const PlantState& s, const PlantCoeffs& c) {
  if (static_cast<int>(s.zone_temps.size()) != c.zones) {
    throw std::invalid_argument("plant: zone count mismatch");
  }
  for (double t : s.zone_temps) {
    if (!std::isfinite(t) || t < -30.0 || t > 60.0) {
      throw std::invalid_argument("plant: zone temperature out of range");
    }
  }
  if (!std::isfinite(s.envelope_temp) || !std::isfinite(s.indoor_humidity)) {
    throw std::invalid_argument("plant: non-finite state");
  }
}

void validate_command(const AhuCommand& cmd) {
  if (!std::isfinite(cmd.gain) || cmd.gain < 0.0 || cmd.gain > 1.0) {
    throw std::invalid_argument("plant: command gain must be in [0, 1]");
  }
  if (cmd.mode == ActuatorMode::Binary && cmd.gain != 0.0 && cmd.gain != 1.0) {
    throw std::invalid_argument("plant: binary command admits only 0 or 1");
  }
}

}  // namespace

PlantState step_plant(const PlantState& state, const AhuCommand& cmd,
                      const Disturbances& dist, double dt_min,
                      const PlantCoeffs& coeffs) {
  validate_state(state, coeffs);
  validate_command(cmd);
  if (!(dt_min > 0.0) || dt_min > 5.0) {
    throw std::invalid_argument("plant: dt must be in (0, 5] minutes");
  }

  const int n_sub = std::max(1, static_cast<int>(std::ceil(dt_min / coeffs.substep_min)));
  const double h = dt_min / n_sub;
  const double k_inf =
      coeffs.infiltration_rate + coeffs.infiltration_wind_rate * std::max(0.0, dist.w_speed);
  const double q_common = coeffs.ahu_heat_rate * cmd.gain +
                          coeffs.occupancy_gain_rate * dist.occupancy;
  const double q_solar = coeffs.solar_gain_rate * std::max(0.0, dist.s_rad) / 1000.0;
  const int south_count = coeffs.zones / 2;

  PlantState s = state;
  for (int step = 0; step < n_sub; ++step) {
    const double t_env = s.envelope_temp;
    double mean = 0.0;
    for (int i = 0; i < coeffs.zones; ++i) {
      const double tz = s.zone_temps[i];
      double dtz = coeffs.zone_envelope_rate * (t_env - tz) +
                   k_inf * (dist.t_out - tz) + q_common;
      if (i < south_count) dtz += q_solar;
      s.zone_temps[i] = tz + h * dtz;
      mean += tz;
    }
    mean /= coeffs.zones;
    s.envelope_temp += h * (coeffs.envelope_zone_rate * (mean - t_env) +
                            coeffs.envelope_out_rate * (dist.t_out - t_env));
    s.indoor_humidity +=
        h * (coeffs.humidity_relax_rate * (dist.h_out - s.indoor_humidity) +
             coeffs.humidity_spray_rate * cmd.gain);
    s.indoor_humidity = std::clamp(s.indoor_humidity, 0.0, 100.0);
  }
  validate_state(s, coeffs);
  return s;
}

const Disturbances& DisturbanceSeries::at_minute_of_day(int minute) const {
  const int idx = std::clamp(minute / 5, 0, static_cast<int>(ticks.size()) - 1);
  return ticks[idx];
}

DisturbanceSeries generate_weather(std::uint64_t seed, std::int64_t day_index,
                                   const WeatherConfig& cfg) {
  DisturbanceSeries out;
  out.ticks.reserve(kMinutesPerDay / 5);

  if (cfg.mode == WeatherConfig::Mode::Constant) {
    double energy = 0.0;
    for (int i = 0; i < kMinutesPerDay / 5; ++i) {
      Disturbances d = cfg.constant;
      d.s_energy = energy;
      out.ticks.push_back(d);
      energy += std::max(0.0, d.s_rad) * (5.0 / 60.0);
    }
    return out;
  }

  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(day_index)));
  const double t_mean =
      cfg.t_mean_annual_c +
      cfg.t_seasonal_amp_c *
          std::cos(2.0 * 3.141592653589793 *
                   static_cast<double>(day_index - cfg.warmest_day_offset) / 365.0);
  const double day_offset = rng.uniform(-2.0, 2.0);
  const double cloud = rng.uniform(0.35, 1.0);

  // Smooth AR(1) noise tracks at the 5-minute tick.
  const double rho = 0.95;
  const double innov = std::sqrt(1.0 - rho * rho);
  double n_t = rng.normal() * cfg.t_noise_c;
  double n_h = rng.normal() * 3.0;
  double n_w = rng.normal() * 1.0;

  double energy = 0.0;
  for (int i = 0; i < kMinutesPerDay / 5; ++i) {
    const int mod = i * 5;
    Disturbances d;
    const double diurnal =
        cfg.t_diurnal_amp_c *
        std::cos(2.0 * 3.141592653589793 * (mod - 840) / 1440.0);
    d.t_out = t_mean + day_offset + diurnal + n_t;
    d.h_out = std::clamp(cfg.h_mean_rh - 0.8 * (diurnal + n_t) + n_h, 15.0, 100.0);
    d.w_speed = std::max(0.0, cfg.wind_mean_ms + n_w);

    if (mod > cfg.sunrise_min && mod < cfg.sunset_min) {
      const double phase = static_cast<double>(mod - cfg.sunrise_min) /
                           static_cast<double>(cfg.sunset_min - cfg.sunrise_min);
      d.s_rad = cfg.solar_peak_wm2 * cloud *
                std::max(0.0, std::sin(3.141592653589793 * phase));
    } else {
      d.s_rad = 0.0;
    }
    d.s_energy = energy;
    energy += d.s_rad * (5.0 / 60.0);

    if (mod < 7 * 60 || mod >= 19 * 60) {
      d.occupancy = 0.0;
    } else if (mod < 9 * 60) {
      d.occupancy = 0.85 * (mod - 7 * 60) / 120.0;
    } else if (mod < 17 * 60) {
      d.occupancy = 0.85;
    } else {
      d.occupancy = 0.85 * (19 * 60 - mod) / 120.0;
    }

    out.ticks.push_back(d);

    n_t = rho * n_t + innov * rng.normal() * cfg.t_noise_c;
    n_h = rho * n_h + innov * rng.normal() * 3.0;
    n_w = rho * n_w + innov * rng.normal() * 1.0;
  }
  return out;
}

AhuCommand clock_controller(int time_of_day_min,
                            const std::vector<ScheduleWindow>& schedule) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i].stop_min < schedule[i].start_min) {
      throw std::invalid_argument("plant: schedule window ends before it starts");
    }
    for (std::size_t j = i + 1; j < schedule.size(); ++j) {
      if (schedule[i].start_min < schedule[j].stop_min &&
          schedule[j].start_min < schedule[i].stop_min) {
        throw std::invalid_argument("plant: overlapping schedule windows");
      }
    }
  }
  for (const auto& w : schedule) {
    if (time_of_day_min >= w.start_min && time_of_day_min < w.stop_min) {
      return {1.0, ActuatorMode::Binary};
    }
  }
  return {0.0, ActuatorMode::Binary};
}

}  // namespace ahumpc::plant
