#include "ahumpc/scenario.hpp"

#include <fstream>
#include <iostream>

namespace ahumpc::scenario {

namespace {

std::string window_string(int minute_of_day) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minute_of_day / 60,
                minute_of_day % 60);
  return buf;
}

const nlohmann::json& expect(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(std::string("scenario: missing key '") + key + "'");
  }
  return *it;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return expect(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  if (cfg.schema_version != 1) {
    throw ConfigError("scenario: unsupported schema_version");
  }
  if (cfg.days < 1) throw ConfigError("scenario: days must be >= 1");
  if (cfg.warmup_days < 0 || cfg.warmup_days > cfg.days) {
    throw ConfigError("scenario: warmup_days must be within [0, days]");
  }
  if (cfg.plant_coeffs.zones < 1) throw ConfigError("scenario: zones must be >= 1");
  if (cfg.electrical.volts <= 0 || cfg.electrical.amps <= 0) {
    throw ConfigError("scenario: electrical parameters must be positive");
  }
  if (cfg.electrical.cos_phi <= 0.0 || cfg.electrical.cos_phi > 1.0) {
    throw ConfigError("scenario: cos_phi must be in (0, 1]");
  }
  if (cfg.mpc.horizon < 1 || cfg.mpc.sampling_min < 5 ||
      cfg.mpc.sampling_min % 5 != 0) {
    throw ConfigError("scenario: horizon must be >= 1 and sampling a multiple of 5");
  }
  if (cfg.delay_minutes < 0 || cfg.delay_minutes >= cfg.mpc.sampling_min) {
    throw ConfigError("scenario: delay must be in [0, sampling)");
  }
  if (cfg.protection_minutes < 0 ||
      cfg.protection_minutes > cfg.mpc.sampling_min / 2) {
    throw ConfigError("scenario: protection must be in [0, sampling/2]");
  }
  if (!(cfg.epsilon_c > 0.0)) throw ConfigError("scenario: epsilon must be positive");
  if (cfg.active_start_min < 0 || cfg.active_stop_min > kMinutesPerDay ||
      cfg.active_start_min >= cfg.active_stop_min) {
    throw ConfigError("scenario: bad active window");
  }
  if (cfg.occupancy_start_min >= cfg.occupancy_stop_min) {
    throw ConfigError("scenario: bad occupancy window");
  }
  if (cfg.training.k_folds < 2) throw ConfigError("scenario: k_folds must be >= 2");
  if (cfg.edf_step_min < 5 || cfg.edf_horizon_min < cfg.edf_step_min ||
      cfg.edf_horizon_min > kMinutesPerDay) {
    throw ConfigError("scenario: bad EDF horizon/step");
  }
  try {
    fos::validate(cfg.fos_prior_inc);
    fos::validate(cfg.fos_prior_dec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: bad FOS prior: ") + e.what());
  }
  if (!(cfg.fos_prior_inc.kp > 0.0) || !(cfg.fos_prior_dec.kp < 0.0)) {
    throw ConfigError("scenario: FOS prior gains must be signed by direction");
  }
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("scenario: config must be a JSON object");
  ScenarioConfig cfg;
  cfg.schema_version = get_field<int>(j, "schema_version");
  cfg.name = get_or<std::string>(j, "name", cfg.name);
  try {
    cfg.start_date = parse_date(get_field<std::string>(j, "start_date"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  cfg.days = get_field<int>(j, "days");
  cfg.seed = get_field<std::uint64_t>(j, "seed");
  const auto controller = get_field<std::string>(j, "controller");
  if (controller == "mpc") {
    cfg.controller = ControllerKind::Mpc;
  } else if (controller == "manual") {
    cfg.controller = ControllerKind::Manual;
  } else {
    throw ConfigError("scenario: controller must be 'mpc' or 'manual'");
  }
  cfg.warmup_days = get_or<int>(j, "warmup_days", cfg.warmup_days);

  if (j.contains("plant")) {
    const auto& p = j.at("plant");
    auto& c = cfg.plant_coeffs;
    c.zones = get_or<int>(p, "zones", c.zones);
    c.zone_envelope_rate = get_or<double>(p, "zone_envelope_rate", c.zone_envelope_rate);
    c.infiltration_rate = get_or<double>(p, "infiltration_rate", c.infiltration_rate);
    c.infiltration_wind_rate =
        get_or<double>(p, "infiltration_wind_rate", c.infiltration_wind_rate);
    c.ahu_heat_rate = get_or<double>(p, "ahu_heat_rate", c.ahu_heat_rate);
    c.solar_gain_rate = get_or<double>(p, "solar_gain_rate", c.solar_gain_rate);
    c.occupancy_gain_rate =
        get_or<double>(p, "occupancy_gain_rate", c.occupancy_gain_rate);
    c.envelope_zone_rate = get_or<double>(p, "envelope_zone_rate", c.envelope_zone_rate);
    c.envelope_out_rate = get_or<double>(p, "envelope_out_rate", c.envelope_out_rate);
    c.humidity_relax_rate =
        get_or<double>(p, "humidity_relax_rate", c.humidity_relax_rate);
    c.humidity_spray_rate =
        get_or<double>(p, "humidity_spray_rate", c.humidity_spray_rate);
    c.substep_min = get_or<double>(p, "substep_min", c.substep_min);
    cfg.initial.zone_temp_c = get_or<double>(p, "initial_zone_temp_c", cfg.initial.zone_temp_c);
    cfg.initial.envelope_temp_c =
        get_or<double>(p, "initial_envelope_temp_c", cfg.initial.envelope_temp_c);
    cfg.initial.humidity_rh = get_or<double>(p, "initial_humidity_rh", cfg.initial.humidity_rh);
  }

  if (j.contains("weather")) {
    const auto& w = j.at("weather");
    const auto mode = get_or<std::string>(w, "mode", "generated");
    if (mode == "generated") {
      cfg.weather.mode = plant::WeatherConfig::Mode::Generated;
    } else if (mode == "constant") {
      cfg.weather.mode = plant::WeatherConfig::Mode::Constant;
    } else {
      throw ConfigError("scenario: weather mode must be 'generated' or 'constant'");
    }
    cfg.weather.t_mean_annual_c = get_or<double>(w, "t_mean_annual_c", cfg.weather.t_mean_annual_c);
    cfg.weather.t_seasonal_amp_c = get_or<double>(w, "t_seasonal_amp_c", cfg.weather.t_seasonal_amp_c);
    cfg.weather.warmest_day_offset =
        get_or<int>(w, "warmest_day_offset", cfg.weather.warmest_day_offset);
    cfg.weather.t_diurnal_amp_c = get_or<double>(w, "t_diurnal_amp_c", cfg.weather.t_diurnal_amp_c);
    cfg.weather.t_noise_c = get_or<double>(w, "t_noise_c", cfg.weather.t_noise_c);
    cfg.weather.h_mean_rh = get_or<double>(w, "h_mean_rh", cfg.weather.h_mean_rh);
    cfg.weather.wind_mean_ms = get_or<double>(w, "wind_mean_ms", cfg.weather.wind_mean_ms);
    cfg.weather.solar_peak_wm2 = get_or<double>(w, "solar_peak_wm2", cfg.weather.solar_peak_wm2);
    if (w.contains("sunrise")) {
      cfg.weather.sunrise_min = parse_time_of_day(get_field<std::string>(w, "sunrise"));
    }
    if (w.contains("sunset")) {
      cfg.weather.sunset_min = parse_time_of_day(get_field<std::string>(w, "sunset"));
    }
    if (w.contains("constant")) {
      const auto& c = w.at("constant");
      cfg.weather.constant.t_out = get_or<double>(c, "t_out", 5.0);
      cfg.weather.constant.h_out = get_or<double>(c, "h_out", 70.0);
      cfg.weather.constant.w_speed = get_or<double>(c, "w_speed", 3.0);
      cfg.weather.constant.s_rad = get_or<double>(c, "s_rad", 0.0);
      cfg.weather.constant.occupancy = get_or<double>(c, "occupancy", 0.0);
    }
  }

  if (j.contains("sensors")) {
    const auto& s = j.at("sensors");
    cfg.sensor_noise.enabled = get_or<bool>(s, "noise", true);
    cfg.sensor_noise.temp_amp_c = get_or<double>(s, "temp_amp_c", 2.0);
    cfg.sensor_noise.hum_amp_rh = get_or<double>(s, "hum_amp_rh", 5.0);
    if (s.contains("dropouts")) {
      for (const auto& d : s.at("dropouts")) {
        telemetry::DropoutWindow win;
        win.sensor_id = get_field<int>(d, "sensor_id");
        try {
          win.start = parse_minute(get_field<std::string>(d, "start"));
          win.end = parse_minute(get_field<std::string>(d, "end"));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("scenario: dropout: ") + e.what());
        }
        cfg.dropouts.push_back(win);
      }
    }
  }

  if (j.contains("manual_schedule")) {
    cfg.manual_schedule.clear();
    for (const auto& w : j.at("manual_schedule")) {
      if (!w.is_array() || w.size() != 2) {
        throw ConfigError("scenario: manual_schedule entries are [start, stop] pairs");
      }
      cfg.manual_schedule.push_back(
          {parse_time_of_day(w[0].get<std::string>()),
           parse_time_of_day(w[1].get<std::string>())});
    }
  }

  if (j.contains("mpc")) {
    const auto& m = j.at("mpc");
    cfg.mpc.horizon = get_or<int>(m, "horizon", cfg.mpc.horizon);
    cfg.mpc.sampling_min = get_or<int>(m, "sampling_minutes", cfg.mpc.sampling_min);
    cfg.mpc.tracking_weight = get_or<double>(m, "tracking_weight", cfg.mpc.tracking_weight);
    cfg.mpc.move_weight = get_or<double>(m, "move_weight", cfg.mpc.move_weight);
    if (m.contains("comfort_band_c")) {
      const auto& band = m.at("comfort_band_c");
      if (!band.is_array() || band.size() != 2) {
        throw ConfigError("scenario: comfort_band_c is a [lo, hi] pair");
      }
      cfg.mpc.comfort_lo_c = band[0].get<double>();
      cfg.mpc.comfort_hi_c = band[1].get<double>();
    }
    cfg.delay_minutes = get_or<double>(m, "delay_minutes", cfg.delay_minutes);
    cfg.protection_minutes = get_or<int>(m, "protection_minutes", cfg.protection_minutes);
    cfg.epsilon_c = get_or<double>(m, "epsilon_c", cfg.epsilon_c);
    const auto actuator = get_or<std::string>(m, "actuator", "binary");
    if (actuator == "binary") {
      cfg.actuator = plant::ActuatorMode::Binary;
    } else if (actuator == "analog") {
      cfg.actuator = plant::ActuatorMode::Analog;
    } else {
      throw ConfigError("scenario: actuator must be 'binary' or 'analog'");
    }
    if (m.contains("active_window")) {
      const auto& win = m.at("active_window");
      cfg.active_start_min = parse_time_of_day(win.at(0).get<std::string>());
      cfg.active_stop_min = parse_time_of_day(win.at(1).get<std::string>());
    }
    cfg.idle_drop_c = get_or<double>(m, "idle_drop_c", cfg.idle_drop_c);
    if (m.contains("edf_time")) {
      cfg.edf_minute = parse_time_of_day(m.at("edf_time").get<std::string>());
    }
    if (m.contains("retrain_time")) {
      cfg.retrain_minute = parse_time_of_day(m.at("retrain_time").get<std::string>());
    }
    cfg.edf_horizon_min = get_or<int>(m, "edf_horizon_minutes", cfg.edf_horizon_min);
    cfg.edf_step_min = get_or<int>(m, "edf_step_minutes", cfg.edf_step_min);
    cfg.edf_noise_tol_c = get_or<double>(m, "edf_noise_tol_c", cfg.edf_noise_tol_c);
    if (m.contains("fos_prior")) {
      const auto& fp = m.at("fos_prior");
      const auto& inc = fp.at("increasing");
      const auto& dec = fp.at("decreasing");
      cfg.fos_prior_inc.kp = get_field<double>(inc, "kp");
      cfg.fos_prior_inc.tau = get_field<double>(inc, "tau");
      cfg.fos_prior_dec.kp = get_field<double>(dec, "kp");
      cfg.fos_prior_dec.tau = get_field<double>(dec, "tau");
      cfg.fos_prior_inc.theta = cfg.delay_minutes;
      cfg.fos_prior_dec.theta = cfg.delay_minutes;
    }
  }

  if (j.contains("training")) {
    const auto& t = j.at("training");
    cfg.training.window_days = get_or<int>(t, "window_days", cfg.training.window_days);
    cfg.training.k_folds = get_or<int>(t, "k_folds", cfg.training.k_folds);
    cfg.training.max_samples = get_or<std::size_t>(t, "max_samples", cfg.training.max_samples);
    cfg.training.min_samples = get_or<std::size_t>(t, "min_samples", cfg.training.min_samples);
    cfg.training.hyper.hidden =
        get_or<std::vector<int>>(t, "hidden", cfg.training.hyper.hidden);
    cfg.training.hyper.learning_rate =
        get_or<double>(t, "learning_rate", cfg.training.hyper.learning_rate);
    cfg.training.hyper.batch_size = get_or<int>(t, "batch_size", cfg.training.hyper.batch_size);
    cfg.training.hyper.max_epochs = get_or<int>(t, "max_epochs", cfg.training.hyper.max_epochs);
    cfg.training.hyper.patience = get_or<int>(t, "patience", cfg.training.hyper.patience);
  }

  if (j.contains("feedback_script") && !j.at("feedback_script").is_null()) {
    cfg.feedback_script = std::filesystem::path(get_field<std::string>(j, "feedback_script"));
  }

  if (j.contains("electrical")) {
    const auto& e = j.at("electrical");
    cfg.electrical.volts = get_or<double>(e, "volts", cfg.electrical.volts);
    cfg.electrical.amps = get_or<double>(e, "amps", cfg.electrical.amps);
    cfg.electrical.cos_phi = get_or<double>(e, "cos_phi", cfg.electrical.cos_phi);
  }

  if (j.contains("occupancy_window")) {
    const auto& w = j.at("occupancy_window");
    cfg.occupancy_start_min = parse_time_of_day(w.at(0).get<std::string>());
    cfg.occupancy_stop_min = parse_time_of_day(w.at(1).get<std::string>());
  }

  validate(cfg);
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("scenario: invalid JSON in " + path.string());
  }
  return scenario_from_json(j);
}

nlohmann::ordered_json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = cfg.schema_version;
  j["name"] = cfg.name;
  j["start_date"] = format_date(cfg.start_date);
  j["days"] = cfg.days;
  j["seed"] = cfg.seed;
  j["controller"] = cfg.controller == ControllerKind::Mpc ? "mpc" : "manual";
  j["warmup_days"] = cfg.warmup_days;

  auto& p = j["plant"];
  p["zones"] = cfg.plant_coeffs.zones;
  p["zone_envelope_rate"] = cfg.plant_coeffs.zone_envelope_rate;
  p["infiltration_rate"] = cfg.plant_coeffs.infiltration_rate;
  p["infiltration_wind_rate"] = cfg.plant_coeffs.infiltration_wind_rate;
  p["ahu_heat_rate"] = cfg.plant_coeffs.ahu_heat_rate;
  p["solar_gain_rate"] = cfg.plant_coeffs.solar_gain_rate;
  p["occupancy_gain_rate"] = cfg.plant_coeffs.occupancy_gain_rate;
  p["envelope_zone_rate"] = cfg.plant_coeffs.envelope_zone_rate;
  p["envelope_out_rate"] = cfg.plant_coeffs.envelope_out_rate;
  p["humidity_relax_rate"] = cfg.plant_coeffs.humidity_relax_rate;
  p["humidity_spray_rate"] = cfg.plant_coeffs.humidity_spray_rate;
  p["substep_min"] = cfg.plant_coeffs.substep_min;
  p["initial_zone_temp_c"] = cfg.initial.zone_temp_c;
  p["initial_envelope_temp_c"] = cfg.initial.envelope_temp_c;
  p["initial_humidity_rh"] = cfg.initial.humidity_rh;

  auto& w = j["weather"];
  w["mode"] = cfg.weather.mode == plant::WeatherConfig::Mode::Generated
                  ? "generated"
                  : "constant";
  w["t_mean_annual_c"] = cfg.weather.t_mean_annual_c;
  w["t_seasonal_amp_c"] = cfg.weather.t_seasonal_amp_c;
  w["warmest_day_offset"] = cfg.weather.warmest_day_offset;
  w["t_diurnal_amp_c"] = cfg.weather.t_diurnal_amp_c;
  w["t_noise_c"] = cfg.weather.t_noise_c;
  w["h_mean_rh"] = cfg.weather.h_mean_rh;
  w["wind_mean_ms"] = cfg.weather.wind_mean_ms;
  w["solar_peak_wm2"] = cfg.weather.solar_peak_wm2;
  w["sunrise"] = window_string(cfg.weather.sunrise_min);
  w["sunset"] = window_string(cfg.weather.sunset_min);
  w["constant"] = {{"t_out", cfg.weather.constant.t_out},
                   {"h_out", cfg.weather.constant.h_out},
                   {"w_speed", cfg.weather.constant.w_speed},
                   {"s_rad", cfg.weather.constant.s_rad},
                   {"occupancy", cfg.weather.constant.occupancy}};

  auto& s = j["sensors"];
  s["noise"] = cfg.sensor_noise.enabled;
  s["temp_amp_c"] = cfg.sensor_noise.temp_amp_c;
  s["hum_amp_rh"] = cfg.sensor_noise.hum_amp_rh;
  s["dropouts"] = nlohmann::ordered_json::array();
  for (const auto& d : cfg.dropouts) {
    s["dropouts"].push_back({{"sensor_id", d.sensor_id},
                             {"start", format_minute(d.start)},
                             {"end", format_minute(d.end)}});
  }

  j["manual_schedule"] = nlohmann::ordered_json::array();
  for (const auto& win : cfg.manual_schedule) {
    j["manual_schedule"].push_back(
        {window_string(win.start_min), window_string(win.stop_min)});
  }

  auto& m = j["mpc"];
  m["horizon"] = cfg.mpc.horizon;
  m["sampling_minutes"] = cfg.mpc.sampling_min;
  m["tracking_weight"] = cfg.mpc.tracking_weight;
  m["move_weight"] = cfg.mpc.move_weight;
  m["comfort_band_c"] = {cfg.mpc.comfort_lo_c, cfg.mpc.comfort_hi_c};
  m["delay_minutes"] = cfg.delay_minutes;
  m["protection_minutes"] = cfg.protection_minutes;
  m["epsilon_c"] = cfg.epsilon_c;
  m["actuator"] = cfg.actuator == plant::ActuatorMode::Binary ? "binary" : "analog";
  m["active_window"] = {window_string(cfg.active_start_min),
                        window_string(cfg.active_stop_min)};
  m["idle_drop_c"] = cfg.idle_drop_c;
  m["edf_time"] = window_string(cfg.edf_minute);
  m["retrain_time"] = window_string(cfg.retrain_minute);
  m["edf_horizon_minutes"] = cfg.edf_horizon_min;
  m["edf_step_minutes"] = cfg.edf_step_min;
  m["edf_noise_tol_c"] = cfg.edf_noise_tol_c;
  m["fos_prior"] = {
      {"increasing", {{"kp", cfg.fos_prior_inc.kp}, {"tau", cfg.fos_prior_inc.tau}}},
      {"decreasing", {{"kp", cfg.fos_prior_dec.kp}, {"tau", cfg.fos_prior_dec.tau}}}};

  auto& t = j["training"];
  t["window_days"] = cfg.training.window_days;
  t["k_folds"] = cfg.training.k_folds;
  t["max_samples"] = cfg.training.max_samples;
  t["min_samples"] = cfg.training.min_samples;
  t["hidden"] = cfg.training.hyper.hidden;
  t["learning_rate"] = cfg.training.hyper.learning_rate;
  t["batch_size"] = cfg.training.hyper.batch_size;
  t["max_epochs"] = cfg.training.hyper.max_epochs;
  t["patience"] = cfg.training.hyper.patience;

  if (cfg.feedback_script) {
    j["feedback_script"] = cfg.feedback_script->string();
  } else {
    j["feedback_script"] = nullptr;
  }

  j["electrical"] = {{"volts", cfg.electrical.volts},
                     {"amps", cfg.electrical.amps},
                     {"cos_phi", cfg.electrical.cos_phi}};
  j["occupancy_window"] = {window_string(cfg.occupancy_start_min),
                           window_string(cfg.occupancy_stop_min)};
  return j;
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  validate(cfg);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("scenario: cannot write " + path.string());
  out << scenario_to_json(cfg).dump(2) << "\n";
}

std::vector<mpc::SetpointFeedback> load_feedback(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open feedback script " + path.string());
  std::vector<mpc::SetpointFeedback> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      std::cerr << "feedback: skipping corrupt line " << lineno << "\n";
      continue;
    }
    mpc::SetpointFeedback fb;
    fb.user_id = j.at("user_id").is_string()
                     ? j.at("user_id").get<std::string>()
                     : std::to_string(j.at("user_id").get<long long>());
    fb.value_c = j.at("value").get<double>();
    fb.timestamp = parse_minute(j.at("date").get<std::string>());
    out.push_back(std::move(fb));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });
  return out;
}

}  // namespace ahumpc::scenario
