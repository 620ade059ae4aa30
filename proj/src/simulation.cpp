#include "ahumpc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "ahumpc/mapper.hpp"
#include "ahumpc/rng.hpp"

namespace ahumpc::sim {

RunPaths RunPaths::at(const std::filesystem::path& dir) {
  RunPaths p;
  p.dir = dir;
  p.sensor_db = dir / "sensor-db.ndjson";
  p.movements = dir / "mpc-movements.ndjson";
  p.ait = dir / "ait.ndjson";
  p.connectivity = dir / "connectivity.ndjson";
  p.events = dir / "events.ndjson";
  p.models_dir = dir / "models";
  p.metrics = dir / "models" / "metrics.ndjson";
  p.meta = dir / "run_meta.json";
  p.datasets_dir = dir / "datasets";
  return p;
}

namespace {

using scenario::ControllerKind;
using scenario::ScenarioConfig;

class ScenarioRunner {
 public:
  ScenarioRunner(const ScenarioConfig& cfg, const std::filesystem::path& out_dir)
      : cfg_(cfg),
        paths_(RunPaths::at(out_dir)),
        movement_store_(paths_.movements),
        ait_store_(paths_.ait),
        connectivity_store_(paths_.connectivity),
        event_store_(paths_.events),
        metrics_store_(paths_.metrics),
        state_(plant::make_initial_state(cfg.plant_coeffs, cfg.initial.zone_temp_c,
                                         cfg.initial.envelope_temp_c,
                                         cfg.initial.humidity_rh)) {
    sensor_out_.open(paths_.sensor_db, std::ios::app);
    if (!sensor_out_) {
      throw std::runtime_error("sim: cannot open " + paths_.sensor_db.string());
    }
    if (cfg_.feedback_script) {
      feedback_ = scenario::load_feedback(*cfg_.feedback_script);
    }
    fos_inc_ = cfg_.fos_prior_inc;
    fos_dec_ = cfg_.fos_prior_dec;
    fos_inc_.theta = cfg_.delay_minutes;
    fos_dec_.theta = cfg_.delay_minutes;
    y_base_ = cfg_.initial.zone_temp_c;
    write_meta();
  }

  RunResult run(bool export_datasets) {
    const Minute t0 = cfg_.start_minute();
    for (int day = 0; day < cfg_.days; ++day) {
      for (int tick = 0; tick < kMinutesPerDay / 5; ++tick) {
        const Minute now = t0 + Minute(day) * kMinutesPerDay + Minute(tick) * 5;
        telemetry_step(now);
        if ((tick * 5) % cfg_.mpc.sampling_min == 0) control_step(now, day);
        actuate(now);
      }
    }
    if (export_datasets) export_final_datasets();
    result_.paths = paths_;
    result_.days = cfg_.days;
    return result_;
  }

 private:
  bool is_mpc_run() const { return cfg_.controller == ControllerKind::Mpc; }

  plant::Disturbances disturbances_at(Minute abs_min) {
    const Minute t0 = cfg_.start_minute();
    const std::int64_t day = day_of(abs_min) - day_of(t0);
    auto it = weather_.find(day);
    if (it == weather_.end()) {
      it = weather_
               .emplace(day, plant::generate_weather(mix_seed(cfg_.seed, 0x57EA),
                                                     day, cfg_.weather))
               .first;
    }
    return it->second.at_minute_of_day(minute_of_day(abs_min));
  }

  void telemetry_step(Minute now) {
    auto readings = telemetry::sample_sensors(state_, now,
                                              mix_seed(cfg_.seed, 0x5E5E),
                                              cfg_.sensor_noise, cfg_.dropouts);
    for (const auto& r : readings) {
      broker_.publish("sensors", telemetry::to_json(r).dump());
    }
    const auto payloads = broker_.peek("sensors");
    std::vector<telemetry::SensorReading> received;
    received.reserve(payloads.size());
    for (const auto& p : payloads) {
      sensor_store_raw(p);
      received.push_back(telemetry::reading_from_json(nlohmann::json::parse(p)));
    }
    broker_.ack("sensors", payloads.size());

    if (auto rec = telemetry::aggregate_ait(received)) {
      rec->timestamp = now;
      ait_store_.append(telemetry::to_json(*rec));
      ait_log_.push_back(*rec);
    } else {
      telemetry::ConnectivityEvent ev{now, {}};
      for (int id = 1; id <= cfg_.plant_coeffs.zones; ++id) {
        ev.missing_sensors.push_back(id);
      }
      connectivity_store_.append(telemetry::to_json(ev));
    }
    if (!received.empty() &&
        static_cast<int>(received.size()) < cfg_.plant_coeffs.zones) {
      telemetry::ConnectivityEvent ev{now, {}};
      std::vector<bool> seen(cfg_.plant_coeffs.zones + 1, false);
      for (const auto& r : received) seen[r.sensor_id] = true;
      for (int id = 1; id <= cfg_.plant_coeffs.zones; ++id) {
        if (!seen[id]) ev.missing_sensors.push_back(id);
      }
      connectivity_store_.append(telemetry::to_json(ev));
    }
  }

  void control_step(Minute now, int day) {
    const int tod = minute_of_day(now);
    if (is_mpc_run() && tod == cfg_.retrain_minute && day >= 1) nightly_retrain(now);
    if (is_mpc_run() && tod == cfg_.edf_minute) refresh_fos(now);

    const bool warmup = is_mpc_run() && day < cfg_.warmup_days;
    const bool manual = !is_mpc_run() || warmup;

    const bool have_ait = !ait_log_.empty() && ait_log_.back().timestamp == now;
    const double ait = ait_log_.empty() ? state_.zone_mean() : ait_log_.back().ait;
    const double setpoint =
        mpc::effective_setpoint(feedback_, now, fos_inc_.tau, cfg_.mpc);

    telemetry::MpcMovement mv;
    mv.timestamp = now;
    mv.ait = ait;
    mv.controller = manual ? "manual" : "mpc";

    if (manual) {
      const auto cmd = plant::clock_controller(tod, cfg_.manual_schedule);
      interval_on_minutes_ = cmd.gain > 0.0 ? cfg_.mpc.sampling_min : 0;
      interval_u_ = cmd.gain;
      mv.setpoint = setpoint;
      mv.u_optimal = cmd.gain;
      mv.on_minutes = interval_on_minutes_;
    } else if (!have_ait) {
      // Missing AIT record: hold the previous command, the gap is already in
      // the connectivity log.
      mv.setpoint = setpoint;
      mv.u_optimal = interval_u_;
      mv.on_minutes = interval_on_minutes_;
      log_event(now, "hold", "missing AIT record; holding previous command");
    } else {
      const bool active = tod >= cfg_.active_start_min && tod < cfg_.active_stop_min;
      const double tracked_setpoint = active ? setpoint : ait - cfg_.idle_drop_c;

      const auto model = mpc::discretize_internal_model(fos_inc_, cfg_.mpc.sampling_min);
      const double x0 = ait - y_base_;
      std::vector<double> ysp(cfg_.mpc.horizon, tracked_setpoint - y_base_);

      mpc::ControlPlan plan;
      try {
        plan = mpc::solve(x0, ysp, cfg_.mpc, model, u_prev_, warm_start_);
      } catch (const mpc::SolverNotConverged& e) {
        plan = e.best;
        log_event(now, "solver", "iteration cap hit; using best iterate");
      }
      warm_start_.assign(plan.u.begin() + 1, plan.u.end());
      warm_start_.push_back(plan.u.back());

      const double u0 = plan.u.front();
      int on_minutes;
      if (cfg_.actuator == plant::ActuatorMode::Analog) {
        on_minutes = static_cast<int>(std::lround(u0 * cfg_.mpc.sampling_min));
        interval_u_ = u0;
      } else {
        auto mapped = mapper::map_to_on_time(u0, fos_inc_, fos_dec_, ait,
                                             cfg_.mpc.sampling_min, cfg_.epsilon_c);
        if (!mapped.exact && u0 > 0.0) {
          log_event(now, "mapper",
                    "inexact mapping, end error " + std::to_string(mapped.end_error_c));
        }
        on_minutes = mapper::apply_protection(
            mapped.on_minutes,
            mapper::ProtectionPolicy{static_cast<double>(cfg_.protection_minutes)},
            cfg_.mpc.sampling_min);
        interval_u_ = 0.0;  // binary: gain is 1 during the ON window
      }
      interval_on_minutes_ = on_minutes;
      u_prev_ = static_cast<double>(on_minutes) / cfg_.mpc.sampling_min;

      mv.setpoint = tracked_setpoint;
      mv.u_optimal = u0;
      mv.on_minutes = on_minutes;
    }

    interval_elapsed_ = 0;
    movement_store_.append(telemetry::to_json(mv));
    movements_.push_back(mv);
    ++result_.movement_count;
    result_.total_on_hours += mv.on_minutes / 60.0;
  }

  void actuate(Minute now) {
    const plant::Disturbances d = disturbances_at(now);
    for (int m = 0; m < 5; ++m) {
      plant::AhuCommand cmd;
      if (cfg_.actuator == plant::ActuatorMode::Analog && interval_u_ > 0.0 &&
          interval_on_minutes_ > 0) {
        cmd = {interval_u_, plant::ActuatorMode::Analog};
      } else {
        cmd = {interval_elapsed_ < interval_on_minutes_ ? 1.0 : 0.0,
               plant::ActuatorMode::Binary};
      }
      state_ = plant::step_plant(state_, cmd, d, 1.0, cfg_.plant_coeffs);
      ++interval_elapsed_;
    }
  }

  void nightly_retrain(Minute now) {
    const Minute window_end = now - minute_of_day(now);  // last midnight
    dataset::SplitConfig split;
    split.window_days = cfg_.training.window_days;
    split.seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(window_end));
    split.max_samples = cfg_.training.max_samples;
    try {
      auto [inc, dec] = dataset::build_daily(
          window_end, movements_, ait_log_,
          [this](Minute t) { return disturbances_at(t); }, split);
      if (inc.total() < cfg_.training.min_samples ||
          dec.total() < cfg_.training.min_samples) {
        log_event(now, "retrain", "window too small; keeping previous models");
        return;
      }
      surrogate::Hyperparams hp = cfg_.training.hyper;
      hp.seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(window_end), 0x7777);
      auto [model_inc, report_inc] = surrogate::train(inc, cfg_.training.k_folds, hp);
      auto [model_dec, report_dec] = surrogate::train(dec, cfg_.training.k_folds, hp);
      stamp_window(model_inc, window_end);
      stamp_window(model_dec, window_end);
      model_inc_ = std::move(model_inc);
      model_dec_ = std::move(model_dec);
      surrogate::save_model(*model_inc_, paths_.models_dir / "increasing.json");
      surrogate::save_model(*model_dec_, paths_.models_dir / "decreasing.json");
      append_metrics(now, report_inc);
      append_metrics(now, report_dec);
      ++result_.retrains;
    } catch (const std::exception& e) {
      log_event(now, "retrain", std::string("failed: ") + e.what());
    }
  }

  void stamp_window(surrogate::MlpModel& m, Minute window_end) const {
    const Minute start =
        std::max(cfg_.start_minute(),
                 window_end - Minute(cfg_.training.window_days) * kMinutesPerDay);
    m.window_start = format_minute(start).substr(0, 10);
    m.window_end = format_minute(window_end).substr(0, 10);
  }

  void append_metrics(Minute now, const surrogate::MetricsReport& r) {
    metrics_store_.append(
        {{"date", format_minute(now)},
         {"direction", to_string(r.direction)},
         {"train_size", r.train_size},
         {"val_size", r.val_size},
         {"test_size", r.test_size},
         {"mse", r.mse},
         {"scaled_mae", r.scaled_mae},
         {"explained_variance", r.explained_variance},
         {"r_squared", r.r_squared}});
  }

  void refresh_fos(Minute now) {
    if (!model_inc_ || !model_dec_) {
      log_event(now, "edf", "no trained models yet; keeping prior parameters");
      ++result_.edf_fallbacks;
      return;
    }
    const double t_init = ait_log_.empty() ? state_.zone_mean() : ait_log_.back().ait;
    auto fn = [this](Minute t) { return disturbances_at(t); };
    try {
      auto inc_curve = surrogate::generate_edf(*model_inc_, t_init, 1.0, fn, now,
                                               cfg_.edf_horizon_min, cfg_.edf_step_min);
      auto dec_curve = surrogate::generate_edf(*model_dec_, t_init, 0.0, fn, now,
                                               cfg_.edf_horizon_min, cfg_.edf_step_min);
      auto inc = surrogate::edf_to_fos(inc_curve, cfg_.delay_minutes,
                                       cfg_.edf_noise_tol_c);
      auto dec = surrogate::edf_to_fos(dec_curve, cfg_.delay_minutes,
                                       cfg_.edf_noise_tol_c);
      if (!plausible(inc, true) || !plausible(dec, false)) {
        throw std::runtime_error("extracted parameters outside plausible ranges");
      }
      fos_inc_ = inc;
      fos_dec_ = dec;
      y_base_ = t_init;
      ++result_.edf_refreshes;
      log_event(now, "edf",
                "kp_inc=" + std::to_string(inc.kp) + " tau_inc=" + std::to_string(inc.tau) +
                    " kp_dec=" + std::to_string(dec.kp) + " tau_dec=" + std::to_string(dec.tau));
    } catch (const std::exception& e) {
      ++result_.edf_fallbacks;
      log_event(now, "edf", std::string("fallback: ") + e.what());
    }
  }

  static bool plausible(const fos::FosParams& p, bool increasing) {
    if (!(p.tau >= 20.0 && p.tau <= 2000.0)) return false;
    const double mag = std::abs(p.kp);
    if (!(mag >= 0.5 && mag <= 40.0)) return false;
    return increasing ? p.kp > 0.0 : p.kp < 0.0;
  }

  void export_final_datasets() {
    dataset::SplitConfig split;
    split.window_days = cfg_.training.window_days;
    split.seed = cfg_.seed;
    split.max_samples = 0;
    try {
      auto [inc, dec] = dataset::build_daily(
          cfg_.end_minute(), movements_, ait_log_,
          [this](Minute t) { return disturbances_at(t); }, split);
      auto dump = [&](const dataset::DatasetSplits& s, const std::string& name) {
        dataset::Dataset all = s.train;
        all.insert(all.end(), s.val.begin(), s.val.end());
        all.insert(all.end(), s.test.begin(), s.test.end());
        dataset::export_ndjson(all, paths_.datasets_dir / (name + ".ndjson"));
      };
      dump(inc, "increasing");
      dump(dec, "decreasing");
    } catch (const std::exception& e) {
      log_event(cfg_.end_minute(), "datasets", std::string("export failed: ") + e.what());
    }
  }

  void log_event(Minute now, const std::string& kind, const std::string& detail) {
    event_store_.append(
        {{"date", format_minute(now)}, {"kind", kind}, {"detail", detail}});
  }

  // The broker payload already is the wire line; persist it verbatim.
  void sensor_store_raw(const std::string& line) {
    sensor_out_ << line << '\n';
    sensor_out_.flush();
  }

  void write_meta() {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["name"] = cfg_.name;
    j["start_date"] = format_date(cfg_.start_date);
    j["days"] = cfg_.days;
    j["seed"] = cfg_.seed;
    j["controller"] = is_mpc_run() ? "mpc" : "manual";
    j["warmup_days"] = cfg_.warmup_days;
    j["electrical"] = {{"volts", cfg_.electrical.volts},
                       {"amps", cfg_.electrical.amps},
                       {"cos_phi", cfg_.electrical.cos_phi}};
    j["occupancy_window"] = {cfg_.occupancy_start_min, cfg_.occupancy_stop_min};
    j["sampling_minutes"] = cfg_.mpc.sampling_min;
    std::ofstream out(paths_.meta);
    out << j.dump(2) << "\n";
  }

  ScenarioConfig cfg_;
  RunPaths paths_;
  telemetry::JsonlStore movement_store_;
  telemetry::JsonlStore ait_store_;
  telemetry::JsonlStore connectivity_store_;
  telemetry::JsonlStore event_store_;
  telemetry::JsonlStore metrics_store_;
  std::ofstream sensor_out_;

  telemetry::Broker broker_;
  plant::PlantState state_;
  std::map<std::int64_t, plant::DisturbanceSeries> weather_;

  std::vector<mpc::SetpointFeedback> feedback_;
  std::vector<telemetry::AitRecord> ait_log_;
  std::vector<telemetry::MpcMovement> movements_;

  std::optional<surrogate::MlpModel> model_inc_, model_dec_;
  fos::FosParams fos_inc_{}, fos_dec_{};
  double y_base_ = 0.0;
  double u_prev_ = 0.0;
  std::vector<double> warm_start_;

  int interval_on_minutes_ = 0;
  int interval_elapsed_ = 0;
  double interval_u_ = 0.0;

  RunResult result_;
};

}  // namespace

RunResult run_scenario(const scenario::ScenarioConfig& cfg,
                       const std::filesystem::path& out_dir,
                       bool export_datasets) {
  scenario::validate(cfg);
  std::filesystem::create_directories(out_dir);
  ScenarioRunner runner(cfg, out_dir);
  return runner.run(export_datasets);
}

}  // namespace ahumpc::sim
