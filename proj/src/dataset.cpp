#include "ahumpc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include "ahumpc/rng.hpp"

namespace ahumpc::dataset {

std::array<double, 8> to_features(const TrainingSample& s) {
  return {s.t_init, s.delta_t, s.i_ahu, s.t_out,
          s.h_out,  s.w_speed, s.s_rad,  s.s_energy};
}

namespace {

struct MovementRun {
  Minute start, end;
  bool on;
  double mean_gain;
};

std::vector<MovementRun> run_length_encode(
    std::span<const telemetry::MpcMovement> movements, int sampling_min) {
  std::vector<telemetry::MpcMovement> sorted(movements.begin(), movements.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

  std::vector<MovementRun> runs;
  double gain_sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const bool on = sorted[i].on_minutes > 0.0;
    const bool chain = !runs.empty() && count > 0 &&
                       sorted[i].timestamp == runs.back().end &&
                       on == runs.back().on;
    if (chain) {
      runs.back().end = sorted[i].timestamp + sampling_min;
      gain_sum += sorted[i].on_minutes / sampling_min;
      ++count;
      runs.back().mean_gain = gain_sum / count;
    } else {
      gain_sum = sorted[i].on_minutes / sampling_min;
      count = 1;
      runs.push_back({sorted[i].timestamp, sorted[i].timestamp + sampling_min,
                      on, gain_sum});
    }
  }
  return runs;
}

}  // namespace

std::vector<Session> extract_sessions(
    std::span<const telemetry::MpcMovement> movements,
    std::span<const telemetry::AitRecord> ait_log, int sampling_min) {
  if (sampling_min <= 0 || sampling_min % 5 != 0) {
    throw std::invalid_argument("dataset: sampling must be a positive multiple of 5");
  }
  std::map<Minute, double> ait;
  for (const auto& rec : ait_log) ait[rec.timestamp] = rec.ait;

  std::vector<Session> sessions;
  for (const auto& run : run_length_encode(movements, sampling_min)) {
    // Walk the 5-minute grid; AIT gaps split the run into separate sessions.
    TemperatureTrace trace;
    trace.resolution_min = 5.0;
    auto flush = [&]() {
      if (trace.samples.size() >= 2) {
        Session s;
        s.start = static_cast<Minute>(trace.samples.front().t_min);
        s.end = static_cast<Minute>(trace.samples.back().t_min);
        s.direction = run.on ? Direction::Increasing : Direction::Decreasing;
        s.mean_gain = run.on ? run.mean_gain : 0.0;
        s.ait_trace = trace;
        sessions.push_back(std::move(s));
      }
      trace.samples.clear();
    };
    for (Minute t = run.start; t <= run.end; t += 5) {
      auto it = ait.find(t);
      if (it == ait.end()) {
        flush();
      } else {
        trace.samples.push_back({static_cast<double>(t), it->second});
      }
    }
    flush();
  }
  return sessions;
}

Dataset expand_pairs(const Session& session, const DisturbanceFn& disturbances,
                     int max_delta_min) {
  session.ait_trace.validate();
  if (session.ait_trace.resolution_min != 5.0) {
    throw std::invalid_argument("dataset: session trace must be on the 5-minute grid");
  }
  const auto& s = session.ait_trace.samples;
  const std::size_t n = s.size();
  Dataset out;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Minute t_i = static_cast<Minute>(s[i].t_min);
    const plant::Disturbances d = disturbances(t_i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dt = s[j].t_min - s[i].t_min;
      if (dt > max_delta_min) break;
      TrainingSample sample;
      sample.t_init = s[i].temp_c;
      sample.delta_t = dt;
      sample.i_ahu = session.mean_gain;
      sample.t_out = d.t_out;
      sample.h_out = d.h_out;
      sample.w_speed = d.w_speed;
      sample.s_rad = d.s_rad;
      sample.s_energy = d.s_energy;
      sample.target = s[j].temp_c - s[i].temp_c;
      out.push_back(sample);
    }
  }
  return out;
}

DatasetSplits split_dataset(Dataset samples, Direction direction,
                            const SplitConfig& cfg) {
  DatasetSplits out;
  out.direction = direction;
  Rng rng(mix_seed(cfg.seed, direction == Direction::Increasing ? 1 : 2));
  rng.shuffle(samples);
  if (cfg.max_samples > 0 && samples.size() > cfg.max_samples) {
    samples.resize(cfg.max_samples);
  }
  const std::size_t n = samples.size();
  const auto n_train = static_cast<std::size_t>(cfg.train_fraction * n);
  const auto n_val = static_cast<std::size_t>(cfg.val_fraction * n);
  out.train.assign(samples.begin(), samples.begin() + n_train);
  out.val.assign(samples.begin() + n_train, samples.begin() + n_train + n_val);
  out.test.assign(samples.begin() + n_train + n_val, samples.end());
  return out;
}

std::pair<DatasetSplits, DatasetSplits> build_daily(
    Minute window_end, std::span<const telemetry::MpcMovement> movements,
    std::span<const telemetry::AitRecord> ait_log,
    const DisturbanceFn& disturbances, const SplitConfig& cfg) {
  const Minute cutoff = window_end - static_cast<Minute>(cfg.window_days) * kMinutesPerDay;

  std::vector<telemetry::MpcMovement> windowed;
  for (const auto& m : movements) {
    if (m.timestamp >= cutoff && m.timestamp < window_end) windowed.push_back(m);
  }
  std::vector<telemetry::AitRecord> ait;
  for (const auto& r : ait_log) {
    if (r.timestamp >= cutoff && r.timestamp <= window_end) ait.push_back(r);
  }

  Dataset increasing, decreasing;
  for (const auto& session : extract_sessions(windowed, ait)) {
    auto samples = expand_pairs(session, disturbances);
    auto& sink = session.direction == Direction::Increasing ? increasing : decreasing;
    sink.insert(sink.end(), samples.begin(), samples.end());
  }
  if (increasing.empty() || decreasing.empty()) {
    throw std::invalid_argument("dataset: empty training window for at least one direction");
  }
  return {split_dataset(std::move(increasing), Direction::Increasing, cfg),
          split_dataset(std::move(decreasing), Direction::Decreasing, cfg)};
}

void export_ndjson(const Dataset& data, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot open " + path.string());
  for (const auto& s : data) {
    nlohmann::ordered_json j{{"t_init", s.t_init},   {"delta_t", s.delta_t},
                             {"i_ahu", s.i_ahu},     {"t_out", s.t_out},
                             {"h_out", s.h_out},     {"w_speed", s.w_speed},
                             {"s_rad", s.s_rad},     {"s_energy", s.s_energy},
                             {"target", s.target}};
    out << j.dump() << '\n';
  }
}

Dataset import_ndjson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot open " + path.string());
  Dataset out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      std::cerr << "dataset: skipping corrupt line " << lineno << " in "
                << path.string() << "\n";
      continue;
    }
    TrainingSample s;
    s.t_init = j.at("t_init").get<double>();
    s.delta_t = j.at("delta_t").get<double>();
    s.i_ahu = j.at("i_ahu").get<double>();
    s.t_out = j.at("t_out").get<double>();
    s.h_out = j.at("h_out").get<double>();
    s.w_speed = j.at("w_speed").get<double>();
    s.s_rad = j.at("s_rad").get<double>();
    s.s_energy = j.at("s_energy").get<double>();
    s.target = j.at("target").get<double>();
    out.push_back(s);
  }
  return out;
}

}  // namespace ahumpc::dataset
