#include "ahumpc/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "ahumpc/rng.hpp"

namespace ahumpc::telemetry {

std::vector<SensorReading> sample_sensors(
    const plant::PlantState& state, Minute timestamp, std::uint64_t seed,
    const SensorNoise& noise, std::span<const DropoutWindow> dropouts) {
  if (timestamp % 5 != 0) {
    throw std::invalid_argument("telemetry: sample timestamp off the 5-minute grid");
  }
  std::vector<SensorReading> out;
  out.reserve(state.zone_temps.size());
  for (std::size_t z = 0; z < state.zone_temps.size(); ++z) {
    const int sensor_id = static_cast<int>(z) + 1;
    bool dropped = false;
    for (const auto& d : dropouts) {
      if (d.sensor_id == sensor_id && timestamp >= d.start && timestamp < d.end) {
        dropped = true;
        break;
      }
    }
    if (dropped) continue;

    SensorReading r;
    r.sensor_id = sensor_id;
    r.timestamp = timestamp;
    if (noise.enabled) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(timestamp),
                       static_cast<std::uint64_t>(sensor_id)));
      r.temperature =
          std::round(state.zone_temps[z] + rng.uniform(-noise.temp_amp_c, noise.temp_amp_c));
      r.humidity = std::clamp(
          std::round(state.indoor_humidity + rng.uniform(-noise.hum_amp_rh, noise.hum_amp_rh)),
          0.0, 100.0);
    } else {
      r.temperature = state.zone_temps[z];
      r.humidity = state.indoor_humidity;
    }
    out.push_back(r);
  }
  return out;
}

std::optional<AitRecord> aggregate_ait(std::span<const SensorReading> readings) {
  if (readings.empty()) return std::nullopt;
  AitRecord rec;
  rec.timestamp = readings.front().timestamp;
  double t_sum = 0.0, h_sum = 0.0;
  for (const auto& r : readings) {
    t_sum += r.temperature;
    h_sum += r.humidity;
  }
  rec.reporting_count = static_cast<int>(readings.size());
  rec.ait = t_sum / rec.reporting_count;
  rec.humidity_avg = h_sum / rec.reporting_count;
  return rec;
}

std::vector<SensorGaps> detect_gaps(std::span<const SensorReading> log,
                                    Minute from, Minute to, int sensor_count) {
  std::set<std::pair<int, Minute>> present;
  for (const auto& r : log) present.insert({r.sensor_id, r.timestamp});

  std::vector<SensorGaps> out;
  const Minute first = from + ((5 - (from % 5)) % 5);
  for (int id = 1; id <= sensor_count; ++id) {
    SensorGaps g;
    g.sensor_id = id;
    for (Minute t = first; t <= to; t += 5) {
      if (!present.count({id, t})) g.missed.push_back(t);
    }
    if (!g.missed.empty()) out.push_back(std::move(g));
  }
  return out;
}

nlohmann::ordered_json to_json(const SensorReading& r) {
  return {{"sensor_id", r.sensor_id},
          {"temperature", r.temperature},
          {"humidity", r.humidity},
          {"date", format_minute(r.timestamp)}};
}

nlohmann::ordered_json to_json(const AitRecord& r) {
  return {{"date", format_minute(r.timestamp)},
          {"ait", r.ait},
          {"humidity_avg", r.humidity_avg},
          {"reporting_count", r.reporting_count}};
}

nlohmann::ordered_json to_json(const MpcMovement& m) {
  return {{"date", format_minute(m.timestamp)},
          {"ait", m.ait},
          {"setpoint", m.setpoint},
          {"u", m.u_optimal},
          {"on_minutes", m.on_minutes},
          {"controller", m.controller}};
}

nlohmann::ordered_json to_json(const ConnectivityEvent& e) {
  return {{"date", format_minute(e.timestamp)},
          {"missing_sensors", e.missing_sensors}};
}

SensorReading reading_from_json(const nlohmann::json& j) {
  SensorReading r;
  r.sensor_id = j.at("sensor_id").get<int>();
  r.temperature = j.at("temperature").get<double>();
  r.humidity = j.at("humidity").get<double>();
  r.timestamp = parse_minute(j.at("date").get<std::string>());
  return r;
}

AitRecord ait_from_json(const nlohmann::json& j) {
  AitRecord r;
  r.timestamp = parse_minute(j.at("date").get<std::string>());
  r.ait = j.at("ait").get<double>();
  r.humidity_avg = j.at("humidity_avg").get<double>();
  r.reporting_count = j.at("reporting_count").get<int>();
  return r;
}

MpcMovement movement_from_json(const nlohmann::json& j) {
  MpcMovement m;
  m.timestamp = parse_minute(j.at("date").get<std::string>());
  m.ait = j.at("ait").get<double>();
  m.setpoint = j.at("setpoint").get<double>();
  m.u_optimal = j.at("u").get<double>();
  m.on_minutes = j.at("on_minutes").get<double>();
  m.controller = j.at("controller").get<std::string>();
  return m;
}

JsonlStore::JsonlStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  out_.open(path_, std::ios::app);
  if (!out_) {
    throw std::runtime_error("store: cannot open " + path_.string());
  }
}

void JsonlStore::append(const nlohmann::ordered_json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) {
    throw std::runtime_error("store: write failed on " + path_.string());
  }
}

std::vector<nlohmann::json> JsonlStore::read_all() const {
  std::vector<nlohmann::json> out;
  std::ifstream in(path_);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("date")) {
      std::cerr << "store: skipping corrupt line " << lineno << " in "
                << path_.string() << "\n";
      continue;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<nlohmann::json> JsonlStore::read_range(Minute from, Minute to) const {
  std::vector<nlohmann::json> out;
  for (auto& j : read_all()) {
    Minute t;
    try {
      t = parse_minute(j.at("date").get<std::string>());
    } catch (const std::exception&) {
      std::cerr << "store: skipping record with bad date in " << path_.string()
                << "\n";
      continue;
    }
    if (t >= from && t <= to) out.push_back(std::move(j));
  }
  return out;
}

void Broker::publish(const std::string& topic, std::string payload) {
  std::lock_guard<std::mutex> lock(mu_);
  topics_[topic].push_back(std::move(payload));
}

std::vector<std::string> Broker::peek(const std::string& topic) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = topics_.find(topic);
  if (it == topics_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

void Broker::ack(const std::string& topic, std::size_t count) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = topics_.find(topic);
  if (it == topics_.end()) return;
  auto& q = it->second;
  q.erase(q.begin(), q.begin() + std::min(count, q.size()));
}

std::size_t Broker::depth(const std::string& topic) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = topics_.find(topic);
  return it == topics_.end() ? 0 : it->second.size();
}

}  // namespace ahumpc::telemetry
