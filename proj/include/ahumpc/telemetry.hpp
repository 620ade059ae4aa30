#pragma once

#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ahumpc/plant.hpp"
#include "ahumpc/time_util.hpp"

namespace ahumpc::telemetry {

// DHT11-grade sensor emulation: additive seeded noise within the rated
// precision, reported at integer resolution. Disabled noise returns the zone
// temperatures untouched.
struct SensorNoise {
  bool enabled = true;
  double temp_amp_c = 2.0;
  double hum_amp_rh = 5.0;
};

struct DropoutWindow {
  int sensor_id = 0;    // 1-based
  Minute start = 0;     // inclusive
  Minute end = 0;       // exclusive
};

struct SensorReading {
  int sensor_id = 0;  // 1..zones
  double temperature = 0.0;
  double humidity = 0.0;
  Minute timestamp = 0;
};

struct AitRecord {
  Minute timestamp = 0;
  double ait = 0.0;
  double humidity_avg = 0.0;
  int reporting_count = 0;
};

struct MpcMovement {
  Minute timestamp = 0;
  double ait = 0.0;
  double setpoint = 0.0;
  double u_optimal = 0.0;
  double on_minutes = 0.0;
  std::string controller = "mpc";  // "mpc" | "manual"
};

struct ConnectivityEvent {
  Minute timestamp = 0;
  std::vector<int> missing_sensors;
};

// One reading per zone, minus scripted dropouts. Noise is deterministic per
// (seed, timestamp, sensor_id). Throws std::invalid_argument when the
// timestamp is off the 5-minute grid.
std::vector<SensorReading> sample_sensors(
    const plant::PlantState& state, Minute timestamp, std::uint64_t seed,
    const SensorNoise& noise, std::span<const DropoutWindow> dropouts = {});

// Arithmetic mean over the reporting sensors; nullopt for an empty window
// (the caller records the connectivity event).
std::optional<AitRecord> aggregate_ait(std::span<const SensorReading> readings);

struct SensorGaps {
  int sensor_id = 0;
  std::vector<Minute> missed;
};

// Every (sensor, 5-minute slot) pair in [from, to] with no reading.
std::vector<SensorGaps> detect_gaps(std::span<const SensorReading> log,
                                    Minute from, Minute to,
                                    int sensor_count = 24);

// Wire/record formats (field order is part of the contract).
nlohmann::ordered_json to_json(const SensorReading& r);
nlohmann::ordered_json to_json(const AitRecord& r);
nlohmann::ordered_json to_json(const MpcMovement& m);
nlohmann::ordered_json to_json(const ConnectivityEvent& e);
SensorReading reading_from_json(const nlohmann::json& j);
AitRecord ait_from_json(const nlohmann::json& j);
MpcMovement movement_from_json(const nlohmann::json& j);

// Append-only newline-delimited JSON store. Records carry a "date" field;
// reads skip corrupt lines with a warning on stderr instead of aborting.
class JsonlStore {
 public:
  explicit JsonlStore(std::filesystem::path path);

  void append(const nlohmann::ordered_json& record);
  const std::filesystem::path& path() const { return path_; }

  std::vector<nlohmann::json> read_all() const;
  // Closed interval on the record timestamp.
  std::vector<nlohmann::json> read_range(Minute from, Minute to) const;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Minimal in-process stand-in for the MQTT hop: per-topic FIFO with
// at-least-once delivery (messages stay queued until acknowledged).
class Broker {
 public:
  void publish(const std::string& topic, std::string payload);
  std::vector<std::string> peek(const std::string& topic) const;
  void ack(const std::string& topic, std::size_t count);
  std::size_t depth(const std::string& topic) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::deque<std::string>> topics_;
};

}  // namespace ahumpc::telemetry
