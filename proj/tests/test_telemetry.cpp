#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ahumpc/rng.hpp"
#include "ahumpc/telemetry.hpp"

using namespace ahumpc;
using namespace ahumpc::telemetry;

namespace {

plant::PlantState test_state(double base_temp) {
  plant::PlantCoeffs c;
  auto s = plant::make_initial_state(c, base_temp, base_temp - 2.0, 55.0);
  for (int i = 0; i < c.zones; ++i) s.zone_temps[i] = base_temp + 0.1 * i;
  return s;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("ahumpc_telemetry_test_" + std::to_string(++counter));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_SUITE("telemetry") {

TEST_CASE("every zone reports when nothing drops out") {
  auto readings = sample_sensors(test_state(20.0), 0, 7, SensorNoise{});
  CHECK(readings.size() == 24);
  for (std::size_t i = 0; i < readings.size(); ++i) {
    CHECK(readings[i].sensor_id == static_cast<int>(i) + 1);
  }
}

TEST_CASE("scripted dropouts remove exactly the scripted sensors") {
  std::vector<DropoutWindow> drops{{7, 0, 10}};
  auto readings = sample_sensors(test_state(20.0), 5, 7, SensorNoise{}, drops);
  CHECK(readings.size() == 23);
  CHECK(std::none_of(readings.begin(), readings.end(),
                     [](const SensorReading& r) { return r.sensor_id == 7; }));
  // Outside the window the sensor is back.
  auto later = sample_sensors(test_state(20.0), 10, 7, SensorNoise{}, drops);
  CHECK(later.size() == 24);
}

TEST_CASE("disabled noise returns the zone temperatures exactly") {
  auto state = test_state(19.5);
  SensorNoise off;
  off.enabled = false;
  auto readings = sample_sensors(state, 0, 7, off);
  for (std::size_t i = 0; i < readings.size(); ++i) {
    CHECK(readings[i].temperature == state.zone_temps[i]);
    CHECK(readings[i].humidity == state.indoor_humidity);
  }
}

TEST_CASE("noise is deterministic and within the rated precision") {
  auto state = test_state(20.0);
  auto a = sample_sensors(state, 300, 99, SensorNoise{});
  auto b = sample_sensors(state, 300, 99, SensorNoise{});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].temperature == b[i].temperature);
    CHECK(std::abs(a[i].temperature - state.zone_temps[i]) <= 2.5);
    CHECK(std::abs(a[i].humidity - state.indoor_humidity) <= 5.5);
  }
  CHECK_THROWS_AS(sample_sensors(state, 301, 99, SensorNoise{}),
                  std::invalid_argument);
}

TEST_CASE("aggregation averages the reporting sensors") {
  std::vector<SensorReading> two{{1, 20.0, 40.0, 0}, {2, 22.0, 60.0, 0}};
  auto rec = aggregate_ait(two);
  REQUIRE(rec.has_value());
  CHECK(rec->ait == doctest::Approx(21.0));
  CHECK(rec->humidity_avg == doctest::Approx(50.0));
  CHECK(rec->reporting_count == 2);

  std::vector<SensorReading> one{{5, 18.5, 47.0, 0}};
  auto single = aggregate_ait(one);
  REQUIRE(single.has_value());
  CHECK(single->ait == doctest::Approx(18.5));

  std::vector<SensorReading> none;
  CHECK(!aggregate_ait(none).has_value());
}

TEST_CASE("aggregation matches an independent mean and ignores order") {
  auto readings = sample_sensors(test_state(21.0), 0, 3, SensorNoise{});
  double sum = 0.0;
  for (const auto& r : readings) sum += r.temperature;
  const double expect = sum / readings.size();
  auto rec = aggregate_ait(readings);
  REQUIRE(rec.has_value());
  CHECK(rec->ait == doctest::Approx(expect).epsilon(1e-12));

  Rng rng(5);
  rng.shuffle(readings);
  auto shuffled = aggregate_ait(readings);
  REQUIRE(shuffled.has_value());
  CHECK(shuffled->ait == doctest::Approx(rec->ait).epsilon(1e-12));
}

TEST_CASE("gap detection reports missing sensor slots") {
  std::vector<SensorReading> log;
  for (Minute t = 0; t <= 30; t += 5) {
    for (int id = 1; id <= 4; ++id) {
      if (id == 3 && t >= 10 && t < 25) continue;  // silent for 15 minutes
      log.push_back({id, 20.0, 50.0, t});
    }
  }
  auto gaps = detect_gaps(log, 0, 30, 4);
  REQUIRE(gaps.size() == 1);
  CHECK(gaps[0].sensor_id == 3);
  CHECK(gaps[0].missed == std::vector<Minute>{10, 15, 20});

  auto none = detect_gaps(log, 0, 5, 2);
  CHECK(none.empty());
}

TEST_CASE("staggered dropouts match a brute-force set difference") {
  std::vector<SensorReading> log;
  Rng rng(17);
  std::vector<std::pair<int, Minute>> dropped;
  for (Minute t = 0; t <= 120; t += 5) {
    for (int id = 1; id <= 6; ++id) {
      if (rng.uniform() < 0.15) {
        dropped.push_back({id, t});
        continue;
      }
      log.push_back({id, 20.0, 50.0, t});
    }
  }
  auto gaps = detect_gaps(log, 0, 120, 6);
  std::vector<std::pair<int, Minute>> flat;
  for (const auto& g : gaps) {
    for (Minute m : g.missed) flat.push_back({g.sensor_id, m});
  }
  std::sort(flat.begin(), flat.end());
  std::sort(dropped.begin(), dropped.end());
  CHECK(flat == dropped);
}

TEST_CASE("wire formats are bit-exact") {
  SensorReading r{7, 21.0, 48.0, parse_minute("2024-11-11T06:05")};
  CHECK(to_json(r).dump() ==
        R"({"sensor_id":7,"temperature":21.0,"humidity":48.0,"date":"2024-11-11T06:05"})");
  MpcMovement m{parse_minute("2024-11-11T06:30"), 18.25, 22.5, 0.75, 22.0, "mpc"};
  CHECK(to_json(m).dump() ==
        R"({"date":"2024-11-11T06:30","ait":18.25,"setpoint":22.5,"u":0.75,"on_minutes":22.0,"controller":"mpc"})");
  auto parsed = movement_from_json(nlohmann::json::parse(to_json(m).dump()));
  CHECK(parsed.timestamp == m.timestamp);
  CHECK(parsed.u_optimal == m.u_optimal);
}

TEST_CASE("store round-trips records and survives reopening") {
  TempDir tmp;
  const auto file = tmp.path / "sensor-db.ndjson";
  {
    JsonlStore store(file);
    for (Minute t = 0; t <= 20; t += 5) {
      store.append(to_json(SensorReading{1, 20.0 + t, 50.0, t}));
    }
  }
  JsonlStore reopened(file);
  auto all = reopened.read_all();
  CHECK(all.size() == 5);
  auto range = reopened.read_range(5, 15);
  CHECK(range.size() == 3);
  CHECK(reading_from_json(range.front()).timestamp == 5);
  CHECK(reading_from_json(range.back()).timestamp == 15);
}

TEST_CASE("corrupt store lines are skipped, not fatal") {
  TempDir tmp;
  const auto file = tmp.path / "store.ndjson";
  {
    std::ofstream out(file);
    out << to_json(SensorReading{1, 20.0, 50.0, 0}).dump() << "\n";
    out << "{this is not json\n";
    out << to_json(SensorReading{2, 21.0, 50.0, 5}).dump() << "\n";
  }
  JsonlStore store(file);
  auto all = store.read_all();
  CHECK(all.size() == 2);
}

TEST_CASE("broker delivers in order with at-least-once semantics") {
  Broker broker;
  broker.publish("sensors", "a");
  broker.publish("sensors", "b");
  broker.publish("sensors", "c");
  auto first = broker.peek("sensors");
  CHECK(first == std::vector<std::string>{"a", "b", "c"});
  // Nothing acknowledged: redelivery returns the same messages.
  auto again = broker.peek("sensors");
  CHECK(again == first);
  broker.ack("sensors", 2);
  CHECK(broker.peek("sensors") == std::vector<std::string>{"c"});
  CHECK(broker.depth("sensors") == 1);
  CHECK(broker.peek("other").empty());
}

}  // TEST_SUITE
