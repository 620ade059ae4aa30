#include <doctest.h>

#include <cmath>

#include "ahumpc/fos.hpp"
#include "ahumpc/plant.hpp"

using namespace ahumpc;
using namespace ahumpc::plant;

namespace {

// Analytic equilibrium of the two-capacitance network, derived independently
// from the grouped (south/north/envelope) balance equations.
struct Equilibrium {
  double south, north, envelope;
};

Equilibrium analytic_equilibrium(const PlantCoeffs& c, const Disturbances& d,
                                 double gain) {
  const double k_inf = c.infiltration_rate + c.infiltration_wind_rate * d.w_speed;
  const double K = c.zone_envelope_rate + k_inf;
  const double q_common = c.ahu_heat_rate * gain + c.occupancy_gain_rate * d.occupancy;
  const double q_solar = c.solar_gain_rate * d.s_rad / 1000.0;
  const double alpha = c.zone_envelope_rate / K;
  const double beta_s = (k_inf * d.t_out + q_common + q_solar) / K;
  const double beta_n = (k_inf * d.t_out + q_common) / K;
  const double beta_mean = 0.5 * (beta_s + beta_n);
  const double t_env =
      (c.envelope_zone_rate * beta_mean + c.envelope_out_rate * d.t_out) /
      (c.envelope_zone_rate * (1.0 - alpha) + c.envelope_out_rate);
  return {alpha * t_env + beta_s, alpha * t_env + beta_n, t_env};
}

Disturbances winter() {
  Disturbances d;
  d.t_out = 5.0;
  d.h_out = 70.0;
  d.w_speed = 3.0;
  d.s_rad = 0.0;
  d.occupancy = 0.0;
  return d;
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("equilibrium state stays put") {
  PlantCoeffs c;
  Disturbances d;
  d.t_out = 18.0;
  d.h_out = 50.0;
  d.w_speed = 0.0;
  d.s_rad = 0.0;
  d.occupancy = 0.0;
  PlantState s = make_initial_state(c, 18.0, 18.0, 50.0);
  auto next = step_plant(s, {0.0, ActuatorMode::Binary}, d, 5.0, c);
  for (int i = 0; i < c.zones; ++i) {
    CHECK(next.zone_temps[i] == doctest::Approx(18.0).epsilon(1e-12));
  }
  CHECK(next.envelope_temp == doctest::Approx(18.0).epsilon(1e-12));
}

TEST_CASE("full gain heats monotonically toward a plateau") {
  PlantCoeffs c;
  Disturbances d = winter();
  PlantState s = make_initial_state(c, 18.0, 15.0, 50.0);
  double prev = s.zone_mean();
  double last_delta = 0.0;
  for (int m = 0; m < 72; ++m) {  // 6 hours in 5-minute steps
    s = step_plant(s, {1.0, ActuatorMode::Binary}, d, 5.0, c);
    const double mean = s.zone_mean();
    CHECK(mean >= prev);
    last_delta = mean - prev;
    prev = mean;
  }
  // Later increments shrink as the plateau approaches.
  CHECK(last_delta < 0.2);
  CHECK(prev > 25.0);
}

TEST_CASE("more solar radiation never cools the building") {
  PlantCoeffs c;
  Disturbances d = winter();
  d.s_rad = 300.0;
  PlantState s = make_initial_state(c, 20.0, 16.0, 50.0);
  auto base = step_plant(s, {0.0, ActuatorMode::Binary}, d, 5.0, c);
  Disturbances d2 = d;
  d2.s_rad = 600.0;
  auto sunny = step_plant(s, {0.0, ActuatorMode::Binary}, d2, 5.0, c);
  CHECK(sunny.zone_mean() >= base.zone_mean());
}

TEST_CASE("stepping is deterministic") {
  PlantCoeffs c;
  Disturbances d = winter();
  PlantState s = make_initial_state(c, 19.0, 16.0, 55.0);
  auto a = step_plant(s, {1.0, ActuatorMode::Binary}, d, 5.0, c);
  auto b = step_plant(s, {1.0, ActuatorMode::Binary}, d, 5.0, c);
  CHECK(a.zone_temps == b.zone_temps);
  CHECK(a.envelope_temp == b.envelope_temp);
  CHECK(a.indoor_humidity == b.indoor_humidity);
}

TEST_CASE("free cooling converges to the analytic equilibrium within 48 h") {
  PlantCoeffs c;
  Disturbances d = winter();
  d.s_rad = 100.0;
  d.occupancy = 0.4;
  PlantState s = make_initial_state(c, 21.0, 18.0, 60.0);
  for (int m = 0; m < 48 * 12; ++m) {
    s = step_plant(s, {0.0, ActuatorMode::Binary}, d, 5.0, c);
  }
  const auto eq = analytic_equilibrium(c, d, 0.0);
  const int south = c.zones / 2;
  for (int i = 0; i < c.zones; ++i) {
    const double expect = i < south ? eq.south : eq.north;
    CHECK(std::abs(s.zone_temps[i] - expect) < 0.1);
  }
  CHECK(std::abs(s.envelope_temp - eq.envelope) < 0.1);
}

TEST_CASE("open-loop response passes through the first-order extraction") {
  PlantCoeffs c;
  Disturbances d = winter();
  PlantState s = make_initial_state(c, 16.0, 15.5, 50.0);
  TemperatureTrace tr;
  tr.resolution_min = 1.0;
  tr.samples.push_back({0.0, s.zone_mean()});
  for (int m = 1; m <= 1440; ++m) {
    s = step_plant(s, {1.0, ActuatorMode::Binary}, d, 1.0, c);
    tr.samples.push_back({double(m), s.zone_mean()});
  }
  auto p = fos::extract_params(tr, Direction::Increasing, 13.0);
  CHECK(p.kp > 0.0);
  CHECK(p.tau >= 30.0);
  CHECK(p.tau <= 480.0);
}

TEST_CASE("binary command rejects fractional gain") {
  PlantCoeffs c;
  PlantState s = make_initial_state(c, 18.0, 15.0, 50.0);
  CHECK_THROWS_AS(step_plant(s, {0.5, ActuatorMode::Binary}, winter(), 5.0, c),
                  std::invalid_argument);
  CHECK_NOTHROW(step_plant(s, {0.5, ActuatorMode::Analog}, winter(), 5.0, c));
  CHECK_THROWS_AS(step_plant(s, {1.0, ActuatorMode::Binary}, winter(), 6.0, c),
                  std::invalid_argument);
}

TEST_CASE("malformed state is rejected") {
  PlantCoeffs c;
  PlantState s = make_initial_state(c, 18.0, 15.0, 50.0);
  s.zone_temps[3] = std::nan("");
  CHECK_THROWS_AS(step_plant(s, {0.0, ActuatorMode::Binary}, winter(), 5.0, c),
                  std::invalid_argument);
  PlantState wrong = make_initial_state(c, 18.0, 15.0, 50.0);
  wrong.zone_temps.pop_back();
  CHECK_THROWS_AS(step_plant(wrong, {0.0, ActuatorMode::Binary}, winter(), 5.0, c),
                  std::invalid_argument);
}

TEST_CASE("weather generation is deterministic per (seed, day)") {
  auto a = generate_weather(42, 7);
  auto b = generate_weather(42, 7);
  REQUIRE(a.ticks.size() == 288);
  REQUIRE(b.ticks.size() == 288);
  for (std::size_t i = 0; i < a.ticks.size(); ++i) {
    CHECK(a.ticks[i].t_out == b.ticks[i].t_out);
    CHECK(a.ticks[i].s_rad == b.ticks[i].s_rad);
    CHECK(a.ticks[i].s_energy == b.ticks[i].s_energy);
  }
  auto other = generate_weather(42, 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.ticks.size(); ++i) {
    if (a.ticks[i].t_out != other.ticks[i].t_out) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("solar energy resets at midnight and integrates radiation") {
  auto w = generate_weather(11, 3);
  CHECK(w.ticks[0].s_energy == doctest::Approx(0.0));
  CHECK(w.ticks[0].s_rad == doctest::Approx(0.0));  // local midnight
  double acc = 0.0;
  for (std::size_t i = 0; i < w.ticks.size(); ++i) {
    CHECK(w.ticks[i].s_energy == doctest::Approx(acc).epsilon(1e-12));
    CHECK(w.ticks[i].s_energy >= (i ? w.ticks[i - 1].s_energy : 0.0));
    acc += w.ticks[i].s_rad * (5.0 / 60.0);
  }
  CHECK(acc > 0.0);  // the sun did rise
}

TEST_CASE("constant weather mode repeats the configured values") {
  WeatherConfig cfg;
  cfg.mode = WeatherConfig::Mode::Constant;
  cfg.constant = winter();
  auto w = generate_weather(1, 0, cfg);
  for (const auto& t : w.ticks) {
    CHECK(t.t_out == doctest::Approx(5.0));
    CHECK(t.w_speed == doctest::Approx(3.0));
  }
}

TEST_CASE("clock controller honors its windows") {
  std::vector<ScheduleWindow> sched{{6 * 60, 21 * 60}};
  CHECK(clock_controller(7 * 60, sched).gain == doctest::Approx(1.0));
  CHECK(clock_controller(5 * 60 + 59, sched).gain == doctest::Approx(0.0));
  CHECK(clock_controller(21 * 60, sched).gain == doctest::Approx(0.0));
  CHECK(clock_controller(6 * 60, sched).gain == doctest::Approx(1.0));
  CHECK(clock_controller(12 * 60, {}).gain == doctest::Approx(0.0));
  std::vector<ScheduleWindow> overlapping{{6 * 60, 12 * 60}, {11 * 60, 15 * 60}};
  CHECK_THROWS_AS(clock_controller(0, overlapping), std::invalid_argument);
}

}  // TEST_SUITE
