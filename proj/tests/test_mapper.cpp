#include <doctest.h>

#include <cmath>
#include <vector>

#include "ahumpc/mapper.hpp"
#include "ahumpc/rng.hpp"

using namespace ahumpc;
using namespace ahumpc::mapper;

namespace {

// Independent 1-second-resolution oracle: Euler integration of the two-leg
// candidate schedule and of the fractional-gain trajectory.
double euler_leg(const fos::FosParams& p, double u, double y0, double minutes) {
  const double dt = 1.0 / 60.0;
  double x = 0.0;
  for (double t = 0.0; t < minutes - 1e-12; t += dt) {
    if (t >= p.theta) x += dt * (p.kp * u - x) / p.tau;
  }
  return y0 + x;
}

int oracle_on_time(double u_k, const fos::FosParams& inc,
                   const fos::FosParams& dec, double t_init, int sampling,
                   double eps) {
  const double target = euler_leg(inc, u_k, t_init, sampling);
  int best_t = 1;
  double best = 1e300;
  for (int t = 1; t <= sampling; ++t) {
    const double mid = euler_leg(inc, 1.0, t_init, t);
    const double end = euler_leg(dec, 1.0, mid, sampling - t);
    const double diff = std::abs(end - target);
    if (diff <= eps) return t;
    if (diff < best) {
      best = diff;
      best_t = t;
    }
  }
  return best_t;
}

const fos::FosParams kInc{5.0, 120.0, 13.0, 0.0};
const fos::FosParams kDec{-5.0, 180.0, 13.0, 0.0};

}  // namespace

TEST_SUITE("mapper") {

TEST_CASE("endpoints map to nothing and to the full interval") {
  auto zero = map_to_on_time(0.0, kInc, kDec, 20.0);
  CHECK(zero.on_minutes == 0);
  auto one = map_to_on_time(1.0, kInc, kDec, 20.0);
  CHECK(one.on_minutes == 30);
  CHECK(one.exact);
  CHECK(one.end_error_c == doctest::Approx(0.0));
}

TEST_CASE("half gain matches the brute-force fine-grid oracle") {
  auto got = map_to_on_time(0.5, kInc, kDec, 20.0, 30, 0.05);
  const int oracle = oracle_on_time(0.5, kInc, kDec, 20.0, 30, 0.05);
  CHECK(got.on_minutes == oracle);
  CHECK(got.exact);
}

TEST_CASE("random parameter pairs agree with the oracle") {
  Rng rng(4242);
  for (int i = 0; i < 6; ++i) {
    fos::FosParams inc{rng.uniform(2.0, 10.0), rng.uniform(60.0, 300.0), 13.0, 0.0};
    fos::FosParams dec{-rng.uniform(2.0, 10.0), rng.uniform(60.0, 300.0), 13.0, 0.0};
    const double u = rng.uniform(0.15, 0.9);
    const double t0 = rng.uniform(15.0, 24.0);
    auto got = map_to_on_time(u, inc, dec, t0, 30, 0.05);
    const int oracle = oracle_on_time(u, inc, dec, t0, 30, 0.05);
    // The oracle integrates at 1 s, so tolerance-boundary candidates may
    // differ by one minute.
    CHECK(std::abs(got.on_minutes - oracle) <= 1);
  }
}

TEST_CASE("mapped duration is non-decreasing in the control action") {
  int prev = -1;
  for (double u = 0.0; u <= 1.0 + 1e-12; u += 0.05) {
    auto got = map_to_on_time(std::min(u, 1.0), kInc, kDec, 20.0);
    CHECK(got.on_minutes >= prev);
    prev = got.on_minutes;
  }
}

TEST_CASE("thermal equivalence holds or is flagged") {
  Rng rng(99);
  for (int i = 0; i < 8; ++i) {
    fos::FosParams inc{rng.uniform(2.0, 10.0), rng.uniform(60.0, 300.0), 13.0, 0.0};
    fos::FosParams dec{-rng.uniform(2.0, 10.0), rng.uniform(60.0, 300.0), 13.0, 0.0};
    const double t0 = 20.0;
    for (double u = 0.05; u < 1.0; u += 0.1) {
      auto got = map_to_on_time(u, inc, dec, t0, 30, 0.05);
      // Re-simulate the mapped schedule through the piecewise FOS chain.
      std::vector<fos::ScheduleSegment> sched;
      if (got.on_minutes > 0) sched.push_back({double(got.on_minutes), 1.0});
      if (got.on_minutes < 30) sched.push_back({double(30 - got.on_minutes), 0.0});
      auto trace = fos::simulate_schedule(inc, dec, sched, t0, 1.0);
      fos::FosParams frac = inc;
      frac.y_init = t0;
      const double target = fos::step_response(frac, u, 30.0);
      const double diff = std::abs(trace.back().temp_c - target);
      if (got.exact) {
        CHECK(diff <= 0.05 + 1e-9);
      } else {
        CHECK(diff == doctest::Approx(got.end_error_c).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("protection rounds short and near-full durations") {
  ProtectionPolicy p{5.0};
  CHECK(apply_protection(3, p, 30) == 0);
  CHECK(apply_protection(27, p, 30) == 30);
  CHECK(apply_protection(15, p, 30) == 15);
  CHECK(apply_protection(5, p, 30) == 0);
  CHECK(apply_protection(25, p, 30) == 30);
  ProtectionPolicy off{0.0};
  CHECK(apply_protection(1, off, 30) == 1);
  CHECK(apply_protection(0, off, 30) == 0);
  CHECK(apply_protection(30, off, 30) == 30);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(map_to_on_time(-0.1, kInc, kDec, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(map_to_on_time(1.1, kInc, kDec, 20.0), std::invalid_argument);
  CHECK_THROWS_AS(map_to_on_time(0.5, kInc, kDec, 20.0, 30, 0.0), std::invalid_argument);
  ProtectionPolicy bad{16.0};
  CHECK_THROWS_AS(apply_protection(10, bad, 30), std::invalid_argument);
  CHECK_THROWS_AS(apply_protection(31, ProtectionPolicy{}, 30), std::invalid_argument);
}

}  // TEST_SUITE
