#pragma once

#include "ahumpc/fos.hpp"

namespace ahumpc::mapper {

// Optional motor-protection rounding. threshold_min = 0 disables it.
struct ProtectionPolicy {
  double threshold_min = 0.0;
};

struct MapResult {
  int on_minutes = 0;
  bool exact = false;      // end temperature within epsilon of the target
  double end_error_c = 0;  // |mapped endpoint - fractional-gain endpoint|
};

// Converts a fractional control action into the equivalent ON duration for a
// binary AHU: the smallest integer t in [1, sampling] such that running the
// increasing FOS at full gain for t minutes and then relaxing along the
// decreasing FOS for the remainder lands within epsilon_c of where the
// fractional-gain trajectory would end. Falls back to the closest candidate
// (flagged inexact) when no candidate meets the tolerance, and returns 0
// when the target lies at or below the all-off endpoint.
//
// In analog actuator mode this mapping is unnecessary; callers feed u_k to
// the drive directly.
MapResult map_to_on_time(double u_k, const fos::FosParams& fos_inc,
                         const fos::FosParams& fos_dec, double t_init_c,
                         int sampling_min = 30, double epsilon_c = 0.05);

// Motor-protection rounding: short ON times drop to zero, near-full ON times
// extend to the whole interval.
int apply_protection(int t_star_min, const ProtectionPolicy& policy,
                     int sampling_min);

}  // namespace ahumpc::mapper
