#pragma once

#include <span>
#include <stdexcept>

#include "ahumpc/trace.hpp"

namespace ahumpc::fos {

// First-order thermal response with dead time. kp is the steady-state span
// in degC per unit input gain (negative for cool-down curves), tau the time
// constant and theta the dead time, both in minutes.
//
// The response is expressed about the initial temperature:
//
//   y(t <  theta) = y_init
//   y(t >= theta) = y_init + u * kp * (1 - exp(-(t - theta) / tau))
//
// so that the curve spans u*kp and passes 1 - 1/e of that span one time
// constant after the delay.
struct FosParams {
  double kp = 0.0;
  double tau = 0.0;     // minutes, > 0
  double theta = 0.0;   // minutes, >= 0
  double y_init = 0.0;  // degC
};

class UnsettledCurveError : public std::runtime_error {
 public:
  explicit UnsettledCurveError(const std::string& what)
      : std::runtime_error(what) {}
};

// Throws std::invalid_argument when tau <= 0, theta < 0 or any field is
// non-finite.
void validate(const FosParams& p);

// Step response at time t (minutes since the step), input gain u in [0, 1].
double step_response(const FosParams& p, double u, double t_min);

struct ScheduleSegment {
  double duration_min = 0.0;
  double u = 0.0;  // in [0, 1]; 0 selects the decreasing parameter set
};

// Chains step responses over a piecewise-constant input schedule. Each
// segment restarts the response with y_init equal to the previous endpoint.
// Segments with u > 0 follow params_inc at gain u; segments with u == 0
// relax along params_dec at unit gain (switch-off is itself the step input).
// The trace is sampled every resolution_min minutes including both endpoints,
// with timestamps starting at t_start_min.
TemperatureTrace simulate_schedule(const FosParams& params_inc,
                                   const FosParams& params_dec,
                                   std::span<const ScheduleSegment> schedule,
                                   double y_start, double resolution_min,
                                   double t_start_min = 0.0);

// Recovers FOS parameters from a measured or predicted curve.
//
// Gain is the span between the final plateau (mean of the trailing 5% of
// samples) and the first sample. The time constant is a quarter of the time
// at which the curve first reaches the 4-tau fraction (1 - e^-4, the "98% of
// thermal capacitance" point) of that span, measured past the dead time.
//
// Throws UnsettledCurveError when the curve never reaches that fraction or
// its tail is still moving by more than 1% of the span, and
// std::invalid_argument for direction mismatch, zero span, or a curve that is
// not monotone in the stated direction within noise_tol degC.
FosParams extract_params(const TemperatureTrace& curve, Direction direction,
                         double delay_min, double noise_tol = 0.05);

}  // namespace ahumpc::fos
