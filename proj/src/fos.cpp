#include "ahumpc/fos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ahumpc {

void TemperatureTrace::validate() const {
  if (samples.empty()) throw std::invalid_argument("trace: empty");
  if (!(resolution_min > 0.0)) {
    throw std::invalid_argument("trace: resolution must be positive");
  }
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const double dt = samples[i + 1].t_min - samples[i].t_min;
    if (std::abs(dt - resolution_min) > 1e-9 * std::max(1.0, resolution_min)) {
      throw std::invalid_argument("trace: non-uniform sample spacing");
    }
  }
  for (const auto& s : samples) {
    if (!std::isfinite(s.t_min) || !std::isfinite(s.temp_c)) {
      throw std::invalid_argument("trace: non-finite sample");
    }
  }
}

namespace fos {

void validate(const FosParams& p) {
  if (!std::isfinite(p.kp) || !std::isfinite(p.tau) || !std::isfinite(p.theta) ||
      !std::isfinite(p.y_init)) {
    throw std::invalid_argument("fos: non-finite parameter");
  }
  if (!(p.tau > 0.0)) throw std::invalid_argument("fos: tau must be > 0");
  if (p.theta < 0.0) throw std::invalid_argument("fos: theta must be >= 0");
}

double step_response(const FosParams& p, double u, double t_min) {
  validate(p);
  if (!std::isfinite(u) || u < 0.0 || u > 1.0) {
    throw std::invalid_argument("fos: input gain must be in [0, 1]");
  }
  if (!std::isfinite(t_min) || t_min < 0.0) {
    throw std::invalid_argument("fos: time must be finite and >= 0");
  }
  if (t_min < p.theta) return p.y_init;
  return p.y_init + u * p.kp * (1.0 - std::exp(-(t_min - p.theta) / p.tau));
}

TemperatureTrace simulate_schedule(const FosParams& params_inc,
                                   const FosParams& params_dec,
                                   std::span<const ScheduleSegment> schedule,
                                   double y_start, double resolution_min,
                                   double t_start_min) {
  validate(params_inc);
  validate(params_dec);
  if (schedule.empty()) throw std::invalid_argument("fos: empty schedule");
  if (!(resolution_min > 0.0)) {
    throw std::invalid_argument("fos: resolution must be positive");
  }
  if (!std::isfinite(y_start)) {
    throw std::invalid_argument("fos: non-finite start temperature");
  }
  for (const auto& seg : schedule) {
    if (!(seg.duration_min > 0.0)) {
      throw std::invalid_argument("fos: segment duration must be > 0");
    }
    const double ratio = seg.duration_min / resolution_min;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
      throw std::invalid_argument("fos: resolution must divide segment duration");
    }
    if (seg.u < 0.0 || seg.u > 1.0) {
      throw std::invalid_argument("fos: segment gain must be in [0, 1]");
    }
  }

  TemperatureTrace trace;
  trace.resolution_min = resolution_min;
  trace.samples.push_back({t_start_min, y_start});

  double seg_y0 = y_start;
  double t_abs = t_start_min;
  for (const auto& seg : schedule) {
    FosParams p = seg.u > 0.0 ? params_inc : params_dec;
    p.y_init = seg_y0;
    const double u_eff = seg.u > 0.0 ? seg.u : 1.0;
    const auto n = static_cast<std::size_t>(std::llround(seg.duration_min / resolution_min));
    for (std::size_t i = 1; i <= n; ++i) {
      const double t_local = static_cast<double>(i) * resolution_min;
      trace.samples.push_back({t_abs + t_local, step_response(p, u_eff, t_local)});
    }
    seg_y0 = step_response(p, u_eff, seg.duration_min);
    t_abs += seg.duration_min;
  }
  return trace;
}

namespace {

// 4-tau capacitance fraction; the paper's "98%" settling point.
constexpr double kSettledFraction = 1.0 - 0.018315638888734179;  // 1 - e^-4

}  // namespace

FosParams extract_params(const TemperatureTrace& curve, Direction direction,
                         double delay_min, double noise_tol) {
  curve.validate();
  if (delay_min < 0.0 || !std::isfinite(delay_min)) {
    throw std::invalid_argument("fos: delay must be finite and >= 0");
  }
  const auto& s = curve.samples;
  const std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("fos: curve needs at least 2 samples");

  const double t0 = s.front().t_min;
  const double y0 = s.front().temp_c;
  const double sign = direction == Direction::Increasing ? 1.0 : -1.0;

  const std::size_t tail = std::max<std::size_t>(1, (n + 19) / 20);  // last 5%
  double plateau = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) plateau += s[i].temp_c;
  plateau /= static_cast<double>(tail);

  const double span = plateau - y0;
  if (std::abs(span) < 1e-9) {
    throw std::invalid_argument("fos: flat curve, zero span");
  }
  if (sign * span <= 0.0) {
    throw std::invalid_argument("fos: curve contradicts stated direction");
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (s[i].t_min - t0 < delay_min) continue;
    if (sign * (s[i + 1].temp_c - s[i].temp_c) < -noise_tol) {
      throw std::invalid_argument("fos: curve not monotone in stated direction");
    }
  }

  // A plateau that is still moving poisons the 4-tau crossing badly; reject
  // curves whose trailing window spans more than 1% of the total span.
  double tail_lo = s[n - tail].temp_c, tail_hi = tail_lo;
  for (std::size_t i = n - tail; i < n; ++i) {
    tail_lo = std::min(tail_lo, s[i].temp_c);
    tail_hi = std::max(tail_hi, s[i].temp_c);
  }
  if (tail_hi - tail_lo > 0.01 * std::abs(span) + noise_tol) {
    throw UnsettledCurveError("fos: unsettled curve (tail still moving)");
  }

  const double level = y0 + kSettledFraction * span;
  double t_cross = -1.0;
  std::size_t i_cross = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (sign * (s[i].temp_c - level) >= 0.0) {
      t_cross = s[i].t_min - t0;
      i_cross = i;
      break;
    }
  }
  if (t_cross < 0.0) {
    throw UnsettledCurveError("fos: unsettled curve (never reaches 4-tau fraction)");
  }
  // A crossing inside the plateau window means the "plateau" is still the
  // rising edge; the curve has not actually settled.
  if (i_cross >= n - tail) {
    throw UnsettledCurveError("fos: unsettled curve (too short past the 4-tau point)");
  }
  if (t_cross <= delay_min) {
    throw std::invalid_argument("fos: settling time not beyond the stated delay");
  }

  FosParams out;
  out.kp = span;
  out.tau = (t_cross - delay_min) / 4.0;
  out.theta = delay_min;
  out.y_init = y0;
  return out;
}

}  // namespace fos
}  // namespace ahumpc
