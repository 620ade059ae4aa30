#include "ahumpc/mapper.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ahumpc::mapper {

namespace {

// Endpoint of "full gain for on_min, then off for the rest of the interval".
double schedule_endpoint(const fos::FosParams& inc, const fos::FosParams& dec,
                         double t_init, int on_min, int sampling_min) {
  fos::FosParams up = inc;
  up.y_init = t_init;
  const double t_mid =
      on_min > 0 ? fos::step_response(up, 1.0, static_cast<double>(on_min))
                 : t_init;
  if (on_min >= sampling_min) return t_mid;
  fos::FosParams down = dec;
  down.y_init = t_mid;
  return fos::step_response(down, 1.0,
                            static_cast<double>(sampling_min - on_min));
}

}  // namespace

MapResult map_to_on_time(double u_k, const fos::FosParams& fos_inc,
                         const fos::FosParams& fos_dec, double t_init_c,
                         int sampling_min, double epsilon_c) {
  fos::validate(fos_inc);
  fos::validate(fos_dec);
  if (!std::isfinite(u_k) || u_k < 0.0 || u_k > 1.0) {
    throw std::invalid_argument("mapper: u_k must be in [0, 1]");
  }
  if (sampling_min < 1) {
    throw std::invalid_argument("mapper: sampling must be >= 1 minute");
  }
  if (!(epsilon_c > 0.0)) {
    throw std::invalid_argument("mapper: epsilon must be positive");
  }
  if (!std::isfinite(t_init_c)) {
    throw std::invalid_argument("mapper: non-finite initial temperature");
  }

  if (u_k == 1.0) return {sampling_min, true, 0.0};

  fos::FosParams frac = fos_inc;
  frac.y_init = t_init_c;
  const double target =
      fos::step_response(frac, u_k, static_cast<double>(sampling_min));

  const double all_off =
      schedule_endpoint(fos_inc, fos_dec, t_init_c, 0, sampling_min);
  // u_k = 0 delivers nothing; anything at or below the all-off endpoint is
  // likewise best served by staying off.
  if (u_k == 0.0 || target <= all_off) {
    return {0, std::abs(all_off - target) <= epsilon_c,
            std::abs(all_off - target)};
  }

  int best_t = 1;
  double best_diff = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= sampling_min; ++t) {
    const double end =
        schedule_endpoint(fos_inc, fos_dec, t_init_c, t, sampling_min);
    const double diff = std::abs(end - target);
    if (diff <= epsilon_c) return {t, true, diff};
    if (diff < best_diff) {
      best_diff = diff;
      best_t = t;
    }
  }
  return {best_t, false, best_diff};
}

int apply_protection(int t_star_min, const ProtectionPolicy& policy,
                     int sampling_min) {
  if (t_star_min < 0 || t_star_min > sampling_min) {
    throw std::invalid_argument("mapper: t_star outside [0, sampling]");
  }
  if (policy.threshold_min < 0.0 ||
      policy.threshold_min > sampling_min / 2.0) {
    throw std::invalid_argument("mapper: protection threshold outside [0, sampling/2]");
  }
  if (t_star_min <= policy.threshold_min) return 0;
  if (sampling_min - t_star_min <= policy.threshold_min) return sampling_min;
  return t_star_min;
}

}  // namespace ahumpc::mapper
