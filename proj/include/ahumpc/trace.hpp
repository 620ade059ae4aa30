#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ahumpc {

enum class Direction { Increasing, Decreasing };

inline const char* to_string(Direction d) {
  return d == Direction::Increasing ? "increasing" : "decreasing";
}

inline Direction direction_from_string(const std::string& s) {
  if (s == "increasing") return Direction::Increasing;
  if (s == "decreasing") return Direction::Decreasing;
  throw std::invalid_argument("bad direction: " + s);
}

struct TracePoint {
  double t_min = 0.0;    // minutes, relative to whatever clock the producer used
  double temp_c = 0.0;
};

// Uniformly sampled temperature curve. Producers guarantee strictly
// increasing, evenly spaced timestamps.
struct TemperatureTrace {
  std::vector<TracePoint> samples;
  double resolution_min = 0.0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const TracePoint& front() const { return samples.front(); }
  const TracePoint& back() const { return samples.back(); }

  // Throws std::invalid_argument if the uniform-grid invariants do not hold.
  void validate() const;
};

}  // namespace ahumpc
