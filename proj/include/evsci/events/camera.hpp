#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evsci/scene/scene.hpp"

namespace evsci::events {

// One DVS event: timestamp in microseconds, pixel column x, pixel row y, and
// polarity +1/-1.
struct Event {
  std::int64_t t_us = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;

  bool operator==(const Event&) const = default;
};

struct EventCameraModel {
  // Symmetric contrast threshold in log-intensity units.
  double threshold = 0.15;
  // Linearization floor: events are defined on L = log(I + log_eps).
  double log_eps = 1e-3;
  int rows = 480;  // DVXplorer-style default; simulation overrides to scene dims
  int cols = 640;
  std::int64_t timestamp_resolution_us = 1;
  // Reserved hook for asymmetric thresholds; <= 0 falls back to `threshold`.
  double threshold_pos = 0.0;
  double threshold_neg = 0.0;

  double pos() const { return threshold_pos > 0.0 ? threshold_pos : threshold; }
  double neg() const { return threshold_neg > 0.0 ? threshold_neg : threshold; }
};

void validate(const EventCameraModel& cam);

// Time-sorted event list with the exposure-start synchronization marker.
struct EventStream {
  std::vector<Event> events;
  EventCameraModel camera;
  std::int64_t sync_t_us = 0;
  std::int64_t t_start_us = 0;
  std::int64_t t_end_us = 0;
};

inline std::int64_t frame_time_us(int frame_index, double frame_interval_s) {
  return static_cast<std::int64_t>(std::llround(frame_index * frame_interval_s * 1e6));
}

// Ideal threshold model: per pixel, L(t) is piecewise-linear between the
// frame samples of log(I + log_eps); an event fires at each exact time the
// excursion from the per-pixel reference reaches the threshold, and the
// reference steps by the threshold at each firing. Timestamps are truncated
// to the camera tick; output is sorted by (t, y, x, p). sync_t is the time of
// the first frame.
EventStream simulate_events(const scene::FrameSequence& seq, const EventCameraModel& cam);

// Inverse of the threshold model at one pixel: exp(log(I0 + eps) + sum of
// per-event threshold increments) - eps, clamped to [0, 1].
double integrate_events(double i0, std::span<const std::int8_t> polarities,
                        const EventCameraModel& cam);

// Per-pixel integration of a whole frame from net polarity counts
// (positive/negative events counted separately so asymmetric thresholds
// stay exact). `flip_polarity` integrates the events backward in time.
Image integrate_counts(const Image& i0, const std::vector<int>& pos_counts,
                       const std::vector<int>& neg_counts, const EventCameraModel& cam,
                       bool flip_polarity = false);

}  // namespace evsci::events
