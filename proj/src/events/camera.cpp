#include "evsci/events/camera.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace evsci::events {

void validate(const EventCameraModel& cam) {
  if (cam.threshold <= 0.0) throw InvalidConfigError("event camera: threshold must be > 0");
  if (cam.log_eps <= 0.0) throw InvalidConfigError("event camera: log_eps must be > 0");
  if (cam.rows < 1 || cam.cols < 1)
    throw InvalidConfigError("event camera: resolution must be positive");
  if (cam.timestamp_resolution_us < 1)
    throw InvalidConfigError("event camera: timestamp resolution must be >= 1 us");
}

namespace {

std::int64_t quantize(double t_us, std::int64_t res) {
  const auto ticks = static_cast<std::int64_t>(std::floor(t_us / static_cast<double>(res)));
  return ticks * res;
}

}  // namespace

EventStream simulate_events(const scene::FrameSequence& seq, const EventCameraModel& cam) {
  validate(cam);
  if (seq.count() < 2)
    throw InvalidConfigError("simulate_events: need at least 2 frames");
  if (seq.rows() != cam.rows || seq.cols() != cam.cols)
    throw DimensionMismatchError("simulate_events: camera resolution must match frame dims");

  const int rows = seq.rows();
  const int cols = seq.cols();
  const double t_pos = cam.pos();
  const double t_neg = cam.neg();

  // log-intensity samples per frame
  std::vector<std::vector<double>> logs(seq.count());
  for (int b = 0; b < seq.count(); ++b) {
    logs[b].resize(seq.frames[b].size());
    for (std::size_t i = 0; i < logs[b].size(); ++i)
      logs[b][i] = std::log(seq.frames[b].data[i] + cam.log_eps);
  }

  std::vector<std::int64_t> frame_us(seq.count());
  for (int b = 0; b < seq.count(); ++b) frame_us[b] = frame_time_us(b, seq.frame_interval_s);

  EventStream stream;
  stream.camera = cam;
  stream.sync_t_us = frame_us.front();
  stream.t_start_us = frame_us.front();
  stream.t_end_us = frame_us.back();

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      double ref = logs[0][i];
      for (int b = 0; b + 1 < seq.count(); ++b) {
        const double la = logs[b][i];
        const double lb = logs[b + 1][i];
        if (la == lb) continue;
        const double dt = static_cast<double>(frame_us[b + 1] - frame_us[b]);
        const double inv_slope = dt / (lb - la);
        if (lb > la) {
          // ascending segment: fire at every ref + t_pos crossing
          for (double target = ref + t_pos; target <= lb; target = ref + t_pos) {
            const double t = frame_us[b] + (target - la) * inv_slope;
            stream.events.push_back(Event{quantize(t, cam.timestamp_resolution_us),
                                          static_cast<std::uint16_t>(c),
                                          static_cast<std::uint16_t>(r), +1});
            ref = target;
          }
        } else {
          for (double target = ref - t_neg; target >= lb; target = ref - t_neg) {
            const double t = frame_us[b] + (target - la) * inv_slope;
            stream.events.push_back(Event{quantize(t, cam.timestamp_resolution_us),
                                          static_cast<std::uint16_t>(c),
                                          static_cast<std::uint16_t>(r), -1});
            ref = target;
          }
        }
      }
    }
  }

  std::stable_sort(stream.events.begin(), stream.events.end(),
                   [](const Event& a, const Event& b) {
                     return std::tie(a.t_us, a.y, a.x, a.p) < std::tie(b.t_us, b.y, b.x, b.p);
                   });
  return stream;
}

double integrate_events(double i0, std::span<const std::int8_t> polarities,
                        const EventCameraModel& cam) {
  if (i0 < 0.0) throw InvalidConfigError("integrate_events: intensity must be >= 0");
  double delta = 0.0;
  for (std::int8_t p : polarities) delta += p > 0 ? cam.pos() : -cam.neg();
  const double value = std::exp(std::log(i0 + cam.log_eps) + delta) - cam.log_eps;
  return std::clamp(value, 0.0, 1.0);
}

Image integrate_counts(const Image& i0, const std::vector<int>& pos_counts,
                       const std::vector<int>& neg_counts, const EventCameraModel& cam,
                       bool flip_polarity) {
  if (pos_counts.size() != i0.size() || neg_counts.size() != i0.size())
    throw DimensionMismatchError("integrate_counts: count maps must match frame dims");
  Image out(i0.rows, i0.cols);
  const double sign = flip_polarity ? -1.0 : 1.0;
  for (std::size_t i = 0; i < i0.size(); ++i) {
    const double delta = sign * (cam.pos() * pos_counts[i] - cam.neg() * neg_counts[i]);
    const double value = std::exp(std::log(i0.data[i] + cam.log_eps) + delta) - cam.log_eps;
    out.data[i] = std::clamp(value, 0.0, 1.0);
  }
  return out;
}

}  // namespace evsci::events
