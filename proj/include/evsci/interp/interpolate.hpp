#pragma once

#include <optional>
#include <string>
#include <utility>

#include "evsci/events/repr.hpp"

namespace evsci::interp {

enum class BlendMode { linear_time, forward_only, backward_only };

BlendMode parse_blend(const std::string& name);
std::string blend_name(BlendMode b);

// Target timestamp: either absolute microseconds within the exposure span or
// a 1-based frame interval b in 1..B-1 with fraction f in (0, 1).
struct InterpolationRequest {
  std::optional<std::int64_t> t_us;
  std::optional<std::pair<int, double>> position;
  BlendMode blend = BlendMode::linear_time;
};

// Bidirectional log-domain event integration: the forward estimate integrates
// E_{b,b+f} from frame b, the backward one integrates E_{b+f,b+1} with
// flipped polarities from frame b+1, and linear_time blends them as
// (1-f)*forward + f*backward. Absolute timestamps past the last frame (but
// inside the event span) fall back to forward-only integration.
Image interpolate(const scene::FrameSequence& frames, const events::EventStream& stream,
                  const InterpolationRequest& req, const events::EventCameraModel& cam);

// n_out uniformly spaced timestamps across the reconstructed frame span;
// timestamps that coincide with reconstructed frames pass through verbatim.
scene::FrameSequence densify(const scene::FrameSequence& frames,
                             const events::EventStream& stream, int n_out,
                             const events::EventCameraModel& cam, BlendMode blend);

// The uniform timestamps densify produces for a given n_out.
std::vector<std::int64_t> densify_timestamps(const scene::FrameSequence& frames,
                                             const events::EventStream& stream, int n_out);

}  // namespace evsci::interp
