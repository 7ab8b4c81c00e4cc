#pragma once

#include <cstdint>
#include <vector>

#include "evsci/core/image.hpp"

namespace evsci::scene {

// Ordered stack of grayscale frames with linear intensity in [0, 1].
struct FrameSequence {
  std::vector<Image> frames;
  double frame_interval_s = 1.0 / 24.0;

  int count() const { return static_cast<int>(frames.size()); }
  int rows() const { return frames.empty() ? 0 : frames.front().rows; }
  int cols() const { return frames.empty() ? 0 : frames.front().cols; }
};

// Throws InvalidConfigError/DimensionMismatchError if the sequence violates
// its invariants (consistent dims, samples in [0,1], count >= 1, interval > 0).
void validate(const FrameSequence& seq);

enum class SceneKind {
  translating_square,
  rotating_bar,
  gaussian_blob_orbit,
  two_object_crossing,
};

struct SceneSpec {
  SceneKind kind = SceneKind::translating_square;
  int rows = 64;
  int cols = 64;
  int count = 16;
  // pixels/frame for translating kinds, radians/frame for rotating_bar.
  double velocity = 1.0;
  double background = 0.1;
  double foreground = 0.9;
  std::uint64_t seed = 1;
  double frame_interval_s = 1.0 / 192.0;
};

// Deterministic synthetic scene: the same spec always produces bit-identical
// frames. Motion is exactly spec.velocity per frame; edges are rendered with
// sub-pixel bilinear coverage so fractional positions stay alias-free.
FrameSequence synthesize(const SceneSpec& spec);

}  // namespace evsci::scene
