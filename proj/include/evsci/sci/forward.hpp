#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "evsci/core/image.hpp"
#include "evsci/scene/scene.hpp"

namespace evsci::sci {

// B binary modulation patterns; entries are exactly 0.0 or 1.0.
struct MaskStack {
  std::vector<Image> masks;
  std::uint64_t seed = 0;
  double density = 0.5;

  int frames() const { return static_cast<int>(masks.size()); }
  int rows() const { return masks.empty() ? 0 : masks.front().rows; }
  int cols() const { return masks.empty() ? 0 : masks.front().cols; }

  // Per-pixel sum over frames, diag(Phi Phi^T) for binary masks.
  Image per_pixel_sum() const;
};

struct Snapshot {
  Image data;
  double noise_sigma = 0.0;
  bool normalized = false;
};

struct SensorConfig {
  int b = 8;                  // frames per snapshot (compression ratio)
  double mask_density = 0.5;  // fraction of ones, open interval (0, 1)
  double noise_sigma = 0.0;   // measurement-unit Gaussian noise
  std::uint64_t seed = 0;
  double frame_rate = 24.0;   // snapshots per second
};

void validate(const SensorConfig& cfg);

// I.i.d. Bernoulli(mask_density) patterns from a Philox stream keyed by
// cfg.seed; identical on every platform.
MaskStack generate_masks(const SensorConfig& cfg, int rows, int cols);

// Y = sum_b I_b .* C_b + G with G ~ N(0, sigma^2) i.i.d., deterministic per
// noise_seed. The result is an un-normalized raw measurement.
Snapshot encode(const scene::FrameSequence& seq, const MaskStack& masks, double noise_sigma,
                std::uint64_t noise_seed);

// Matrix-free y = Phi s for s of length rows*cols*B, frame-major row-major.
std::vector<double> phi_apply(std::span<const double> s, const MaskStack& masks);

// Matrix-free Phi^T y: the measurement replicated into each frame slot and
// masked.
std::vector<double> phi_adjoint(std::span<const double> y, const MaskStack& masks);

std::vector<double> to_signal_vector(const scene::FrameSequence& seq);

// Per-pixel division by the mask sum; zero-sum pixels become exactly 0.
// Intended for initialization and registration only, never as a solver data
// term.
Snapshot normalize_measurement(const Snapshot& snap, const MaskStack& masks);

// Packed little-endian bit stream (LSB first within each byte), row-major
// within a frame, frames concatenated; JSON sidecar at `<path>.json` with
// {width, height, B, density, seed}.
void save_masks(const MaskStack& masks, const std::filesystem::path& path);
MaskStack load_masks(const std::filesystem::path& path);

// Single raw_f32 plane plus `<path>.json` sidecar {width, height,
// noise_sigma, normalized}.
void save_snapshot(const Snapshot& snap, const std::filesystem::path& path);
Snapshot load_snapshot(const std::filesystem::path& path);

}  // namespace evsci::sci
