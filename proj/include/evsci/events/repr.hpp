#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "evsci/events/camera.hpp"

namespace evsci::events {

// View into a time-sorted event stream over the half-open interval
// [t_a_us, t_b_us). The underlying stream must outlive the slice.
struct EventSlice {
  std::span<const Event> events;
  std::int64_t t_a_us = 0;
  std::int64_t t_b_us = 0;
};

// Temporally binned signed event mass; bins[i] holds the bilinear weight of
// events near normalized time i.
struct EventVoxelGrid {
  std::vector<Image> bins;
  std::int64_t t_a_us = 0;
  std::int64_t t_b_us = 0;

  int n_bins() const { return static_cast<int>(bins.size()); }
  int rows() const { return bins.empty() ? 0 : bins.front().rows; }
  int cols() const { return bins.empty() ? 0 : bins.front().cols; }
};

// Signed per-pixel polarity sum over an interval.
using EventImage = Image;

// Whole-frame-interval slices {E_{1,2}, ..., E_{B-1,B}} anchored at the sync
// marker; half-open intervals, so concatenating the slices reproduces the
// stream over the covered span with no loss or duplication.
std::vector<EventSlice> split_by_frames(const EventStream& stream, int b_frames,
                                        double frame_interval_s);

struct FractionalSlices {
  std::vector<EventSlice> forward;   // E_{b, b+f}
  std::vector<EventSlice> backward;  // E_{b+f, b+1}
};

// For each inter-frame interval, the pair (E_{b,b+f}, E_{b+f,b+1}) partitions
// E_{b,b+1}. Requires 0 < f < 1.
FractionalSlices split_fractional(const EventStream& stream, int b_frames, double fraction,
                                  double frame_interval_s);

// Events within [t_a_us, t_b_us) of an already-sorted stream.
EventSlice slice_interval(const EventStream& stream, std::int64_t t_a_us, std::int64_t t_b_us);

// Bilinear temporal binning: an event at normalized time t* spreads weight
// p*(1-|t*-i|) over the (at most 2) bins with |t*-i| < 1, so each event
// contributes total absolute weight exactly 1. Grids carry raw signed mass;
// `normalize` divides by the event count instead.
EventVoxelGrid voxelize(const EventSlice& slice, int n_bins, int rows, int cols,
                        bool normalize = false);

EventImage accumulate_image(const EventSlice& slice, int rows, int cols);

// Separate positive/negative counts, for exact integration under asymmetric
// thresholds.
void polarity_counts(const EventSlice& slice, int rows, int cols, std::vector<int>& pos,
                     std::vector<int>& neg);

// raw_f32 bin stack plus `<path>.json` sidecar {n_bins, t_a_us, t_b_us,
// width, height}.
void save_voxels(const EventVoxelGrid& grid, const std::filesystem::path& path);
EventVoxelGrid load_voxels(const std::filesystem::path& path);

}  // namespace evsci::events
