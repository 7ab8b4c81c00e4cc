#include "evsci/events/repr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace evsci::events {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// first index with t >= t_us in a time-sorted stream
std::size_t lower_index(std::span<const Event> events, std::int64_t t_us) {
  return static_cast<std::size_t>(
      std::lower_bound(events.begin(), events.end(), t_us,
                       [](const Event& e, std::int64_t t) { return e.t_us < t; }) -
      events.begin());
}

}  // namespace

EventSlice slice_interval(const EventStream& stream, std::int64_t t_a_us, std::int64_t t_b_us) {
  if (t_b_us < t_a_us) throw InvalidConfigError("slice_interval: t_b must be >= t_a");
  std::span<const Event> all(stream.events);
  const std::size_t lo = lower_index(all, t_a_us);
  const std::size_t hi = lower_index(all, t_b_us);
  return EventSlice{all.subspan(lo, hi - lo), t_a_us, t_b_us};
}

std::vector<EventSlice> split_by_frames(const EventStream& stream, int b_frames,
                                        double frame_interval_s) {
  if (b_frames < 2) throw InvalidConfigError("split_by_frames: need at least 2 frames");
  if (frame_interval_s <= 0.0)
    throw InvalidConfigError("split_by_frames: frame_interval must be positive");
  const std::int64_t span_us = frame_time_us(b_frames - 1, frame_interval_s);
  if (stream.t_end_us - stream.sync_t_us < span_us)
    throw InvalidConfigError("split_by_frames: stream span is shorter than (B-1) frame intervals");

  std::vector<EventSlice> slices;
  slices.reserve(b_frames - 1);
  for (int b = 0; b + 1 < b_frames; ++b) {
    const std::int64_t ta = stream.sync_t_us + frame_time_us(b, frame_interval_s);
    const std::int64_t tb = stream.sync_t_us + frame_time_us(b + 1, frame_interval_s);
    slices.push_back(slice_interval(stream, ta, tb));
  }
  return slices;
}

FractionalSlices split_fractional(const EventStream& stream, int b_frames, double fraction,
                                  double frame_interval_s) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidConfigError("split_fractional: fraction must lie strictly inside (0, 1)");
  const std::vector<EventSlice> whole = split_by_frames(stream, b_frames, frame_interval_s);

  FractionalSlices out;
  out.forward.reserve(whole.size());
  out.backward.reserve(whole.size());
  for (const EventSlice& s : whole) {
    const std::int64_t mid =
        s.t_a_us + static_cast<std::int64_t>(std::llround(fraction * (s.t_b_us - s.t_a_us)));
    out.forward.push_back(slice_interval(stream, s.t_a_us, mid));
    out.backward.push_back(slice_interval(stream, mid, s.t_b_us));
  }
  return out;
}

EventVoxelGrid voxelize(const EventSlice& slice, int n_bins, int rows, int cols,
                        bool normalize) {
  if (n_bins < 1) throw InvalidConfigError("voxelize: n_bins must be >= 1");
  if (slice.t_a_us == slice.t_b_us)
    throw InvalidConfigError("voxelize: degenerate interval (t_a == t_b)");
  EventVoxelGrid grid;
  grid.t_a_us = slice.t_a_us;
  grid.t_b_us = slice.t_b_us;
  grid.bins.assign(n_bins, Image(rows, cols));

  const double span = static_cast<double>(slice.t_b_us - slice.t_a_us);
  for (const Event& e : slice.events) {
    if (e.y >= rows || e.x >= cols) continue;
    const double t_norm = (static_cast<double>(e.t_us - slice.t_a_us) / span) * (n_bins - 1);
    const int i0 = static_cast<int>(std::floor(t_norm));
    const double frac = t_norm - i0;
    const double p = static_cast<double>(e.p);
    if (i0 >= 0 && i0 < n_bins) grid.bins[i0].at(e.y, e.x) += p * (1.0 - frac);
    if (frac > 0.0 && i0 + 1 < n_bins) grid.bins[i0 + 1].at(e.y, e.x) += p * frac;
  }
  if (normalize && !slice.events.empty()) {
    const double inv = 1.0 / static_cast<double>(slice.events.size());
    for (Image& bin : grid.bins)
      for (double& v : bin.data) v *= inv;
  }
  return grid;
}

EventImage accumulate_image(const EventSlice& slice, int rows, int cols) {
  Image img(rows, cols);
  for (const Event& e : slice.events) {
    if (e.y >= rows || e.x >= cols) continue;
    img.at(e.y, e.x) += static_cast<double>(e.p);
  }
  return img;
}

void polarity_counts(const EventSlice& slice, int rows, int cols, std::vector<int>& pos,
                     std::vector<int>& neg) {
  pos.assign(static_cast<std::size_t>(rows) * cols, 0);
  neg.assign(static_cast<std::size_t>(rows) * cols, 0);
  for (const Event& e : slice.events) {
    if (e.y >= rows || e.x >= cols) continue;
    const std::size_t i = static_cast<std::size_t>(e.y) * cols + e.x;
    if (e.p > 0)
      ++pos[i];
    else
      ++neg[i];
  }
}

namespace {

void write_file_or_throw(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file_or_throw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

}  // namespace

void save_voxels(const EventVoxelGrid& grid, const fs::path& path) {
  if (grid.n_bins() < 1) throw InvalidConfigError("save_voxels: empty grid");
  std::string bytes;
  bytes.reserve(grid.bins.size() * grid.bins.front().size() * 4);
  for (const Image& bin : grid.bins)
    for (double v : bin.data) {
      const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
    }
  write_file_or_throw(path, bytes);
  const json meta{{"n_bins", grid.n_bins()},
                  {"t_a_us", grid.t_a_us},
                  {"t_b_us", grid.t_b_us},
                  {"width", grid.cols()},
                  {"height", grid.rows()}};
  write_file_or_throw(fs::path(path.string() + ".json"), meta.dump(2) + "\n");
}

EventVoxelGrid load_voxels(const fs::path& path) {
  const json meta = json::parse(read_file_or_throw(fs::path(path.string() + ".json")));
  const int n_bins = meta.at("n_bins").get<int>();
  const int cols = meta.at("width").get<int>();
  const int rows = meta.at("height").get<int>();
  if (n_bins < 1 || cols < 1 || rows < 1)
    throw IoError("voxel sidecar has invalid dims: " + path.string());
  const std::string bytes = read_file_or_throw(path);
  if (bytes.size() != static_cast<std::size_t>(n_bins) * rows * cols * 4)
    throw IoError("voxel payload size mismatch: " + path.string());

  EventVoxelGrid grid;
  grid.t_a_us = meta.at("t_a_us").get<std::int64_t>();
  grid.t_b_us = meta.at("t_b_us").get<std::int64_t>();
  std::size_t off = 0;
  for (int b = 0; b < n_bins; ++b) {
    Image bin(rows, cols);
    for (double& v : bin.data) {
      std::uint32_t u = 0;
      for (int i = 0; i < 4; ++i)
        u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + i])) << (8 * i);
      off += 4;
      v = std::bit_cast<float>(u);
    }
    grid.bins.push_back(std::move(bin));
  }
  return grid;
}

}  // namespace evsci::events
