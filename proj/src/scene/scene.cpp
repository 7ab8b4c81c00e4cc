#include "evsci/scene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evsci/core/rng.hpp"

namespace evsci::scene {
namespace {

// Coverage of the unit pixel cell [x-0.5, x+0.5] by the interval [lo, hi];
// equivalent to bilinear sampling of the box indicator for axis-aligned edges.
double span_coverage(double x, double lo, double hi) {
  const double a = std::max(x - 0.5, lo);
  const double b = std::min(x + 0.5, hi);
  return std::clamp(b - a, 0.0, 1.0);
}

double box_coverage(double r, double c, double cr, double cc, double half) {
  return span_coverage(r, cr - half, cr + half) * span_coverage(c, cc - half, cc + half);
}

double blend(double bg, double fg, double w) { return bg + (fg - bg) * w; }

Image render_translating_square(const SceneSpec& s, int b) {
  Image img(s.rows, s.cols, s.background);
  const double half = std::max(2.0, std::min(s.rows, s.cols) / 6.0);
  const double cr = s.rows / 2.0;
  const double cc = s.cols / 4.0 + s.velocity * b;
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c)
      img.at(r, c) = blend(s.background, s.foreground, box_coverage(r, c, cr, cc, half));
  return img;
}

// Distance from point to segment [a, b].
double segment_distance(double pr, double pc, double ar, double ac, double br, double bc) {
  const double dr = br - ar;
  const double dc = bc - ac;
  const double len2 = dr * dr + dc * dc;
  double t = len2 > 0.0 ? ((pr - ar) * dr + (pc - ac) * dc) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qr = ar + t * dr;
  const double qc = ac + t * dc;
  return std::hypot(pr - qr, pc - qc);
}

Image render_rotating_bar(const SceneSpec& s, int b, double phase) {
  Image img(s.rows, s.cols, s.background);
  const double cr = (s.rows - 1) / 2.0;
  const double cc = (s.cols - 1) / 2.0;
  const double half_len = 0.35 * std::min(s.rows, s.cols);
  const double half_width = 1.5;
  const double angle = phase + s.velocity * b;
  const double ar = cr - half_len * std::sin(angle);
  const double ac = cc - half_len * std::cos(angle);
  const double br = cr + half_len * std::sin(angle);
  const double bc = cc + half_len * std::cos(angle);
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      const double d = segment_distance(r, c, ar, ac, br, bc);
      const double w = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
      img.at(r, c) = blend(s.background, s.foreground, w);
    }
  return img;
}

Image render_blob_orbit(const SceneSpec& s, int b, double phase) {
  Image img(s.rows, s.cols, s.background);
  const double cr = (s.rows - 1) / 2.0;
  const double cc = (s.cols - 1) / 2.0;
  const double orbit_radius = std::min(s.rows, s.cols) / 4.0;
  const double sigma = std::max(1.5, std::min(s.rows, s.cols) / 10.0);
  // velocity is arc length per frame along the orbit
  const double angle = phase + (s.velocity / orbit_radius) * b;
  const double br_ = cr + orbit_radius * std::sin(angle);
  const double bc_ = cc + orbit_radius * std::cos(angle);
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      const double d2 = (r - br_) * (r - br_) + (c - bc_) * (c - bc_);
      img.at(r, c) = blend(s.background, s.foreground, std::exp(-d2 / (2.0 * sigma * sigma)));
    }
  return img;
}

Image render_two_object_crossing(const SceneSpec& s, int b) {
  Image img(s.rows, s.cols, s.background);
  const double half1 = std::max(2.0, std::min(s.rows, s.cols) / 8.0);
  const double half2 = std::max(2.0, std::min(s.rows, s.cols) / 10.0);
  const double cr = s.rows / 2.0;
  const double mid = s.cols / 2.0;
  const double reach = std::min(s.velocity * (s.count - 1) / 2.0,
                                mid - std::max(half1, half2) - 2.0);
  // objects start `reach` apart from center, meet at b = (count-1)/2
  const double cc1 = mid - reach + s.velocity * b;
  const double cc2 = mid + reach - s.velocity * b;
  for (int r = 0; r < s.rows; ++r)
    for (int c = 0; c < s.cols; ++c) {
      const double w1 = box_coverage(r, c, cr, cc1, half1);
      const double w2 = box_coverage(r, c, cr, cc2, half2);
      img.at(r, c) = blend(s.background, s.foreground, std::max(w1, w2));
    }
  return img;
}

void validate_spec(const SceneSpec& s) {
  if (s.rows < 8 || s.cols < 8)
    throw InvalidConfigError("scene: size components must be >= 8");
  if (s.count < 1) throw InvalidConfigError("scene: count must be >= 1");
  if (!std::isfinite(s.velocity)) throw InvalidConfigError("scene: velocity must be finite");
  if (s.background == s.foreground)
    throw InvalidConfigError("scene: foreground must differ from background");
  if (s.background < 0.0 || s.background > 1.0 || s.foreground < 0.0 || s.foreground > 1.0)
    throw InvalidConfigError("scene: intensities must lie in [0,1]");
  if (s.frame_interval_s <= 0.0)
    throw InvalidConfigError("scene: frame_interval must be positive");
}

}  // namespace

void validate(const FrameSequence& seq) {
  if (seq.count() < 1) throw InvalidConfigError("frame sequence: count must be >= 1");
  if (seq.frame_interval_s <= 0.0)
    throw InvalidConfigError("frame sequence: frame_interval must be positive");
  for (const Image& f : seq.frames) {
    if (!f.same_shape(seq.frames.front()))
      throw DimensionMismatchError("frame sequence: frames differ in shape");
    for (double v : f.data)
      if (!(v >= 0.0 && v <= 1.0))
        throw InvalidConfigError("frame sequence: sample outside [0,1]");
  }
}

FrameSequence synthesize(const SceneSpec& spec) {
  validate_spec(spec);
  // seed only randomizes the starting phase of the periodic kinds; every kind
  // is a closed-form function of (spec, frame index)
  Philox rng(derive_seed(spec.seed, "scene_synth"));
  const double phase = 2.0 * std::numbers::pi * rng.uniform();

  FrameSequence seq;
  seq.frame_interval_s = spec.frame_interval_s;
  seq.frames.reserve(spec.count);
  for (int b = 0; b < spec.count; ++b) {
    switch (spec.kind) {
      case SceneKind::translating_square:
        seq.frames.push_back(render_translating_square(spec, b));
        break;
      case SceneKind::rotating_bar:
        seq.frames.push_back(render_rotating_bar(spec, b, phase));
        break;
      case SceneKind::gaussian_blob_orbit:
        seq.frames.push_back(render_blob_orbit(spec, b, phase));
        break;
      case SceneKind::two_object_crossing:
        seq.frames.push_back(render_two_object_crossing(spec, b));
        break;
    }
    clamp01(seq.frames.back());
  }
  return seq;
}

}  // namespace evsci::scene
