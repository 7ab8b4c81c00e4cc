#include "evsci/reg/similarity.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <tuple>

#include <json.hpp>

namespace evsci::reg {

namespace fs = std::filesystem;
using nlohmann::json;

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation_rad = -rotation_rad;
  const double cs = std::cos(-rotation_rad);
  const double sn = std::sin(-rotation_rad);
  inv.dx = -inv.scale * (cs * dx - sn * dy);
  inv.dy = -inv.scale * (sn * dx + cs * dy);
  return inv;
}

Image gradient_magnitude(const Image& img) {
  Image out(img.rows, img.cols);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      const int c0 = std::max(c - 1, 0);
      const int c1 = std::min(c + 1, img.cols - 1);
      const int r0 = std::max(r - 1, 0);
      const int r1 = std::min(r + 1, img.rows - 1);
      const double gx = (img.at(r, c1) - img.at(r, c0)) / (c1 - c0 > 0 ? c1 - c0 : 1);
      const double gy = (img.at(r1, c) - img.at(r0, c)) / (r1 - r0 > 0 ? r1 - r0 : 1);
      out.at(r, c) = std::hypot(gx, gy);
    }
  return out;
}

namespace {

struct InverseMap {
  // output pixel (col, row) -> source pixel, in the same coordinate frame
  double cs, sn, inv_scale, cx, cy, dx, dy;

  static InverseMap from(const SimilarityTransform& tf, double cx, double cy) {
    InverseMap m;
    m.inv_scale = 1.0 / tf.scale;
    m.cs = std::cos(tf.rotation_rad);
    m.sn = std::sin(tf.rotation_rad);
    m.cx = cx;
    m.cy = cy;
    m.dx = tf.dx;
    m.dy = tf.dy;
    return m;
  }

  void map(double out_x, double out_y, double& src_x, double& src_y) const {
    const double qx = out_x - cx - dx;
    const double qy = out_y - cy - dy;
    // R(-theta) * q / s
    src_x = inv_scale * (cs * qx + sn * qy) + cx;
    src_y = inv_scale * (-sn * qx + cs * qy) + cy;
  }
};

}  // namespace

Image warp_image(const Image& img, const SimilarityTransform& tf, int out_rows, int out_cols) {
  Image out(out_rows, out_cols);
  const double cx = (out_cols - 1) / 2.0;
  const double cy = (out_rows - 1) / 2.0;
  const InverseMap m = InverseMap::from(tf, cx, cy);
  const double inv_det = 1.0 / (tf.scale * tf.scale);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double sx, sy;
      m.map(c, r, sx, sy);
      out.at(r, c) = inv_det * sample_bilinear_zero(img, sy, sx);
    }
  return out;
}

events::EventVoxelGrid warp_voxels(const events::EventVoxelGrid& grid,
                                   const SimilarityTransform& tf, int out_rows, int out_cols) {
  events::EventVoxelGrid out;
  out.t_a_us = grid.t_a_us;
  out.t_b_us = grid.t_b_us;
  out.bins.reserve(grid.bins.size());
  for (const Image& bin : grid.bins) out.bins.push_back(warp_image(bin, tf, out_rows, out_cols));
  return out;
}

namespace {

struct TargetStats {
  double mean = 0.0;
  double norm = 0.0;  // sqrt(sum (g - mean)^2)
};

TargetStats stats_of(const Image& img) {
  TargetStats s;
  s.mean = mean(img);
  double acc = 0.0;
  for (double v : img.data) acc += (v - s.mean) * (v - s.mean);
  s.norm = std::sqrt(acc);
  return s;
}

Image downsample2(const Image& img) {
  const int rows = std::max(img.rows / 2, 1);
  const int cols = std::max(img.cols / 2, 1);
  Image out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double acc = 0.0;
      int count = 0;
      for (int dr = 0; dr < 2; ++dr)
        for (int dc = 0; dc < 2; ++dc) {
          const int rr = 2 * r + dr;
          const int cc = 2 * c + dc;
          if (rr < img.rows && cc < img.cols) {
            acc += img.at(rr, cc);
            ++count;
          }
        }
      out.at(r, c) = acc / count;
    }
  return out;
}

std::array<double, 4> identity_distance(const SimilarityTransform& tf) {
  return {std::abs(tf.dx), std::abs(tf.dy), std::abs(tf.rotation_rad),
          std::abs(tf.scale - 1.0)};
}

struct Best {
  SimilarityTransform tf;
  double score = -3.0;

  Best() = default;
  explicit Best(const SimilarityTransform& seed) : tf(seed) {}

  void consider(const SimilarityTransform& cand, double s) {
    if (s > score || (s == score && identity_distance(cand) < identity_distance(tf))) {
      score = s;
      tf = cand;
    }
  }
};

struct Axis {
  double lo, hi, step;
};

int axis_count(const Axis& a) {
  return a.step > 0.0 ? static_cast<int>(std::floor((a.hi - a.lo) / a.step + 0.5)) + 1 : 1;
}

// Evaluate one grid of similarity candidates at a pyramid level. For each
// (scale, rotation) pair the moving patch is warped once with no translation;
// every translation candidate then reads that buffer through a bilinear
// lookup whose weights are constant per shift, since a translation is a pure
// output-space shift.
void sweep(Best& best, const Image& target, const TargetStats& tstats, const Image& moving,
           int level, double cx, double cy, const Axis& ax, const Axis& ay, const Axis& rot,
           const Axis& scl) {
  const double to_full = static_cast<double>(1 << level);
  const int rows = target.rows;
  const int cols = target.cols;
  const std::size_t n = target.size();

  Image warped(rows, cols);
  for (int is = 0, ns = axis_count(scl); is < ns; ++is) {
    const double s = scl.lo + is * scl.step;
    for (int ir = 0, nr = axis_count(rot); ir < nr; ++ir) {
      const double theta = rot.lo + ir * rot.step;
      SimilarityTransform rigid;
      rigid.scale = s;
      rigid.rotation_rad = theta;
      const InverseMap m = InverseMap::from(rigid, cx, cy);
      for (int r = 0; r < rows; ++r) {
        const double full_y = (r + 0.5) * to_full - 0.5;
        for (int c = 0; c < cols; ++c) {
          const double full_x = (c + 0.5) * to_full - 0.5;
          double sx_full, sy_full;
          m.map(full_x, full_y, sx_full, sy_full);
          warped.at(r, c) = std::abs(sample_bilinear_zero(
              moving, (sy_full + 0.5) / to_full - 0.5, (sx_full + 0.5) / to_full - 0.5));
        }
      }

      for (int iy = 0, ny = axis_count(ay); iy < ny; ++iy) {
        const double dy_level = (ay.lo + iy * ay.step) / to_full;
        for (int ix = 0, nx = axis_count(ax); ix < nx; ++ix) {
          const double dx_level = (ax.lo + ix * ax.step) / to_full;
          const int oy = static_cast<int>(std::floor(dy_level));
          const int ox = static_cast<int>(std::floor(dx_level));
          const double fy = dy_level - oy;
          const double fx = dx_level - ox;
          const double w00 = (1.0 - fy) * (1.0 - fx);
          const double w01 = (1.0 - fy) * fx;
          const double w10 = fy * (1.0 - fx);
          const double w11 = fy * fx;

          double sum_w = 0.0, sum_ww = 0.0, sum_wt = 0.0;
          for (int r = 0; r < rows; ++r) {
            const int sr0 = r - oy;
            const int sr1 = sr0 - 1;
            const bool ok0 = sr0 >= 0 && sr0 < rows;
            const bool ok1 = sr1 >= 0 && sr1 < rows;
            if (!ok0 && !ok1) continue;
            for (int c = 0; c < cols; ++c) {
              const int sc0 = c - ox;
              const int sc1 = sc0 - 1;
              const bool okc0 = sc0 >= 0 && sc0 < cols;
              const bool okc1 = sc1 >= 0 && sc1 < cols;
              double w = 0.0;
              if (ok0) {
                if (okc0) w += w00 * warped.at(sr0, sc0);
                if (okc1) w += w01 * warped.at(sr0, sc1);
              }
              if (ok1) {
                if (okc0) w += w10 * warped.at(sr1, sc0);
                if (okc1) w += w11 * warped.at(sr1, sc1);
              }
              sum_w += w;
              sum_ww += w * w;
              sum_wt += w * target.at(r, c);
            }
          }
          const double mw = sum_w / static_cast<double>(n);
          const double var_w = sum_ww - static_cast<double>(n) * mw * mw;
          double score = -2.0;
          if (var_w > 1e-14 && tstats.norm > 1e-14)
            score = (sum_wt - static_cast<double>(n) * mw * tstats.mean) /
                    (std::sqrt(var_w) * tstats.norm);
          SimilarityTransform cand;
          cand.scale = s;
          cand.rotation_rad = theta;
          cand.dx = ax.lo + ix * ax.step;
          cand.dy = ay.lo + iy * ay.step;
          best.consider(cand, score);
        }
      }
    }
  }
}

// Full-resolution sweep with one exact warp per candidate. The hoisted sweep
// above smooths fractional shifts through a second interpolation, which
// biases sub-pixel comparisons; the final refinement therefore pays for the
// direct evaluation.
void sweep_direct(Best& best, const Image& target, const TargetStats& tstats,
                  const Image& moving, double cx, double cy, const Axis& ax, const Axis& ay,
                  const Axis& rot, const Axis& scl) {
  const std::size_t n = target.size();
  for (int is = 0, ns = axis_count(scl); is < ns; ++is) {
    for (int ir = 0, nr = axis_count(rot); ir < nr; ++ir) {
      for (int iy = 0, ny = axis_count(ay); iy < ny; ++iy) {
        for (int ix = 0, nx = axis_count(ax); ix < nx; ++ix) {
          SimilarityTransform cand;
          cand.scale = scl.lo + is * scl.step;
          cand.rotation_rad = rot.lo + ir * rot.step;
          cand.dx = ax.lo + ix * ax.step;
          cand.dy = ay.lo + iy * ay.step;
          const InverseMap m = InverseMap::from(cand, cx, cy);
          double sum_w = 0.0, sum_ww = 0.0, sum_wt = 0.0;
          for (int r = 0; r < target.rows; ++r)
            for (int c = 0; c < target.cols; ++c) {
              double sx, sy;
              m.map(c, r, sx, sy);
              const double w = std::abs(sample_bilinear_zero(moving, sy, sx));
              sum_w += w;
              sum_ww += w * w;
              sum_wt += w * target.at(r, c);
            }
          const double mw = sum_w / static_cast<double>(n);
          const double var_w = sum_ww - static_cast<double>(n) * mw * mw;
          double score = -2.0;
          if (var_w > 1e-14 && tstats.norm > 1e-14)
            score = (sum_wt - static_cast<double>(n) * mw * tstats.mean) /
                    (std::sqrt(var_w) * tstats.norm);
          best.consider(cand, score);
        }
      }
    }
  }
}

}  // namespace

RegistrationResult estimate_similarity(const events::EventImage& moving, const Image& fixed,
                                       const SimilaritySearchConfig& cfg) {
  require_same_shape(moving, fixed, "estimate_similarity");
  if (fixed.rows < 32 || fixed.cols < 32)
    throw InvalidConfigError("estimate_similarity: patches must be at least 32x32");
  if (variance(fixed) < 1e-8)
    throw NoSignalError("estimate_similarity: fixed patch has no signal");
  if (variance(moving) < 1e-8)
    throw NoSignalError("estimate_similarity: moving patch has no signal");

  const int levels = std::max(cfg.pyramid_levels, 1);
  std::vector<Image> fixed_pyr{fixed};
  std::vector<Image> moving_pyr{moving};
  for (int l = 1; l < levels; ++l) {
    fixed_pyr.push_back(downsample2(fixed_pyr.back()));
    moving_pyr.push_back(downsample2(moving_pyr.back()));
  }
  std::vector<TargetStats> stats;
  stats.reserve(levels);
  for (const Image& f : fixed_pyr) stats.push_back(stats_of(f));

  const double cx = (fixed.cols - 1) / 2.0;
  const double cy = (fixed.rows - 1) / 2.0;

  // Stages run coarse to fine, each re-centered on its predecessor. Scores
  // from different resolutions and evaluators are not comparable, so every
  // stage starts from a fresh best (its grid always contains the carried-over
  // transform).

  // coarse exhaustive grid at the top pyramid level; the translation step is
  // one pixel at that level so the hoisted shifts stay exact lookups
  Best best;
  const double top_px = static_cast<double>(1 << (levels - 1));
  {
    const int top = levels - 1;
    const Axis trans{-cfg.trans_range_px, cfg.trans_range_px, top_px};
    const Axis rot{-cfg.rot_range_rad, cfg.rot_range_rad, cfg.rot_coarse_step_rad};
    const Axis scl{cfg.scale_min, cfg.scale_max, cfg.scale_coarse_step};
    sweep(best, fixed_pyr[top], stats[top], moving_pyr[top], top, cx, cy, trans, trans, rot,
          scl);
  }

  // descend at integer-shift translation steps; rotation is re-searched over
  // its whole range on the way down because coarse resolutions alias small
  // rotations against translation
  for (int level = levels - 2; level >= 0; --level) {
    const double step_px = static_cast<double>(1 << level);
    {
      const SimilarityTransform base = best.tf;
      Best stage{base};
      const Axis ax{std::max(base.dx - 2.0 * step_px, -cfg.trans_range_px),
                    std::min(base.dx + 2.0 * step_px, cfg.trans_range_px), step_px};
      const Axis ay{std::max(base.dy - 2.0 * step_px, -cfg.trans_range_px),
                    std::min(base.dy + 2.0 * step_px, cfg.trans_range_px), step_px};
      const Axis rot{-cfg.rot_range_rad, cfg.rot_range_rad, cfg.rot_coarse_step_rad};
      const Axis scl{std::max(base.scale - 1.5 * cfg.scale_coarse_step, cfg.scale_min),
                     std::min(base.scale + 1.5 * cfg.scale_coarse_step, cfg.scale_max),
                     cfg.scale_coarse_step / 2.0};
      sweep(stage, fixed_pyr[level], stats[level], moving_pyr[level], level, cx, cy, ax, ay,
            rot, scl);
      best = stage;
    }
    {
      const SimilarityTransform base = best.tf;
      Best stage{base};
      const Axis ax{std::max(base.dx - 2.0 * step_px, -cfg.trans_range_px),
                    std::min(base.dx + 2.0 * step_px, cfg.trans_range_px), step_px};
      const Axis ay{std::max(base.dy - 2.0 * step_px, -cfg.trans_range_px),
                    std::min(base.dy + 2.0 * step_px, cfg.trans_range_px), step_px};
      const Axis rot{std::max(base.rotation_rad - 1.25 * cfg.rot_coarse_step_rad,
                              -cfg.rot_range_rad),
                     std::min(base.rotation_rad + 1.25 * cfg.rot_coarse_step_rad,
                              cfg.rot_range_rad),
                     cfg.rot_coarse_step_rad / 4.0};
      const Axis scl{std::max(base.scale - 0.75 * cfg.scale_coarse_step, cfg.scale_min),
                     std::min(base.scale + 0.75 * cfg.scale_coarse_step, cfg.scale_max),
                     cfg.scale_coarse_step / 4.0};
      sweep(stage, fixed_pyr[level], stats[level], moving_pyr[level], level, cx, cy, ax, ay,
            rot, scl);
      best = stage;
    }
  }

  // two re-centered exact passes at full resolution and the final step sizes
  for (int pass = 0; pass < 2; ++pass) {
    const SimilarityTransform base = best.tf;
    Best stage{base};
    const double trans_win = (pass == 0 ? 2.0 : 1.0) * cfg.trans_final_step;
    const double rot_win = (pass == 0 ? 3.0 : 2.0) * cfg.rot_final_step_rad;
    const double scale_win = (pass == 0 ? 2.0 : 1.0) * cfg.scale_final_step;
    const Axis ax{std::max(base.dx - trans_win, -cfg.trans_range_px),
                  std::min(base.dx + trans_win, cfg.trans_range_px), cfg.trans_final_step};
    const Axis ay{std::max(base.dy - trans_win, -cfg.trans_range_px),
                  std::min(base.dy + trans_win, cfg.trans_range_px), cfg.trans_final_step};
    const Axis rot{std::max(base.rotation_rad - rot_win, -cfg.rot_range_rad),
                   std::min(base.rotation_rad + rot_win, cfg.rot_range_rad),
                   cfg.rot_final_step_rad};
    const Axis scl{std::max(base.scale - scale_win, cfg.scale_min),
                   std::min(base.scale + scale_win, cfg.scale_max), cfg.scale_final_step};
    sweep_direct(stage, fixed_pyr[0], stats[0], moving_pyr[0], cx, cy, ax, ay, rot, scl);
    best = stage;
  }

  RegistrationResult result;
  result.transform = best.tf;
  result.score = best.score;
  result.patch_rows = fixed.rows;
  result.patch_cols = fixed.cols;
  return result;
}

void save_registration_json(const std::vector<RegistrationResult>& results,
                            const fs::path& path) {
  json arr = json::array();
  for (const RegistrationResult& r : results) {
    arr.push_back(json{{"patch_origin", {r.patch_origin_x, r.patch_origin_y}},
                       {"patch_size", {r.patch_cols, r.patch_rows}},
                       {"scale", r.transform.scale},
                       {"rotation_rad", r.transform.rotation_rad},
                       {"dx", r.transform.dx},
                       {"dy", r.transform.dy},
                       {"ncc", r.score}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << arr.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<RegistrationResult> load_registration_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  json arr = json::parse(in, nullptr, true);
  std::vector<RegistrationResult> results;
  for (const json& j : arr) {
    RegistrationResult r;
    r.patch_origin_x = j.at("patch_origin").at(0).get<int>();
    r.patch_origin_y = j.at("patch_origin").at(1).get<int>();
    r.patch_cols = j.at("patch_size").at(0).get<int>();
    r.patch_rows = j.at("patch_size").at(1).get<int>();
    r.transform.scale = j.at("scale").get<double>();
    r.transform.rotation_rad = j.at("rotation_rad").get<double>();
    r.transform.dx = j.at("dx").get<double>();
    r.transform.dy = j.at("dy").get<double>();
    r.score = j.at("ncc").get<double>();
    results.push_back(r);
  }
  return results;
}

}  // namespace evsci::reg
