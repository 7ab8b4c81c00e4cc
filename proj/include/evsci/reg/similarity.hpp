#pragma once

#include <filesystem>
#include <vector>

#include "evsci/events/repr.hpp"

namespace evsci::reg {

// 2-D similarity about the patch center: p_fixed = s*R(theta)*(p - c) + c + d
// with p = (col, row), d = (dx, dy) in pixels.
struct SimilarityTransform {
  double scale = 1.0;
  double rotation_rad = 0.0;
  double dx = 0.0;
  double dy = 0.0;

  SimilarityTransform inverse() const;
};

struct RegistrationResult {
  SimilarityTransform transform;
  double score = 0.0;  // normalized cross-correlation in [-1, 1]
  int patch_origin_x = 0;
  int patch_origin_y = 0;
  int patch_rows = 0;
  int patch_cols = 0;
};

struct SimilaritySearchConfig {
  double trans_range_px = 16.0;   // +- range, coarse step 1 px
  double trans_final_step = 0.25;
  double rot_range_rad = 5.0 * 3.14159265358979323846 / 180.0;
  double rot_coarse_step_rad = 1.0 * 3.14159265358979323846 / 180.0;
  double rot_final_step_rad = 0.1 * 3.14159265358979323846 / 180.0;
  double scale_min = 0.9;
  double scale_max = 1.1;
  double scale_coarse_step = 0.02;
  double scale_final_step = 0.005;
  int pyramid_levels = 3;
};

// Gradient magnitude via central differences (one-sided at the borders).
Image gradient_magnitude(const Image& img);

// Warp with bilinear sampling at the inverse-mapped position; out-of-bounds
// samples contribute 0 and values carry the inverse Jacobian so signed mass
// is preserved under scaling.
Image warp_image(const Image& img, const SimilarityTransform& tf, int out_rows, int out_cols);

events::EventVoxelGrid warp_voxels(const events::EventVoxelGrid& grid,
                                   const SimilarityTransform& tf, int out_rows, int out_cols);

// Maximize NCC between `fixed` (the gradient magnitude of the normalized
// measurement patch) and |warp(moving)| over a coarse-to-fine similarity
// grid; deterministic, ties broken toward the identity. Throws NoSignalError
// when either patch is flat (variance < 1e-8).
RegistrationResult estimate_similarity(const events::EventImage& moving, const Image& fixed,
                                       const SimilaritySearchConfig& cfg = {});

void save_registration_json(const std::vector<RegistrationResult>& results,
                            const std::filesystem::path& path);
std::vector<RegistrationResult> load_registration_json(const std::filesystem::path& path);

}  // namespace evsci::reg
