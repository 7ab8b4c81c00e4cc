#pragma once

#include <filesystem>

#include "evsci/cli/config.hpp"

namespace evsci::cli {

// Ground-truth frames, mask stack, coded snapshot and event stream, linked by
// manifest_simulate.json. With count > B, every (count/B)-th frame is encoded
// and the events cover the full scene.
void cmd_simulate(const PipelineConfig& cfg);

// Optional patch-wise registration, then GAP/ADMM-TV reconstruction of the
// encoded frames; writes recon frames, a solver report, and metrics when the
// ground truth is present.
void cmd_reconstruct(const PipelineConfig& cfg);

// Dense uniformly-spaced interpolation across the exposure from the
// reconstructed frames plus events; writes the frame directory, a timestamp
// manifest, and a nearest-ground-truth metric table when available.
void cmd_densify(const PipelineConfig& cfg);

// PSNR/SSIM of one stored sequence against another.
void cmd_evaluate(const std::filesystem::path& pred, scene::FrameFormat pred_format,
                  const std::filesystem::path& gt, scene::FrameFormat gt_format,
                  const std::filesystem::path& report_path);

// Estimate per-patch similarity transforms aligning the accumulated event
// image to the normalized measurement; saves the parameters and the warped
// per-slice voxel grids.
void cmd_register(const PipelineConfig& cfg);

// Event file format conversion.
void cmd_events_convert(const std::filesystem::path& in, events::EventFormat in_format,
                        const std::filesystem::path& out, events::EventFormat out_format);

}  // namespace evsci::cli
