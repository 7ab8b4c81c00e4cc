#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "evsci/scene/scene.hpp"

namespace evsci::metrics {

struct MetricReport {
  std::vector<std::pair<double, double>> per_frame;  // (psnr_db, ssim)
  double mean_psnr_db = 0.0;
  double mean_ssim = 0.0;
  int frame_count = 0;
  // frames with MSE == 0 report infinite PSNR and are excluded from the mean
  int infinite_psnr_frames = 0;
};

// 10*log10(peak^2 / MSE); identical inputs yield +infinity.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1.0; the window runs over valid positions only.
double ssim(const Image& a, const Image& b);

MetricReport evaluate_sequence(const scene::FrameSequence& pred, const scene::FrameSequence& gt);

void save_report_json(const MetricReport& report, const std::filesystem::path& path);
void save_report_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace evsci::metrics
