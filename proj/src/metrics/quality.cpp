#include "evsci/metrics/quality.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace evsci::metrics {

using nlohmann::json;

double psnr(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::vector<double> gaussian_kernel() {
  std::vector<double> k(kWindow);
  const int half = kWindow / 2;
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

// separable valid-region convolution with the 11x11 Gaussian window
Image gaussian_filter_valid(const Image& img) {
  static const std::vector<double> kernel = gaussian_kernel();
  const int out_rows = img.rows - kWindow + 1;
  const int out_cols = img.cols - kWindow + 1;
  Image tmp(img.rows, out_cols);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += kernel[k] * img.at(r, c + k);
      tmp.at(r, c) = acc;
    }
  Image out(out_rows, out_cols);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += kernel[k] * tmp.at(r + k, c);
      out.at(r, c) = acc;
    }
  return out;
}

Image elementwise_product(const Image& a, const Image& b) {
  Image out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.rows < kWindow || a.cols < kWindow)
    throw DimensionMismatchError("ssim: images must be at least 11x11");

  const double c1 = kK1 * kK1;  // dynamic range 1.0
  const double c2 = kK2 * kK2;

  const Image mu_a = gaussian_filter_valid(a);
  const Image mu_b = gaussian_filter_valid(b);
  const Image aa = gaussian_filter_valid(elementwise_product(a, a));
  const Image bb = gaussian_filter_valid(elementwise_product(b, b));
  const Image ab = gaussian_filter_valid(elementwise_product(a, b));

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.data[i];
    const double mb = mu_b.data[i];
    const double va = aa.data[i] - ma * ma;
    const double vb = bb.data[i] - mb * mb;
    const double cov = ab.data[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

MetricReport evaluate_sequence(const scene::FrameSequence& pred, const scene::FrameSequence& gt) {
  if (pred.count() != gt.count())
    throw DimensionMismatchError("evaluate_sequence: frame counts differ");
  MetricReport report;
  report.frame_count = pred.count();
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  int finite = 0;
  for (int b = 0; b < pred.count(); ++b) {
    const double p = psnr(pred.frames[b], gt.frames[b]);
    const double s = ssim(pred.frames[b], gt.frames[b]);
    report.per_frame.emplace_back(p, s);
    ssim_sum += s;
    if (std::isinf(p)) {
      ++report.infinite_psnr_frames;
    } else {
      psnr_sum += p;
      ++finite;
    }
  }
  report.mean_psnr_db = finite > 0 ? psnr_sum / finite : std::numeric_limits<double>::infinity();
  report.mean_ssim = report.frame_count > 0 ? ssim_sum / report.frame_count : 0.0;
  return report;
}

void save_report_json(const MetricReport& report, const std::filesystem::path& path) {
  json frames = json::array();
  for (const auto& [p, s] : report.per_frame) {
    json row;
    row["psnr_db"] = std::isinf(p) ? json(nullptr) : json(p);
    row["ssim"] = s;
    frames.push_back(row);
  }
  const json j{{"per_frame", frames},
               {"mean_psnr_db", std::isinf(report.mean_psnr_db) ? json(nullptr)
                                                                : json(report.mean_psnr_db)},
               {"mean_ssim", report.mean_ssim},
               {"frame_count", report.frame_count},
               {"infinite_psnr_frames", report.infinite_psnr_frames}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

void save_report_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "frame,psnr_db,ssim\n";
  for (std::size_t i = 0; i < report.per_frame.size(); ++i) {
    const auto& [p, s] = report.per_frame[i];
    out << i << ",";
    if (std::isinf(p))
      out << "inf";
    else
      out << p;
    out << "," << s << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace evsci::metrics
