#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "evsci/core/errors.hpp"

namespace evsci {

// Row-major 2-D array of doubles. `rows` is the image height and `cols` the
// width; pixel (r, c) sits at row r, column c.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Image() = default;
  Image(int rows_, int cols_, double fill = 0.0)
      : rows(rows_), cols(cols_),
        data(static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_), fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Image& o) const = default;
};

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
  if (!a.same_shape(b))
    throw DimensionMismatchError(std::string(where) + ": image shapes differ");
}

inline void clamp01(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

inline double sum(const Image& img) {
  double s = 0.0;
  for (double v : img.data) s += v;
  return s;
}

inline double mean(const Image& img) {
  return img.data.empty() ? 0.0 : sum(img) / static_cast<double>(img.size());
}

inline double variance(const Image& img) {
  if (img.data.empty()) return 0.0;
  const double m = mean(img);
  double s = 0.0;
  for (double v : img.data) s += (v - m) * (v - m);
  return s / static_cast<double>(img.size());
}

inline double rms_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "rms_diff");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

inline double max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

// Bilinear sample at fractional (row, col); coordinates outside the image
// contribute zero.
inline double sample_bilinear_zero(const Image& img, double r, double c) {
  const int r0 = static_cast<int>(std::floor(r));
  const int c0 = static_cast<int>(std::floor(c));
  const double fr = r - r0;
  const double fc = c - c0;
  double acc = 0.0;
  for (int dr = 0; dr <= 1; ++dr) {
    const int rr = r0 + dr;
    if (rr < 0 || rr >= img.rows) continue;
    const double wr = dr ? fr : 1.0 - fr;
    if (wr == 0.0) continue;
    for (int dc = 0; dc <= 1; ++dc) {
      const int cc = c0 + dc;
      if (cc < 0 || cc >= img.cols) continue;
      const double wc = dc ? fc : 1.0 - fc;
      if (wc == 0.0) continue;
      acc += wr * wc * img.at(rr, cc);
    }
  }
  return acc;
}

// Bilinear resize with pixel-center alignment.
inline Image resize_bilinear(const Image& img, int out_rows, int out_cols) {
  if (out_rows < 1 || out_cols < 1)
    throw InvalidConfigError("resize_bilinear: output dims must be positive");
  Image out(out_rows, out_cols);
  const double sr = static_cast<double>(img.rows) / out_rows;
  const double sc = static_cast<double>(img.cols) / out_cols;
  for (int r = 0; r < out_rows; ++r) {
    const double src_r = std::clamp((r + 0.5) * sr - 0.5, 0.0, img.rows - 1.0);
    for (int c = 0; c < out_cols; ++c) {
      const double src_c = std::clamp((c + 0.5) * sc - 0.5, 0.0, img.cols - 1.0);
      out.at(r, c) = sample_bilinear_zero(img, src_r, src_c);
    }
  }
  return out;
}

}  // namespace evsci
