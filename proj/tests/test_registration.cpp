#include <doctest.h>

#include <cmath>
#include <numbers>

#include "evsci/core/rng.hpp"
#include "evsci/reg/similarity.hpp"

using namespace evsci;

namespace {

// smooth random texture, tapered to zero at the borders so warps do not drag
// hard edges into the patch
Image textured_patch(int size, std::uint64_t seed) {
  Philox rng(seed);
  Image img(size, size);
  for (double& v : img.data) v = rng.uniform();
  for (int pass = 0; pass < 4; ++pass) {
    Image blurred(size, size);
    for (int r = 0; r < size; ++r)
      for (int c = 0; c < size; ++c) {
        double acc = 0.0;
        int count = 0;
        for (int dr = -2; dr <= 2; ++dr)
          for (int dc = -2; dc <= 2; ++dc) {
            const int rr = r + dr, cc = c + dc;
            if (rr >= 0 && rr < size && cc >= 0 && cc < size) {
              acc += img.at(rr, cc);
              ++count;
            }
          }
        blurred.at(r, c) = acc / count;
      }
    img = blurred;
  }
  const double m = mean(img);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double wr = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * r / (size - 1));
      const double wc = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * c / (size - 1));
      img.at(r, c) = (img.at(r, c) - m) * wr * wc + 0.5;
    }
  return img;
}

Image interior_blob(int size, double cr, double cc, double sigma) {
  Image img(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      img.at(r, c) = std::exp(-((r - cr) * (r - cr) + (c - cc) * (c - cc)) / (2 * sigma * sigma));
  return img;
}

}  // namespace

TEST_CASE("self-registration returns the identity with a near-perfect score") {
  const Image fixed = textured_patch(64, 1);
  const Image target = reg::gradient_magnitude(fixed);
  const auto result = reg::estimate_similarity(target, target);
  CHECK(result.score >= 0.999);
  CHECK(result.transform.dx == 0.0);
  CHECK(result.transform.dy == 0.0);
  CHECK(result.transform.rotation_rad == 0.0);
  CHECK(result.transform.scale == 1.0);
}

TEST_CASE("a pure translation is recovered within half a pixel") {
  const Image target = reg::gradient_magnitude(textured_patch(64, 2));
  reg::SimilarityTransform shift;
  shift.dx = 3.0;
  shift.dy = -2.0;
  const Image moving = reg::warp_image(target, shift, 64, 64);

  const auto self = reg::estimate_similarity(target, target);
  const auto result = reg::estimate_similarity(moving, target);
  // the estimate maps moving back onto the target, i.e. the inverse shift
  CHECK(std::abs(result.transform.dx + 3.0) <= 0.5);
  CHECK(std::abs(result.transform.dy - 2.0) <= 0.5);
  CHECK(self.score - result.score < 0.05);
}

TEST_CASE("flat inputs raise no-signal") {
  const Image flat(64, 64, 0.0);
  const Image target = reg::gradient_magnitude(textured_patch(64, 3));
  CHECK_THROWS_AS(reg::estimate_similarity(flat, target), NoSignalError);
  CHECK_THROWS_AS(reg::estimate_similarity(target, flat), NoSignalError);
}

TEST_CASE("patches below 32x32 are rejected") {
  const Image small(16, 16, 0.5);
  CHECK_THROWS_AS(reg::estimate_similarity(small, small), InvalidConfigError);
}

TEST_CASE("synthetic similarity transforms are recovered in range") {
  const Image target = reg::gradient_magnitude(textured_patch(96, 4));
  Philox rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    reg::SimilarityTransform truth;
    truth.dx = (rng.uniform() - 0.5) * 12.0;
    truth.dy = (rng.uniform() - 0.5) * 12.0;
    truth.rotation_rad = (rng.uniform() - 0.5) * 2.0 * 0.05;
    truth.scale = 1.0 + (rng.uniform() - 0.5) * 0.12;
    const Image moving = reg::warp_image(target, truth.inverse(), 96, 96);
    const auto result = reg::estimate_similarity(moving, target);
    CHECK(std::abs(result.transform.dx - truth.dx) <= 0.5);
    CHECK(std::abs(result.transform.dy - truth.dy) <= 0.5);
    CHECK(std::abs(result.transform.rotation_rad - truth.rotation_rad) <= 0.01);
    CHECK(std::abs(result.transform.scale - truth.scale) <= 0.01 * truth.scale);
  }
}

TEST_CASE("the score is invariant to affine intensity rescaling") {
  const Image target = reg::gradient_magnitude(textured_patch(64, 5));
  reg::SimilarityTransform shift;
  shift.dx = 2.0;
  Image moving = reg::warp_image(target, shift, 64, 64);
  const auto base = reg::estimate_similarity(moving, target);

  Image scaled = moving;
  for (double& v : scaled.data) v = 3.7 * v;  // gain only: |warped moving| must stay nonneg
  const auto gained = reg::estimate_similarity(scaled, target);
  CHECK(gained.transform.dx == doctest::Approx(base.transform.dx));
  CHECK(gained.transform.dy == doctest::Approx(base.transform.dy));
  CHECK(gained.score == doctest::Approx(base.score).epsilon(1e-9));

  Image offset_target = target;
  for (double& v : offset_target.data) v = 0.25 + 2.0 * v;
  const auto shifted = reg::estimate_similarity(moving, offset_target);
  CHECK(shifted.transform.dx == doctest::Approx(base.transform.dx));
  CHECK(shifted.score == doctest::Approx(base.score).epsilon(1e-9));
}

TEST_CASE("identity warp reproduces the grid") {
  events::EventVoxelGrid grid;
  grid.t_b_us = 100;
  grid.bins.push_back(interior_blob(32, 16, 16, 4));
  grid.bins.push_back(interior_blob(32, 14, 18, 3));
  const auto warped = reg::warp_voxels(grid, reg::SimilarityTransform{}, 32, 32);
  for (std::size_t b = 0; b < grid.bins.size(); ++b)
    CHECK(max_abs_diff(warped.bins[b], grid.bins[b]) <= 1e-6);
}

TEST_CASE("integer translation equals an index shift on interior support") {
  events::EventVoxelGrid grid;
  grid.bins.push_back(interior_blob(32, 16, 14, 3));
  reg::SimilarityTransform shift;
  shift.dx = 2.0;
  const auto warped = reg::warp_voxels(grid, shift, 32, 32);
  for (int r = 0; r < 32; ++r)
    for (int c = 2; c < 32; ++c)
      CHECK(warped.bins[0].at(r, c) ==
            doctest::Approx(grid.bins[0].at(r, c - 2)).epsilon(1e-12));
}

TEST_CASE("warp then inverse warp round trips on a smooth grid") {
  events::EventVoxelGrid grid;
  grid.bins.push_back(interior_blob(48, 24, 24, 6));
  reg::SimilarityTransform tf;
  tf.dx = 3.5;
  tf.dy = -1.25;
  tf.rotation_rad = 0.05;
  tf.scale = 1.05;
  const auto there = reg::warp_voxels(grid, tf, 48, 48);
  const auto back = reg::warp_voxels(there, tf.inverse(), 48, 48);
  const double rms = rms_diff(back.bins[0], grid.bins[0]);
  double ref = 0.0;
  for (double v : grid.bins[0].data) ref += v * v;
  ref = std::sqrt(ref / grid.bins[0].size());
  CHECK(rms <= 0.01 * std::max(ref, 1.0));
}

TEST_CASE("warp preserves signed mass within 2% inside the search range") {
  events::EventVoxelGrid grid;
  Image blob = interior_blob(48, 24, 24, 5);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 24; ++c) blob.at(r, c) = -blob.at(r, c);  // signed content
  grid.bins.push_back(blob);
  reg::SimilarityTransform tf;
  tf.dx = 4.0;
  tf.dy = 2.0;
  tf.rotation_rad = -0.06;
  tf.scale = 0.92;
  const auto warped = reg::warp_voxels(grid, tf, 48, 48);
  const double before = sum(grid.bins[0]);
  const double after = sum(warped.bins[0]);
  CHECK(std::abs(after - before) <= 0.02 * std::abs(before));
}

TEST_CASE("warp is linear in the grid") {
  Image g1 = interior_blob(32, 14, 18, 4);
  Image g2 = interior_blob(32, 20, 12, 5);
  reg::SimilarityTransform tf;
  tf.dx = 1.5;
  tf.rotation_rad = 0.03;
  tf.scale = 1.02;
  events::EventVoxelGrid a, b, mix;
  a.bins.push_back(g1);
  b.bins.push_back(g2);
  Image m(32, 32);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = 2.0 * g1.data[i] - 0.5 * g2.data[i];
  mix.bins.push_back(m);
  const auto wa = reg::warp_voxels(a, tf, 32, 32);
  const auto wb = reg::warp_voxels(b, tf, 32, 32);
  const auto wm = reg::warp_voxels(mix, tf, 32, 32);
  for (std::size_t i = 0; i < m.size(); ++i)
    CHECK(wm.bins[0].data[i] ==
          doctest::Approx(2.0 * wa.bins[0].data[i] - 0.5 * wb.bins[0].data[i]).epsilon(1e-10));
}

TEST_CASE("transform inverse composes to the identity") {
  reg::SimilarityTransform tf;
  tf.dx = 5.0;
  tf.dy = -3.0;
  tf.rotation_rad = 0.07;
  tf.scale = 1.08;
  const auto inv = tf.inverse();
  // compose by mapping a few points through both
  for (double x : {0.0, 10.0, -7.5}) {
    const double cs = std::cos(tf.rotation_rad), sn = std::sin(tf.rotation_rad);
    const double fx = tf.scale * (cs * x - sn * (x / 2)) + tf.dx;
    const double fy = tf.scale * (sn * x + cs * (x / 2)) + tf.dy;
    const double ics = std::cos(inv.rotation_rad), isn = std::sin(inv.rotation_rad);
    const double bx = inv.scale * (ics * fx - isn * fy) + inv.dx;
    const double by = inv.scale * (isn * fx + ics * fy) + inv.dy;
    CHECK(bx == doctest::Approx(x).epsilon(1e-9));
    CHECK(by == doctest::Approx(x / 2).epsilon(1e-9));
  }
}

TEST_CASE("registration parameters survive a json round trip") {
  std::vector<reg::RegistrationResult> results(2);
  results[0].transform.dx = 1.25;
  results[0].transform.scale = 1.05;
  results[0].score = 0.93;
  results[0].patch_origin_x = 128;
  results[0].patch_rows = results[0].patch_cols = 128;
  results[1].transform.rotation_rad = -0.04;
  results[1].patch_origin_y = 64;

  const auto path = std::filesystem::temp_directory_path() / "evsci_reg.json";
  reg::save_registration_json(results, path);
  const auto loaded = reg::load_registration_json(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].transform.dx == doctest::Approx(1.25));
  CHECK(loaded[0].transform.scale == doctest::Approx(1.05));
  CHECK(loaded[0].score == doctest::Approx(0.93));
  CHECK(loaded[0].patch_origin_x == 128);
  CHECK(loaded[1].transform.rotation_rad == doctest::Approx(-0.04));
  CHECK(loaded[1].patch_origin_y == 64);
  std::filesystem::remove(path);
}
