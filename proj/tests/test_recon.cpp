#include <doctest.h>

#include <cmath>

#include "evsci/core/rng.hpp"
#include "evsci/events/camera.hpp"
#include "evsci/metrics/quality.hpp"
#include "evsci/recon/solver.hpp"

using namespace evsci;

namespace {

Image random_image(int rows, int cols, Philox& rng, double lo = 0.0, double hi = 1.0) {
  Image img(rows, cols);
  for (double& v : img.data) v = lo + (hi - lo) * rng.uniform();
  return img;
}

sci::MaskStack ones_masks(int b, int rows, int cols) {
  sci::MaskStack stack;
  for (int i = 0; i < b; ++i) stack.masks.push_back(Image(rows, cols, 1.0));
  return stack;
}

// independent objective oracle for the event-consistency term
double event_objective(const std::vector<Image>& frames,
                       const std::vector<Image>& polarity_maps, double threshold, double eps) {
  double total = 0.0;
  for (std::size_t b = 0; b + 1 < frames.size(); ++b)
    for (std::size_t i = 0; i < frames[b].size(); ++i) {
      const double d = std::log(frames[b + 1].data[i] + eps) -
                       std::log(frames[b].data[i] + eps) -
                       threshold * polarity_maps[b].data[i];
      total += d * d;
    }
  return total;
}

// slices owned by a stream built from per-interval event lists
struct SliceFixture {
  events::EventStream stream;
  std::vector<events::EventSlice> slices;

  // counts[b] > 0 adds that many +1 events (or -1 for negative) per random
  // pixel inside interval b
  static SliceFixture build(int b_frames, int rows, int cols, Philox& rng,
                            int events_per_interval) {
    SliceFixture fx;
    fx.stream.camera.rows = rows;
    fx.stream.camera.cols = cols;
    const std::int64_t interval_us = 1000;
    fx.stream.t_end_us = (b_frames - 1) * interval_us;
    for (int b = 0; b + 1 < b_frames; ++b)
      for (int k = 0; k < events_per_interval; ++k) {
        events::Event e;
        e.t_us = b * interval_us + static_cast<std::int64_t>(rng.uniform() * interval_us);
        e.x = static_cast<std::uint16_t>(rng.next_u32() % cols);
        e.y = static_cast<std::uint16_t>(rng.next_u32() % rows);
        e.p = rng.bernoulli(0.5) ? 1 : -1;
        fx.stream.events.push_back(e);
      }
    std::sort(fx.stream.events.begin(), fx.stream.events.end(),
              [](const events::Event& a, const events::Event& b) { return a.t_us < b.t_us; });
    fx.slices = events::split_by_frames(fx.stream, b_frames, 0.001);
    return fx;
  }
};

}  // namespace

TEST_CASE("tv_denoise with weight zero is the identity") {
  Philox rng(1);
  const Image x = random_image(16, 16, rng);
  CHECK(recon::tv_denoise(x, 0.0, 10) == x);
  CHECK(recon::tv_denoise(x, 0.1, 0) == x);
}

TEST_CASE("tv_denoise leaves constant images unchanged") {
  const Image x(12, 12, 0.42);
  for (double w : {0.01, 0.1, 0.5})
    CHECK(max_abs_diff(recon::tv_denoise(x, w, 20), x) <= 1e-12);
}

TEST_CASE("tv objective never increases with inner iterations") {
  Philox rng(42);
  for (int trial = 0; trial < 6; ++trial) {
    const Image x = random_image(32, 32, rng);
    for (double w : {0.05, 0.1, 0.2}) {
      double prev = recon::tv_objective(x, x, w);  // zero iterations
      for (int iters = 1; iters <= 25; ++iters) {
        const Image u = recon::tv_denoise(x, w, iters);
        const double obj = recon::tv_objective(u, x, w);
        CHECK(obj <= prev + 1e-10);
        prev = obj;
      }
    }
  }
}

TEST_CASE("event gradient vanishes at the consistency optimum") {
  Philox rng(5);
  auto fx = SliceFixture::build(3, 8, 8, rng, 40);
  events::EventCameraModel cam = fx.stream.camera;
  cam.threshold = 0.05;

  std::vector<Image> maps;
  for (const auto& s : fx.slices) maps.push_back(events::accumulate_image(s, 8, 8));

  // construct frames whose log differences equal exactly T * S
  std::vector<Image> frames{random_image(8, 8, rng, 0.3, 0.6)};
  for (int b = 0; b < 2; ++b) {
    Image next(8, 8);
    for (std::size_t i = 0; i < next.size(); ++i)
      next.data[i] = std::exp(std::log(frames[b].data[i] + cam.log_eps) +
                              cam.threshold * maps[b].data[i]) -
                     cam.log_eps;
    frames.push_back(std::move(next));
  }
  const auto grad = recon::event_consistency_grad(frames, fx.slices, cam);
  for (const Image& g : grad)
    for (double v : g.data) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("event gradient matches central finite differences") {
  Philox rng(6);
  auto fx = SliceFixture::build(3, 8, 8, rng, 30);
  events::EventCameraModel cam = fx.stream.camera;
  cam.threshold = 0.1;

  std::vector<Image> maps;
  for (const auto& s : fx.slices) maps.push_back(events::accumulate_image(s, 8, 8));
  std::vector<Image> frames;
  for (int b = 0; b < 3; ++b) frames.push_back(random_image(8, 8, rng, 0.2, 0.9));

  const auto grad = recon::event_consistency_grad(frames, fx.slices, cam);
  const double h = 1e-5;
  double worst_rel = 0.0;
  for (int b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < frames[b].size(); ++i) {
      auto plus = frames, minus = frames;
      plus[b].data[i] += h;
      minus[b].data[i] -= h;
      const double fd = (event_objective(plus, maps, cam.threshold, cam.log_eps) -
                         event_objective(minus, maps, cam.threshold, cam.log_eps)) /
                        (2 * h);
      const double denom = std::max(std::abs(fd), 1e-6);
      worst_rel = std::max(worst_rel, std::abs(grad[b].data[i] - fd) / denom);
    }
  CHECK(worst_rel <= 1e-4);
}

TEST_CASE("event gradient is zero for empty slices and equal frames") {
  events::EventStream stream;
  stream.camera.rows = 4;
  stream.camera.cols = 4;
  stream.t_end_us = 2000;
  const auto slices = events::split_by_frames(stream, 3, 0.001);
  Philox rng(9);
  const Image frame = random_image(4, 4, rng, 0.2, 0.8);
  const std::vector<Image> frames{frame, frame, frame};
  const auto grad = recon::event_consistency_grad(frames, slices, stream.camera);
  for (const Image& g : grad)
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("B=1 identity problem reproduces the measurement") {
  scene::SceneSpec spec;
  spec.kind = scene::SceneKind::gaussian_blob_orbit;
  spec.rows = 32;
  spec.cols = 32;
  spec.count = 1;
  const auto seq = scene::synthesize(spec);
  const auto masks = ones_masks(1, 32, 32);
  const auto snap = sci::encode(seq, masks, 0.0, 0);

  recon::ReconSettings cfg;
  cfg.tv_weight = 0.01;
  cfg.event_weight = 0.0;
  cfg.max_iters = 10;
  const auto result = recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01);
  CHECK(result.report.iterations_run <= 10);
  CHECK(rms_diff(result.frames.frames[0], snap.data) <= 1e-3);
}

TEST_CASE("ground-truth initialization is a fixed point of the bare projector") {
  scene::SceneSpec spec;
  spec.rows = 16;
  spec.cols = 16;
  spec.count = 4;
  const auto seq = scene::synthesize(spec);
  sci::SensorConfig scfg;
  scfg.b = 4;
  scfg.seed = 3;
  const auto masks = sci::generate_masks(scfg, 16, 16);
  const auto snap = sci::encode(seq, masks, 0.0, 0);

  recon::ReconSettings cfg;
  cfg.tv_weight = 0.0;
  cfg.event_weight = 0.0;
  cfg.max_iters = 5;
  for (auto algo : {recon::Algorithm::gap_tv, recon::Algorithm::admm_tv}) {
    cfg.algorithm = algo;
    const auto result =
        recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01, &seq);
    for (int b = 0; b < 4; ++b)
      CHECK(max_abs_diff(result.frames.frames[b], seq.frames[b]) <= 1e-10);
  }
}

TEST_CASE("data residual is non-increasing for the bare projector") {
  scene::SceneSpec spec;
  spec.rows = 16;
  spec.cols = 16;
  spec.count = 4;
  spec.kind = scene::SceneKind::two_object_crossing;
  const auto seq = scene::synthesize(spec);
  sci::SensorConfig scfg;
  scfg.b = 4;
  scfg.seed = 8;
  const auto masks = sci::generate_masks(scfg, 16, 16);
  const auto snap = sci::encode(seq, masks, 0.0, 0);

  recon::ReconSettings cfg;
  cfg.tv_weight = 0.0;
  cfg.event_weight = 0.0;
  cfg.max_iters = 8;
  cfg.tol = 0.0;  // run all iterations
  for (bool accel : {false, true}) {
    cfg.acceleration = accel;
    const auto result = recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01);
    const auto& trace = result.report.residual_trace;
    REQUIRE(trace.size() == 8);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1] + 1e-12);
  }
}

TEST_CASE("reconstruction is deterministic and in range") {
  scene::SceneSpec spec;
  spec.rows = 32;
  spec.cols = 32;
  spec.count = 4;
  const auto seq = scene::synthesize(spec);
  sci::SensorConfig scfg;
  scfg.b = 4;
  scfg.seed = 10;
  const auto masks = sci::generate_masks(scfg, 32, 32);
  const auto snap = sci::encode(seq, masks, 0.0, 0);

  recon::ReconSettings cfg;
  cfg.max_iters = 40;
  cfg.event_weight = 0.0;
  const auto a = recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01);
  const auto b = recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01);
  REQUIRE(a.report.iterations_run == b.report.iterations_run);
  CHECK(a.report.residual_trace == b.report.residual_trace);
  for (int i = 0; i < 4; ++i) {
    CHECK(a.frames.frames[i] == b.frames.frames[i]);
    for (double v : a.frames.frames[i].data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(a.report.final_residual == a.report.residual_trace.back());

  // a modest instance still decodes well above 20 dB
  const auto report = metrics::evaluate_sequence(a.frames, seq);
  CHECK(report.mean_psnr_db >= 20.0);
}

TEST_CASE("admm variant reaches comparable quality") {
  scene::SceneSpec spec;
  spec.rows = 32;
  spec.cols = 32;
  spec.count = 4;
  const auto seq = scene::synthesize(spec);
  sci::SensorConfig scfg;
  scfg.b = 4;
  scfg.seed = 10;
  const auto masks = sci::generate_masks(scfg, 32, 32);
  const auto snap = sci::encode(seq, masks, 0.0, 0);

  recon::ReconSettings cfg;
  cfg.algorithm = recon::Algorithm::admm_tv;
  cfg.max_iters = 60;
  cfg.event_weight = 0.0;
  const auto result = recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01);
  const auto report = metrics::evaluate_sequence(result.frames, seq);
  CHECK(report.mean_psnr_db >= 20.0);
}

TEST_CASE("event fusion does not degrade the paired reconstruction") {
  scene::SceneSpec spec;
  spec.rows = 32;
  spec.cols = 32;
  spec.count = 4;
  spec.velocity = 2.0;
  const auto seq = scene::synthesize(spec);
  events::EventCameraModel cam;
  cam.rows = 32;
  cam.cols = 32;
  const auto stream = events::simulate_events(seq, cam);
  const auto slices = events::split_by_frames(stream, 4, seq.frame_interval_s);

  sci::SensorConfig scfg;
  scfg.b = 4;
  scfg.seed = 12;
  const auto masks = sci::generate_masks(scfg, 32, 32);
  const auto snap = sci::encode(seq, masks, 0.0, 0);

  recon::ReconSettings cfg;
  cfg.event_weight = 0.0;
  const auto plain = recon::reconstruct(snap, masks, {}, cam, cfg, seq.frame_interval_s);
  cfg.event_weight = 0.1;
  const auto fused = recon::reconstruct(snap, masks, slices, cam, cfg, seq.frame_interval_s);

  const double plain_psnr = metrics::evaluate_sequence(plain.frames, seq).mean_psnr_db;
  const double fused_psnr = metrics::evaluate_sequence(fused.frames, seq).mean_psnr_db;
  CHECK(fused_psnr >= plain_psnr);
}

TEST_CASE("non-finite input is reported as divergence with the iteration index") {
  const auto masks = ones_masks(2, 8, 8);
  sci::Snapshot snap;
  snap.data = Image(8, 8, std::numeric_limits<double>::quiet_NaN());
  recon::ReconSettings cfg;
  cfg.event_weight = 0.0;
  try {
    recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01);
    FAIL("expected DivergedError");
  } catch (const DivergedError& e) {
    CHECK(e.iteration == 1);
  }
}

TEST_CASE("normalized snapshots are refused as the data term") {
  const auto masks = ones_masks(1, 8, 8);
  sci::Snapshot snap;
  snap.data = Image(8, 8, 0.5);
  snap.normalized = true;
  recon::ReconSettings cfg;
  CHECK_THROWS_AS(recon::reconstruct(snap, masks, {}, events::EventCameraModel{}, cfg, 0.01),
                  InvalidConfigError);
}

TEST_CASE("slice count must match the frame count") {
  Philox rng(30);
  auto fx = SliceFixture::build(4, 8, 8, rng, 10);
  const auto masks = ones_masks(2, 8, 8);  // B=2 but 3 slices
  sci::Snapshot snap;
  snap.data = Image(8, 8, 0.5);
  recon::ReconSettings cfg;
  cfg.event_weight = 0.1;
  CHECK_THROWS_AS(recon::reconstruct(snap, masks, fx.slices, fx.stream.camera, cfg, 0.01),
                  DimensionMismatchError);
}
