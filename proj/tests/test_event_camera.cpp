#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "evsci/events/camera.hpp"
#include "evsci/events/stream_io.hpp"
#include "evsci/scene/scene.hpp"

using namespace evsci;
namespace fs = std::filesystem;

namespace {

events::EventCameraModel camera_for(const scene::FrameSequence& seq, double threshold) {
  events::EventCameraModel cam;
  cam.threshold = threshold;
  cam.rows = seq.rows();
  cam.cols = seq.cols();
  return cam;
}

scene::FrameSequence single_pixel_sequence(std::initializer_list<double> values) {
  scene::FrameSequence seq;
  seq.frame_interval_s = 0.001;
  for (double v : values) seq.frames.push_back(Image(1, 1, v));
  return seq;
}

// ground-truth final log intensity vs the event-integrated one, per pixel
double max_log_error(const scene::FrameSequence& seq, const events::EventStream& stream) {
  const auto& cam = stream.camera;
  std::vector<double> delta(seq.frames[0].size(), 0.0);
  for (const events::Event& e : stream.events)
    delta[static_cast<std::size_t>(e.y) * seq.cols() + e.x] +=
        e.p > 0 ? cam.pos() : -cam.neg();
  double worst = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double integrated = std::log(seq.frames.front().data[i] + cam.log_eps) + delta[i];
    const double truth = std::log(seq.frames.back().data[i] + cam.log_eps);
    worst = std::max(worst, std::abs(truth - integrated));
  }
  return worst;
}

}  // namespace

TEST_CASE("constant sequence emits no events") {
  scene::FrameSequence seq;
  seq.frame_interval_s = 0.01;
  for (int i = 0; i < 5; ++i) seq.frames.push_back(Image(4, 4, 0.6));
  const auto stream = events::simulate_events(seq, camera_for(seq, 0.15));
  CHECK(stream.events.empty());
  CHECK(stream.sync_t_us == 0);
  CHECK(stream.t_end_us == events::frame_time_us(4, 0.01));
}

TEST_CASE("a 0.4 to 0.8 step with T=0.1 fires exactly six positive events") {
  // log(0.801/0.401) = 0.6919, floor against T=0.1 with reference updates
  const auto seq = single_pixel_sequence({0.4, 0.8});
  const auto stream = events::simulate_events(seq, camera_for(seq, 0.1));
  REQUIRE(stream.events.size() == 6);
  for (const auto& e : stream.events) {
    CHECK(e.p == 1);
    CHECK(e.x == 0);
    CHECK(e.y == 0);
  }
  // crossing times are interior and strictly increasing
  for (std::size_t i = 1; i < stream.events.size(); ++i)
    CHECK(stream.events[i].t_us > stream.events[i - 1].t_us);
  CHECK(stream.events.front().t_us >= 0);
  CHECK(stream.events.back().t_us <= 1000);
}

TEST_CASE("a decreasing ramp emits only negative polarity") {
  const auto seq = single_pixel_sequence({0.8, 0.6, 0.4, 0.2});
  const auto stream = events::simulate_events(seq, camera_for(seq, 0.05));
  CHECK(stream.events.size() > 0);
  for (const auto& e : stream.events) CHECK(e.p == -1);
}

TEST_CASE("integrate_events inverts the threshold model") {
  events::EventCameraModel cam;
  cam.log_eps = 1e-3;

  SUBCASE("no events returns the input intensity") {
    cam.threshold = 0.15;
    CHECK(events::integrate_events(0.35, {}, cam) == doctest::Approx(0.35).epsilon(1e-12));
  }
  SUBCASE("two positive events follow the closed form") {
    cam.threshold = 0.2;
    const double i0 = 0.4 - cam.log_eps;  // so I0 + eps = 0.4
    const std::vector<std::int8_t> pols{1, 1};
    const double expected = 0.4 * std::exp(0.4) - cam.log_eps;
    CHECK(events::integrate_events(i0, pols, cam) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("clamping keeps the output in [0,1]") {
    cam.threshold = 2.0;
    const std::vector<std::int8_t> up{1, 1, 1};
    CHECK(events::integrate_events(0.9, up, cam) == 1.0);
    const std::vector<std::int8_t> down{-1, -1, -1};
    CHECK(events::integrate_events(0.1, down, cam) == 0.0);
  }
  SUBCASE("negative intensity is rejected") {
    CHECK_THROWS_AS(events::integrate_events(-0.1, {}, cam), InvalidConfigError);
  }
}

TEST_CASE("simulate-then-integrate lands within one threshold of the truth") {
  for (auto kind : {scene::SceneKind::translating_square, scene::SceneKind::gaussian_blob_orbit}) {
    scene::SceneSpec spec;
    spec.kind = kind;
    spec.rows = 32;
    spec.cols = 32;
    spec.count = 8;
    spec.velocity = 1.5;
    spec.seed = 5;
    const auto seq = scene::synthesize(spec);
    for (double threshold : {0.05, 0.15, 0.3}) {
      const auto stream = events::simulate_events(seq, camera_for(seq, threshold));
      CHECK(max_log_error(seq, stream) <= threshold + 1e-9);
    }
  }
}

TEST_CASE("faster motion over the same path never loses events") {
  scene::SceneSpec slow;
  slow.kind = scene::SceneKind::translating_square;
  slow.rows = 48;
  slow.cols = 48;
  slow.velocity = 1.0;
  slow.count = 9;  // 8 px of travel
  scene::SceneSpec fast = slow;
  fast.velocity = 2.0;
  fast.count = 5;  // same 8 px of travel

  const auto slow_seq = scene::synthesize(slow);
  const auto fast_seq = scene::synthesize(fast);
  const auto slow_stream = events::simulate_events(slow_seq, camera_for(slow_seq, 0.15));
  const auto fast_stream = events::simulate_events(fast_seq, camera_for(fast_seq, 0.15));
  CHECK(fast_stream.events.size() >= slow_stream.events.size());
}

TEST_CASE("event output is sorted and reproducible") {
  scene::SceneSpec spec;
  spec.kind = scene::SceneKind::two_object_crossing;
  spec.rows = 32;
  spec.cols = 32;
  spec.count = 6;
  const auto seq = scene::synthesize(spec);
  const auto a = events::simulate_events(seq, camera_for(seq, 0.1));
  const auto b = events::simulate_events(seq, camera_for(seq, 0.1));
  REQUIRE(a.events.size() == b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) CHECK(a.events[i] == b.events[i]);
  for (std::size_t i = 1; i < a.events.size(); ++i)
    CHECK(a.events[i].t_us >= a.events[i - 1].t_us);
}

TEST_CASE("resolution mismatch is rejected") {
  const auto seq = single_pixel_sequence({0.2, 0.8});
  events::EventCameraModel cam;
  cam.rows = 2;
  cam.cols = 2;
  CHECK_THROWS_AS(events::simulate_events(seq, cam), DimensionMismatchError);
}

TEST_CASE("asymmetric threshold hook changes only its polarity") {
  const auto seq = single_pixel_sequence({0.4, 0.8, 0.4});
  events::EventCameraModel cam = camera_for(seq, 0.1);
  cam.threshold_neg = 0.19;  // positives keep T=0.1
  const auto stream = events::simulate_events(seq, cam);
  int pos = 0, neg = 0;
  for (const auto& e : stream.events) (e.p > 0 ? pos : neg)++;
  CHECK(pos == 6);
  CHECK(neg == 3);  // floor(0.6919 / 0.19) against the widened negative threshold
}

TEST_CASE("bin16 and csv round trips are lossless") {
  scene::SceneSpec spec;
  spec.kind = scene::SceneKind::rotating_bar;
  spec.rows = 24;
  spec.cols = 24;
  spec.count = 5;
  spec.velocity = 0.2;
  const auto seq = scene::synthesize(spec);
  const auto stream = events::simulate_events(seq, camera_for(seq, 0.12));
  REQUIRE(stream.events.size() > 0);

  const fs::path dir = fs::temp_directory_path() / "evsci_events_io";
  fs::remove_all(dir);
  fs::create_directories(dir);

  for (auto format : {events::EventFormat::bin16, events::EventFormat::csv}) {
    const fs::path path =
        dir / (format == events::EventFormat::bin16 ? "e.bin16" : "e.csv");
    events::write_events(stream, path, format);
    const auto loaded = events::read_events(path, format);
    REQUIRE(loaded.events.size() == stream.events.size());
    for (std::size_t i = 0; i < stream.events.size(); ++i)
      CHECK(loaded.events[i] == stream.events[i]);
    CHECK(loaded.sync_t_us == stream.sync_t_us);
    CHECK(loaded.t_start_us == stream.t_start_us);
    CHECK(loaded.t_end_us == stream.t_end_us);
    CHECK(loaded.camera.threshold == doctest::Approx(stream.camera.threshold));
    CHECK(loaded.camera.rows == stream.camera.rows);
    CHECK(loaded.camera.cols == stream.camera.cols);
  }
  fs::remove_all(dir);
}

TEST_CASE("an empty stream writes a valid zero-record file") {
  events::EventStream stream;
  stream.camera.rows = 4;
  stream.camera.cols = 4;
  const fs::path dir = fs::temp_directory_path() / "evsci_events_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  events::write_events(stream, dir / "e.bin16", events::EventFormat::bin16);
  CHECK(fs::file_size(dir / "e.bin16") == 0);
  const auto loaded = events::read_events(dir / "e.bin16", events::EventFormat::bin16);
  CHECK(loaded.events.empty());
  fs::remove_all(dir);
}

TEST_CASE("truncated bin16 records are malformed") {
  events::EventStream stream;
  stream.camera.rows = 4;
  stream.camera.cols = 4;
  stream.events.push_back(events::Event{100, 1, 2, 1});
  const fs::path dir = fs::temp_directory_path() / "evsci_events_trunc";
  fs::remove_all(dir);
  fs::create_directories(dir);
  events::write_events(stream, dir / "e.bin16", events::EventFormat::bin16);
  fs::resize_file(dir / "e.bin16", 9);
  CHECK_THROWS_AS(events::read_events(dir / "e.bin16", events::EventFormat::bin16),
                  MalformedRecordError);

  // csv with a bad row
  {
    std::ofstream out(dir / "bad.csv");
    out << "t,x,y,p\n1,2,3,5\n";
  }
  events::write_events(stream, dir / "ok.csv", events::EventFormat::csv);
  fs::copy(dir / "ok.csv.json", dir / "bad.csv.json");
  CHECK_THROWS_AS(events::read_events(dir / "bad.csv", events::EventFormat::csv),
                  MalformedRecordError);
  fs::remove_all(dir);
}
