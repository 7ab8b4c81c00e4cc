#include "evsci/cli/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "evsci/metrics/quality.hpp"

namespace evsci::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json_or_throw(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

json read_json_or_missing(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("missing artifact: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw MissingArtifactError("unreadable artifact " + path.string() + ": " + e.what());
  }
}

// every file a command writes is tracked and listed in that command's manifest
struct ArtifactWriter {
  fs::path root;
  std::vector<std::string> files;

  explicit ArtifactWriter(const fs::path& root_) : root(root_) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec && !fs::is_directory(root)) throw IoError("cannot create output dir: " + root.string());
  }

  fs::path track(const std::string& rel) {
    files.push_back(rel);
    return root / rel;
  }

  void track_frames(const std::string& rel, const scene::FrameSequence& seq,
                    scene::FrameFormat format) {
    if (format == scene::FrameFormat::pgm_dir) {
      for (int b = 1; b <= seq.count(); ++b) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s/frame_%06d.pgm", rel.c_str(), b);
        files.push_back(buf);
      }
      files.push_back(rel + "/sequence.json");
      scene::save_frames(seq, root / rel, format);
    } else {
      files.push_back(rel);
      files.push_back(rel + ".json");
      scene::save_frames(seq, root / rel, format);
    }
  }

  void finish(const std::string& manifest_name, json manifest) {
    files.push_back(manifest_name);
    manifest["files"] = files;
    write_json_or_throw(root / manifest_name, manifest);
  }
};

std::string frames_artifact_name(const std::string& stem, scene::FrameFormat format) {
  return format == scene::FrameFormat::pgm_dir ? stem : stem + ".f32";
}

events::EventCameraModel resolve_camera(const PipelineConfig& cfg, int rows, int cols) {
  events::EventCameraModel cam = cfg.camera;
  cam.rows = cfg.camera_rows > 0 ? cfg.camera_rows : rows;
  cam.cols = cfg.camera_cols > 0 ? cfg.camera_cols : cols;
  return cam;
}

scene::FrameSequence obtain_scene(const PipelineConfig& cfg) {
  if (cfg.scene_input) {
    scene::FrameSequence seq = scene::load_frames(*cfg.scene_input, cfg.scene_input_format);
    if (cfg.scene_frame_interval_s > 0.0) seq.frame_interval_s = cfg.scene_frame_interval_s;
    scene::validate(seq);
    return seq;
  }
  scene::SceneSpec spec = cfg.scene;
  spec.seed = cfg.seed;
  spec.frame_interval_s = cfg.scene_frame_interval_s > 0.0
                              ? cfg.scene_frame_interval_s
                              : 1.0 / (cfg.sensor.frame_rate * spec.count);
  return scene::synthesize(spec);
}

struct SimulateInfo {
  int b = 0;
  int stride = 1;
  int scene_count = 0;
  double scene_interval_s = 0.0;
  double encoded_interval_s = 0.0;
  std::string frames_name;
  std::string events_name;
  scene::FrameFormat frame_format = scene::FrameFormat::pgm_dir;
  events::EventFormat events_format = events::EventFormat::bin16;
};

SimulateInfo read_simulate_info(const fs::path& root) {
  const json m = read_json_or_missing(root / "manifest_simulate.json");
  SimulateInfo info;
  try {
    info.b = m.at("encode").at("b").get<int>();
    info.stride = m.at("encode").at("stride").get<int>();
    info.scene_count = m.at("encode").at("scene_count").get<int>();
    info.scene_interval_s = m.at("encode").at("scene_frame_interval_s").get<double>();
    info.encoded_interval_s = m.at("encode").at("encoded_frame_interval_s").get<double>();
    info.frames_name = m.at("artifacts").at("ground_truth").get<std::string>();
    info.events_name = m.at("artifacts").at("events").get<std::string>();
    info.frame_format = scene::parse_frame_format(m.at("io").at("frame_format").get<std::string>());
    info.events_format =
        events::parse_event_format(m.at("io").at("events_format").get<std::string>());
  } catch (const json::exception& e) {
    throw MissingArtifactError("manifest_simulate.json is incomplete under " + root.string() +
                               ": " + e.what());
  }
  return info;
}

sci::MaskStack load_masks_artifact(const fs::path& root) {
  try {
    return sci::load_masks(root / "masks.bits");
  } catch (const std::exception& e) {
    throw MissingArtifactError("cannot load mask artifact " + (root / "masks.bits").string() +
                               ": " + e.what());
  }
}

sci::Snapshot load_snapshot_artifact(const fs::path& root) {
  try {
    return sci::load_snapshot(root / "snapshot.f32");
  } catch (const std::exception& e) {
    throw MissingArtifactError("cannot load snapshot artifact " +
                               (root / "snapshot.f32").string() + ": " + e.what());
  }
}

events::EventStream load_events_artifact(const fs::path& root, const SimulateInfo& info) {
  try {
    return events::read_events(root / info.events_name, info.events_format);
  } catch (const std::exception& e) {
    throw MissingArtifactError("cannot load event artifact " +
                               (root / info.events_name).string() + ": " + e.what());
  }
}

scene::FrameSequence load_gt_artifact(const fs::path& root, const SimulateInfo& info) {
  return scene::load_frames(root / info.frames_name, info.frame_format);
}

scene::FrameSequence load_recon_artifact(const fs::path& root) {
  const json m = read_json_or_missing(root / "manifest_reconstruct.json");
  try {
    const std::string name = m.at("artifacts").at("recon_frames").get<std::string>();
    const auto format = scene::parse_frame_format(m.at("io").at("frame_format").get<std::string>());
    return scene::load_frames(root / name, format);
  } catch (const json::exception& e) {
    throw MissingArtifactError("manifest_reconstruct.json is incomplete under " + root.string() +
                               ": " + e.what());
  }
}

}  // namespace

void cmd_simulate(const PipelineConfig& cfg) {
  if (cfg.scene.count < 1) throw InvalidConfigError("simulate: scene count must be >= 1");
  sci::SensorConfig sensor = cfg.sensor;
  sensor.seed = cfg.seed;
  sci::validate(sensor);
  if (cfg.scene.count < sensor.b)
    throw InvalidConfigError("simulate: scene count must be >= sensor B");

  const scene::FrameSequence seq = obtain_scene(cfg);
  const events::EventCameraModel cam = resolve_camera(cfg, seq.rows(), seq.cols());

  // encode every stride-th frame (one snapshot at compression ratio B); the
  // events keep running over the full scene
  const int stride = seq.count() / sensor.b;
  scene::FrameSequence encoded;
  encoded.frame_interval_s = stride * seq.frame_interval_s;
  std::vector<int> encoded_indices;
  for (int i = 0; i < sensor.b; ++i) {
    encoded_indices.push_back(i * stride);
    encoded.frames.push_back(seq.frames[i * stride]);
  }

  const sci::MaskStack masks = sci::generate_masks(sensor, seq.rows(), seq.cols());
  const sci::Snapshot snapshot = sci::encode(encoded, masks, sensor.noise_sigma, cfg.seed);
  const events::EventStream stream =
      seq.count() >= 2 ? events::simulate_events(seq, cam) : events::EventStream{
        {}, cam, 0, 0, 0};

  ArtifactWriter writer(cfg.output_dir);
  const std::string frames_name = frames_artifact_name("ground_truth", cfg.frame_format);
  writer.track_frames(frames_name, seq, cfg.frame_format);

  sci::save_masks(masks, writer.track("masks.bits"));
  writer.track("masks.bits.json");
  sci::save_snapshot(snapshot, writer.track("snapshot.f32"));
  writer.track("snapshot.f32.json");

  const std::string events_name =
      cfg.events_format == events::EventFormat::bin16 ? "events.bin16" : "events.csv";
  events::write_events(stream, writer.track(events_name), cfg.events_format);
  writer.track(events_name + ".json");

  json manifest{
      {"command", "simulate"},
      {"seed", cfg.seed},
      {"scene",
       {{"kind", cfg.scene_input ? "external" : scene_kind_name(cfg.scene.kind)},
        {"rows", seq.rows()},
        {"cols", seq.cols()}}},
      {"encode",
       {{"b", sensor.b},
        {"stride", stride},
        {"encoded_frame_indices", encoded_indices},
        {"scene_count", seq.count()},
        {"scene_frame_interval_s", seq.frame_interval_s},
        {"encoded_frame_interval_s", encoded.frame_interval_s},
        {"noise_sigma", sensor.noise_sigma}}},
      {"camera",
       {{"T", cam.threshold}, {"log_eps", cam.log_eps}, {"rows", cam.rows}, {"cols", cam.cols}}},
      {"artifacts",
       {{"ground_truth", frames_name},
        {"masks", "masks.bits"},
        {"snapshot", "snapshot.f32"},
        {"events", events_name}}},
      {"io",
       {{"frame_format", scene::frame_format_name(cfg.frame_format)},
        {"events_format", events::event_format_name(cfg.events_format)}}}};
  writer.finish("manifest_simulate.json", std::move(manifest));
}

void cmd_reconstruct(const PipelineConfig& cfg) {
  const fs::path root = cfg.output_dir;
  const SimulateInfo info = read_simulate_info(root);
  const sci::MaskStack masks = load_masks_artifact(root);
  const sci::Snapshot snapshot = load_snapshot_artifact(root);

  recon::ReconSettings settings = cfg.recon;
  const bool use_events = !cfg.no_events && settings.event_weight > 0.0 && info.b >= 2;
  if (!use_events) settings.event_weight = 0.0;

  events::EventStream stream;
  std::vector<events::EventSlice> slices;
  if (use_events) {
    stream = load_events_artifact(root, info);
    slices = events::split_by_frames(stream, info.b, info.encoded_interval_s);
  }

  ArtifactWriter writer(cfg.output_dir);

  const auto result = recon::reconstruct(snapshot, masks, slices, stream.camera, settings,
                                         info.encoded_interval_s);
  const std::string recon_name = frames_artifact_name("recon", info.frame_format);
  writer.track_frames(recon_name, result.frames, info.frame_format);

  json report{{"command", "reconstruct"},
              {"algorithm", recon::algorithm_name(settings.algorithm)},
              {"mode", use_events ? "fused" : "intensity-only"},
              {"event_weight", settings.event_weight},
              {"tv_weight", settings.tv_weight},
              {"iterations_run", result.report.iterations_run},
              {"final_residual", result.report.final_residual},
              {"residual_trace", result.report.residual_trace}};
  write_json_or_throw(writer.track("recon_report.json"), report);
  std::cout << "reconstruct: " << result.report.iterations_run << " iterations, residual "
            << result.report.final_residual << ", " << result.report.wall_time_s << " s\n";

  json manifest{{"command", "reconstruct"},
                {"artifacts", {{"recon_frames", recon_name}, {"report", "recon_report.json"}}},
                {"io", {{"frame_format", scene::frame_format_name(info.frame_format)}}}};

  // metrics against the encoded ground-truth frames when they are present
  if (fs::exists(root / info.frames_name)) {
    const scene::FrameSequence gt = load_gt_artifact(root, info);
    scene::FrameSequence gt_encoded;
    gt_encoded.frame_interval_s = info.encoded_interval_s;
    for (int i = 0; i < info.b; ++i) gt_encoded.frames.push_back(gt.frames[i * info.stride]);
    const metrics::MetricReport mr = metrics::evaluate_sequence(result.frames, gt_encoded);
    metrics::save_report_json(mr, writer.track("recon_metrics.json"));
    manifest["artifacts"]["metrics"] = "recon_metrics.json";
    std::cout << "reconstruct: mean PSNR " << mr.mean_psnr_db << " dB, mean SSIM " << mr.mean_ssim
              << "\n";
  }

  writer.finish("manifest_reconstruct.json", std::move(manifest));
}

void cmd_densify(const PipelineConfig& cfg) {
  const fs::path root = cfg.output_dir;
  const SimulateInfo info = read_simulate_info(root);
  const scene::FrameSequence recon_frames = load_recon_artifact(root);
  const events::EventStream stream = load_events_artifact(root, info);

  if (cfg.interp_n_out < recon_frames.count())
    throw InvalidConfigError("densify: n_out must be >= the reconstructed frame count");

  const scene::FrameSequence dense = interp::densify(recon_frames, stream, cfg.interp_n_out,
                                                     stream.camera, cfg.interp_blend);
  const std::vector<std::int64_t> ts =
      interp::densify_timestamps(recon_frames, stream, cfg.interp_n_out);

  ArtifactWriter writer(cfg.output_dir);
  const std::string dense_name = frames_artifact_name("dense", info.frame_format);
  writer.track_frames(dense_name, dense, info.frame_format);

  json ts_manifest{{"command", "densify"},
                   {"blend", interp::blend_name(cfg.interp_blend)},
                   {"n_out", cfg.interp_n_out},
                   {"timestamps_us", ts}};
  write_json_or_throw(writer.track("dense_timestamps.json"), ts_manifest);

  json manifest{{"command", "densify"},
                {"artifacts",
                 {{"dense_frames", dense_name}, {"timestamps", "dense_timestamps.json"}}},
                {"io", {{"frame_format", scene::frame_format_name(info.frame_format)}}}};

  // per-frame PSNR/SSIM against the nearest ground-truth frame in time
  if (fs::exists(root / info.frames_name)) {
    const scene::FrameSequence gt = load_gt_artifact(root, info);
    json table = json::array();
    for (int i = 0; i < dense.count(); ++i) {
      const double gt_pos = static_cast<double>(ts[i] - stream.sync_t_us) /
                            (info.scene_interval_s * 1e6);
      const int nearest = std::clamp(static_cast<int>(std::llround(gt_pos)), 0, gt.count() - 1);
      const double p = metrics::psnr(dense.frames[i], gt.frames[nearest]);
      const double s = metrics::ssim(dense.frames[i], gt.frames[nearest]);
      table.push_back(json{{"frame", i},
                           {"t_us", ts[i]},
                           {"nearest_gt", nearest},
                           {"psnr_db", std::isinf(p) ? json(nullptr) : json(p)},
                           {"ssim", s}});
    }
    write_json_or_throw(writer.track("dense_metrics.json"), json{{"per_frame", table}});
    manifest["artifacts"]["metrics"] = "dense_metrics.json";
  }

  writer.finish("manifest_densify.json", std::move(manifest));
}

void cmd_evaluate(const fs::path& pred, scene::FrameFormat pred_format, const fs::path& gt,
                  scene::FrameFormat gt_format, const fs::path& report_path) {
  const scene::FrameSequence pred_seq = scene::load_frames(pred, pred_format);
  const scene::FrameSequence gt_seq = scene::load_frames(gt, gt_format);
  const metrics::MetricReport report = metrics::evaluate_sequence(pred_seq, gt_seq);
  metrics::save_report_json(report, report_path);
  std::cout << "evaluate: mean PSNR " << report.mean_psnr_db << " dB, mean SSIM "
            << report.mean_ssim << " over " << report.frame_count << " frames\n";
}

void cmd_register(const PipelineConfig& cfg) {
  const fs::path root = cfg.output_dir;
  const SimulateInfo info = read_simulate_info(root);
  const sci::MaskStack masks = load_masks_artifact(root);
  const sci::Snapshot snapshot = load_snapshot_artifact(root);
  const events::EventStream stream = load_events_artifact(root, info);

  const sci::Snapshot normalized = sci::normalize_measurement(snapshot, masks);
  const Image target_full = reg::gradient_magnitude(normalized.data);

  // accumulated event image over the whole exposure, resized to the
  // intensity geometry
  const auto exposure = events::slice_interval(stream, stream.t_start_us, stream.t_end_us + 1);
  Image event_img = events::accumulate_image(exposure, stream.camera.rows, stream.camera.cols);
  if (event_img.rows != target_full.rows || event_img.cols != target_full.cols)
    event_img = resize_bilinear(event_img, target_full.rows, target_full.cols);

  const int patch = std::min({cfg.registration.patch_size, target_full.rows, target_full.cols});
  if (patch < 32) throw InvalidConfigError("register: patches must be at least 32x32");

  std::vector<reg::RegistrationResult> results;
  for (int oy = 0; oy + patch <= target_full.rows; oy += patch) {
    for (int ox = 0; ox + patch <= target_full.cols; ox += patch) {
      Image fixed_patch(patch, patch), moving_patch(patch, patch);
      for (int r = 0; r < patch; ++r)
        for (int c = 0; c < patch; ++c) {
          fixed_patch.at(r, c) = target_full.at(oy + r, ox + c);
          moving_patch.at(r, c) = event_img.at(oy + r, ox + c);
        }
      try {
        reg::RegistrationResult res =
            reg::estimate_similarity(moving_patch, fixed_patch, cfg.registration.search);
        res.patch_origin_x = ox;
        res.patch_origin_y = oy;
        results.push_back(res);
      } catch (const NoSignalError&) {
        // flat patch: nothing to align here
      }
    }
  }

  ArtifactWriter writer(cfg.output_dir);
  reg::save_registration_json(results, writer.track("registration.json"));

  // warp each whole-frame-interval voxel grid into intensity geometry with
  // its patch transform (identity where no patch covered the pixel)
  const auto slices = events::split_by_frames(stream, info.b, info.encoded_interval_s);
  json voxel_files = json::array();
  for (std::size_t si = 0; si < slices.size(); ++si) {
    events::EventVoxelGrid grid =
        events::voxelize(slices[si], 5, stream.camera.rows, stream.camera.cols);
    if (grid.rows() != target_full.rows || grid.cols() != target_full.cols)
      for (Image& bin : grid.bins) bin = resize_bilinear(bin, target_full.rows, target_full.cols);

    events::EventVoxelGrid warped = grid;
    for (const reg::RegistrationResult& res : results) {
      events::EventVoxelGrid patch_grid;
      patch_grid.t_a_us = grid.t_a_us;
      patch_grid.t_b_us = grid.t_b_us;
      for (const Image& bin : grid.bins) {
        Image p(res.patch_rows, res.patch_cols);
        for (int r = 0; r < res.patch_rows; ++r)
          for (int c = 0; c < res.patch_cols; ++c)
            p.at(r, c) = bin.at(res.patch_origin_y + r, res.patch_origin_x + c);
        patch_grid.bins.push_back(std::move(p));
      }
      const events::EventVoxelGrid aligned =
          reg::warp_voxels(patch_grid, res.transform, res.patch_rows, res.patch_cols);
      for (std::size_t b = 0; b < warped.bins.size(); ++b)
        for (int r = 0; r < res.patch_rows; ++r)
          for (int c = 0; c < res.patch_cols; ++c)
            warped.bins[b].at(res.patch_origin_y + r, res.patch_origin_x + c) =
                aligned.bins[b].at(r, c);
    }

    char name[64];
    std::snprintf(name, sizeof(name), "voxels_warped_%03zu.f32", si);
    events::save_voxels(warped, writer.track(name));
    writer.track(std::string(name) + ".json");
    voxel_files.push_back(name);
  }

  json manifest{{"command", "register"},
                {"patch_size", patch},
                {"patches_registered", results.size()},
                {"artifacts",
                 {{"registration", "registration.json"}, {"warped_voxels", voxel_files}}}};
  writer.finish("manifest_register.json", std::move(manifest));
  std::cout << "register: " << results.size() << " patch transform(s) estimated\n";
}

void cmd_events_convert(const fs::path& in, events::EventFormat in_format, const fs::path& out,
                        events::EventFormat out_format) {
  const events::EventStream stream = events::read_events(in, in_format);
  events::write_events(stream, out, out_format);
  std::cout << "events: wrote " << stream.events.size() << " events to " << out.string() << "\n";
}

}  // namespace evsci::cli
