#pragma once

#include <map>
#include <optional>
#include <string>

#include "evsci/events/camera.hpp"
#include "evsci/events/stream_io.hpp"
#include "evsci/interp/interpolate.hpp"
#include "evsci/recon/solver.hpp"
#include "evsci/reg/similarity.hpp"
#include "evsci/scene/frame_io.hpp"
#include "evsci/sci/forward.hpp"

namespace evsci::cli {

struct RegistrationOptions {
  bool enabled = false;
  int patch_size = 128;
  reg::SimilaritySearchConfig search;
};

struct PipelineConfig {
  scene::SceneSpec scene;
  // 0 = derive 1/(frame_rate * count) so the scene spans one snapshot exposure
  double scene_frame_interval_s = 0.0;
  std::optional<std::string> scene_input;
  scene::FrameFormat scene_input_format = scene::FrameFormat::pgm_dir;

  sci::SensorConfig sensor;

  events::EventCameraModel camera;
  // 0 = camera resolution follows the scene dims
  int camera_rows = 0;
  int camera_cols = 0;

  recon::ReconSettings recon;

  int interp_n_out = 16;
  interp::BlendMode interp_blend = interp::BlendMode::linear_time;

  RegistrationOptions registration;

  std::string output_dir = "out";
  std::uint64_t seed = 1;
  bool no_events = false;
  scene::FrameFormat frame_format = scene::FrameFormat::pgm_dir;
  events::EventFormat events_format = events::EventFormat::bin16;
};

using KeyValues = std::map<std::string, std::string>;

// Minimal TOML subset: [section] headers, `key = value` pairs, `#` comments,
// quoted strings, numbers and booleans. Keys flatten to `section.key`.
KeyValues parse_config_text(const std::string& text);
KeyValues load_config_file(const std::string& path);

// `key=value` as accepted by --set; returns the parsed pair.
std::pair<std::string, std::string> parse_override(const std::string& kv);

// Unknown keys and malformed values raise InvalidConfigError.
void apply_key(PipelineConfig& cfg, const std::string& key, const std::string& value);
PipelineConfig build_config(const KeyValues& file_kv, const KeyValues& overrides);

scene::SceneKind parse_scene_kind(const std::string& name);
std::string scene_kind_name(scene::SceneKind kind);

}  // namespace evsci::cli
