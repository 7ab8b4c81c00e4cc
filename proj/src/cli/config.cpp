#include "evsci/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace evsci::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfigError("config: " + key + " expects a number, got '" + value + "'");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw InvalidConfigError("config: " + key + " expects an integer, got '" + value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidConfigError("config: " + key + " expects true/false, got '" + value + "'");
}

}  // namespace

scene::SceneKind parse_scene_kind(const std::string& name) {
  if (name == "translating_square") return scene::SceneKind::translating_square;
  if (name == "rotating_bar") return scene::SceneKind::rotating_bar;
  if (name == "gaussian_blob_orbit") return scene::SceneKind::gaussian_blob_orbit;
  if (name == "two_object_crossing") return scene::SceneKind::two_object_crossing;
  throw InvalidConfigError("unknown scene kind: " + name);
}

std::string scene_kind_name(scene::SceneKind kind) {
  switch (kind) {
    case scene::SceneKind::translating_square: return "translating_square";
    case scene::SceneKind::rotating_bar: return "rotating_bar";
    case scene::SceneKind::gaussian_blob_orbit: return "gaussian_blob_orbit";
    case scene::SceneKind::two_object_crossing: return "two_object_crossing";
  }
  return "translating_square";
}

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw InvalidConfigError("config line " + std::to_string(line_no) +
                                 ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));
    if (key.empty())
      throw InvalidConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = value;
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

std::pair<std::string, std::string> parse_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw InvalidConfigError("--set expects section.key=value, got '" + kv + "'");
  return {trim(kv.substr(0, eq)), unquote(trim(kv.substr(eq + 1)))};
}

void apply_key(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "output_dir") cfg.output_dir = value;

  else if (key == "scene.kind") cfg.scene.kind = parse_scene_kind(value);
  else if (key == "scene.rows") cfg.scene.rows = static_cast<int>(to_int(key, value));
  else if (key == "scene.cols") cfg.scene.cols = static_cast<int>(to_int(key, value));
  else if (key == "scene.count") cfg.scene.count = static_cast<int>(to_int(key, value));
  else if (key == "scene.velocity") cfg.scene.velocity = to_double(key, value);
  else if (key == "scene.background") cfg.scene.background = to_double(key, value);
  else if (key == "scene.foreground") cfg.scene.foreground = to_double(key, value);
  else if (key == "scene.frame_interval_s") cfg.scene_frame_interval_s = to_double(key, value);
  else if (key == "scene.input") cfg.scene_input = value;
  else if (key == "scene.input_format") cfg.scene_input_format = scene::parse_frame_format(value);

  else if (key == "sensor.b") cfg.sensor.b = static_cast<int>(to_int(key, value));
  else if (key == "sensor.mask_density") cfg.sensor.mask_density = to_double(key, value);
  else if (key == "sensor.noise_sigma") cfg.sensor.noise_sigma = to_double(key, value);
  else if (key == "sensor.frame_rate") cfg.sensor.frame_rate = to_double(key, value);

  else if (key == "camera.threshold") cfg.camera.threshold = to_double(key, value);
  else if (key == "camera.log_eps") cfg.camera.log_eps = to_double(key, value);
  else if (key == "camera.rows") cfg.camera_rows = static_cast<int>(to_int(key, value));
  else if (key == "camera.cols") cfg.camera_cols = static_cast<int>(to_int(key, value));
  else if (key == "camera.timestamp_resolution_us")
    cfg.camera.timestamp_resolution_us = to_int(key, value);
  else if (key == "camera.threshold_pos") cfg.camera.threshold_pos = to_double(key, value);
  else if (key == "camera.threshold_neg") cfg.camera.threshold_neg = to_double(key, value);

  else if (key == "recon.algorithm") cfg.recon.algorithm = recon::parse_algorithm(value);
  else if (key == "recon.max_iters") cfg.recon.max_iters = static_cast<int>(to_int(key, value));
  else if (key == "recon.tol") cfg.recon.tol = to_double(key, value);
  else if (key == "recon.tv_weight") cfg.recon.tv_weight = to_double(key, value);
  else if (key == "recon.tv_inner_iters")
    cfg.recon.tv_inner_iters = static_cast<int>(to_int(key, value));
  else if (key == "recon.event_weight") cfg.recon.event_weight = to_double(key, value);
  else if (key == "recon.admm_rho") cfg.recon.admm_rho = to_double(key, value);
  else if (key == "recon.acceleration") cfg.recon.acceleration = to_bool(key, value);

  else if (key == "interp.n_out") cfg.interp_n_out = static_cast<int>(to_int(key, value));
  else if (key == "interp.blend") cfg.interp_blend = interp::parse_blend(value);

  else if (key == "registration.enabled") cfg.registration.enabled = to_bool(key, value);
  else if (key == "registration.patch_size")
    cfg.registration.patch_size = static_cast<int>(to_int(key, value));

  else if (key == "io.frame_format") cfg.frame_format = scene::parse_frame_format(value);
  else if (key == "io.events_format") cfg.events_format = events::parse_event_format(value);

  else throw InvalidConfigError("config: unknown key '" + key + "'");
}

PipelineConfig build_config(const KeyValues& file_kv, const KeyValues& overrides) {
  PipelineConfig cfg;
  for (const auto& [k, v] : file_kv) apply_key(cfg, k, v);
  for (const auto& [k, v] : overrides) apply_key(cfg, k, v);
  return cfg;
}

}  // namespace evsci::cli
