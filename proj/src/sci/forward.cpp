#include "evsci/sci/forward.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "evsci/core/rng.hpp"

namespace evsci::sci {

namespace fs = std::filesystem;
using nlohmann::json;

Image MaskStack::per_pixel_sum() const {
  Image sum(rows(), cols());
  for (const Image& m : masks)
    for (std::size_t i = 0; i < sum.size(); ++i) sum.data[i] += m.data[i];
  return sum;
}

void validate(const SensorConfig& cfg) {
  if (cfg.b < 1 || cfg.b > 64)
    throw InvalidConfigError("sensor: B must be in [1, 64]");
  if (!(cfg.mask_density > 0.0 && cfg.mask_density < 1.0))
    throw InvalidConfigError("sensor: mask_density must lie in the open interval (0, 1)");
  if (cfg.noise_sigma < 0.0)
    throw InvalidConfigError("sensor: noise_sigma must be >= 0");
  if (cfg.frame_rate <= 0.0)
    throw InvalidConfigError("sensor: frame_rate must be positive");
}

MaskStack generate_masks(const SensorConfig& cfg, int rows, int cols) {
  validate(cfg);
  if (rows < 1 || cols < 1) throw InvalidConfigError("generate_masks: dims must be positive");
  Philox rng(derive_seed(cfg.seed, "sci_forward.masks"));
  MaskStack stack;
  stack.seed = cfg.seed;
  stack.density = cfg.mask_density;
  stack.masks.reserve(cfg.b);
  for (int b = 0; b < cfg.b; ++b) {
    Image m(rows, cols);
    for (double& v : m.data) v = rng.bernoulli(cfg.mask_density) ? 1.0 : 0.0;
    stack.masks.push_back(std::move(m));
  }
  return stack;
}

Snapshot encode(const scene::FrameSequence& seq, const MaskStack& masks, double noise_sigma,
                std::uint64_t noise_seed) {
  if (seq.count() != masks.frames())
    throw DimensionMismatchError("encode: sequence count must equal mask count");
  if (seq.rows() != masks.rows() || seq.cols() != masks.cols())
    throw DimensionMismatchError("encode: frame dims must match mask dims");

  Snapshot snap;
  snap.noise_sigma = noise_sigma;
  snap.data = Image(seq.rows(), seq.cols());
  for (int b = 0; b < seq.count(); ++b) {
    const Image& f = seq.frames[b];
    const Image& m = masks.masks[b];
    for (std::size_t i = 0; i < snap.data.size(); ++i)
      snap.data.data[i] += f.data[i] * m.data[i];
  }
  if (noise_sigma > 0.0) {
    Philox rng(derive_seed(noise_seed, "sci_forward.noise"));
    for (double& v : snap.data.data) v += noise_sigma * rng.normal();
  }
  return snap;
}

std::vector<double> phi_apply(std::span<const double> s, const MaskStack& masks) {
  const std::size_t n = static_cast<std::size_t>(masks.rows()) * masks.cols();
  if (s.size() != n * masks.frames())
    throw DimensionMismatchError("phi_apply: signal length must be n*B");
  std::vector<double> y(n, 0.0);
  for (int b = 0; b < masks.frames(); ++b) {
    const double* sb = s.data() + static_cast<std::size_t>(b) * n;
    const double* mb = masks.masks[b].data.data();
    for (std::size_t i = 0; i < n; ++i) y[i] += mb[i] * sb[i];
  }
  return y;
}

std::vector<double> phi_adjoint(std::span<const double> y, const MaskStack& masks) {
  const std::size_t n = static_cast<std::size_t>(masks.rows()) * masks.cols();
  if (y.size() != n)
    throw DimensionMismatchError("phi_adjoint: measurement length must be n");
  std::vector<double> s(n * masks.frames(), 0.0);
  for (int b = 0; b < masks.frames(); ++b) {
    double* sb = s.data() + static_cast<std::size_t>(b) * n;
    const double* mb = masks.masks[b].data.data();
    for (std::size_t i = 0; i < n; ++i) sb[i] = mb[i] * y[i];
  }
  return s;
}

std::vector<double> to_signal_vector(const scene::FrameSequence& seq) {
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(seq.count()) * seq.rows() * seq.cols());
  for (const Image& f : seq.frames) s.insert(s.end(), f.data.begin(), f.data.end());
  return s;
}

Snapshot normalize_measurement(const Snapshot& snap, const MaskStack& masks) {
  if (snap.normalized)
    throw InvalidConfigError("normalize_measurement: snapshot already normalized");
  if (snap.data.rows != masks.rows() || snap.data.cols != masks.cols())
    throw DimensionMismatchError("normalize_measurement: snapshot dims must match masks");
  Snapshot out = snap;
  const Image sum = masks.per_pixel_sum();
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data.data[i] = sum.data[i] > 0.0 ? out.data.data[i] / sum.data[i] : 0.0;
  out.normalized = true;
  return out;
}

namespace {

void write_file_or_throw(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file_or_throw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void put_f32le(std::string& bytes, float f) {
  const auto u = std::bit_cast<std::uint32_t>(f);
  bytes.push_back(static_cast<char>(u & 0xFF));
  bytes.push_back(static_cast<char>((u >> 8) & 0xFF));
  bytes.push_back(static_cast<char>((u >> 16) & 0xFF));
  bytes.push_back(static_cast<char>((u >> 24) & 0xFF));
}

float get_f32le(const std::string& bytes, std::size_t off) {
  const std::uint32_t u =
      static_cast<unsigned char>(bytes[off]) |
      (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8) |
      (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16) |
      (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24);
  return std::bit_cast<float>(u);
}

}  // namespace

void save_masks(const MaskStack& masks, const fs::path& path) {
  if (masks.frames() < 1) throw InvalidConfigError("save_masks: empty stack");
  const std::size_t bits = static_cast<std::size_t>(masks.frames()) * masks.rows() * masks.cols();
  std::string bytes((bits + 7) / 8, '\0');
  std::size_t k = 0;
  for (const Image& m : masks.masks)
    for (double v : m.data) {
      if (v != 0.0) bytes[k / 8] |= static_cast<char>(1u << (k % 8));
      ++k;
    }
  write_file_or_throw(path, bytes);
  const json meta{{"width", masks.cols()},
                  {"height", masks.rows()},
                  {"B", masks.frames()},
                  {"density", masks.density},
                  {"seed", masks.seed}};
  write_file_or_throw(fs::path(path.string() + ".json"), meta.dump(2) + "\n");
}

MaskStack load_masks(const fs::path& path) {
  const json meta = json::parse(read_file_or_throw(fs::path(path.string() + ".json")));
  const int cols = meta.at("width").get<int>();
  const int rows = meta.at("height").get<int>();
  const int b = meta.at("B").get<int>();
  if (cols < 1 || rows < 1 || b < 1)
    throw IoError("mask sidecar has invalid dims: " + path.string());

  const std::string bytes = read_file_or_throw(path);
  const std::size_t bits = static_cast<std::size_t>(b) * rows * cols;
  if (bytes.size() != (bits + 7) / 8)
    throw IoError("mask payload size mismatch: " + path.string());

  MaskStack stack;
  stack.seed = meta.value("seed", std::uint64_t{0});
  stack.density = meta.value("density", 0.5);
  std::size_t k = 0;
  for (int i = 0; i < b; ++i) {
    Image m(rows, cols);
    for (double& v : m.data) {
      v = (static_cast<unsigned char>(bytes[k / 8]) >> (k % 8)) & 1u ? 1.0 : 0.0;
      ++k;
    }
    stack.masks.push_back(std::move(m));
  }
  return stack;
}

void save_snapshot(const Snapshot& snap, const fs::path& path) {
  std::string bytes;
  bytes.reserve(snap.data.size() * 4);
  for (double v : snap.data.data) put_f32le(bytes, static_cast<float>(v));
  write_file_or_throw(path, bytes);
  const json meta{{"width", snap.data.cols},
                  {"height", snap.data.rows},
                  {"noise_sigma", snap.noise_sigma},
                  {"normalized", snap.normalized}};
  write_file_or_throw(fs::path(path.string() + ".json"), meta.dump(2) + "\n");
}

Snapshot load_snapshot(const fs::path& path) {
  const json meta = json::parse(read_file_or_throw(fs::path(path.string() + ".json")));
  const int cols = meta.at("width").get<int>();
  const int rows = meta.at("height").get<int>();
  if (cols < 1 || rows < 1)
    throw IoError("snapshot sidecar has invalid dims: " + path.string());
  const std::string bytes = read_file_or_throw(path);
  if (bytes.size() != static_cast<std::size_t>(rows) * cols * 4)
    throw IoError("snapshot payload size mismatch: " + path.string());

  Snapshot snap;
  snap.noise_sigma = meta.value("noise_sigma", 0.0);
  snap.normalized = meta.value("normalized", false);
  snap.data = Image(rows, cols);
  std::size_t off = 0;
  for (double& v : snap.data.data) {
    v = get_f32le(bytes, off);
    off += 4;
  }
  return snap;
}

}  // namespace evsci::sci
