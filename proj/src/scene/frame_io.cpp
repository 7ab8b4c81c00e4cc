#include "evsci/scene/frame_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace evsci::scene {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw_f32 readers/writers assume a little-endian host");

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

json sequence_meta(const FrameSequence& seq) {
  return json{{"width", seq.cols()},
              {"height", seq.rows()},
              {"count", seq.count()},
              {"frame_interval", seq.frame_interval_s}};
}

void save_pgm(const Image& img, const fs::path& path) {
  std::string bytes = "P5\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n255\n";
  bytes.reserve(bytes.size() + img.size());
  for (double v : img.data) {
    const int q = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  write_file_or_throw(path, bytes);
}

// P5 header: magic, whitespace/comments, width, height, maxval, then a single
// whitespace byte before the raster.
Image load_pgm(const fs::path& path) {
  const std::string bytes = read_file_or_throw(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos == start) throw IoError("malformed PGM header: " + path.string());
    return std::stol(bytes.substr(start, pos - start));
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw IoError("malformed PGM header (not P5): " + path.string());
  pos = 2;
  const long cols = read_int();
  const long rows = read_int();
  const long maxval = read_int();
  if (cols < 1 || rows < 1) throw IoError("malformed PGM header (bad dims): " + path.string());
  if (maxval != 255) throw IoError("malformed PGM header (maxval must be 255): " + path.string());
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (pos + need > bytes.size()) throw IoError("truncated PGM raster: " + path.string());

  Image img(static_cast<int>(rows), static_cast<int>(cols));
  for (std::size_t i = 0; i < need; ++i)
    img.data[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  return img;
}

std::string frame_file_name(int index_1based) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", index_1based);
  return buf;
}

void save_pgm_dir(const FrameSequence& seq, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) throw IoError("cannot create directory: " + dir.string());
  for (int b = 0; b < seq.count(); ++b)
    save_pgm(seq.frames[b], dir / frame_file_name(b + 1));
  write_file_or_throw(dir / "sequence.json", sequence_meta(seq).dump(2) + "\n");
}

FrameSequence load_pgm_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .pgm files in: " + dir.string());

  FrameSequence seq;
  for (const fs::path& f : files) {
    Image img = load_pgm(f);
    if (!seq.frames.empty() && !img.same_shape(seq.frames.front()))
      throw DimensionMismatchError("PGM frames differ in size under: " + dir.string());
    seq.frames.push_back(std::move(img));
  }
  const fs::path meta = dir / "sequence.json";
  if (fs::exists(meta)) {
    const json j = json::parse(read_file_or_throw(meta));
    seq.frame_interval_s = j.value("frame_interval", 1.0);
  } else {
    seq.frame_interval_s = 1.0;
  }
  return seq;
}

void save_raw_f32(const FrameSequence& seq, const fs::path& path) {
  std::string bytes;
  bytes.reserve(seq.count() * seq.frames.front().size() * 4);
  for (const Image& img : seq.frames)
    for (double v : img.data) {
      const float f = static_cast<float>(v);
      const auto u = std::bit_cast<std::uint32_t>(f);
      bytes.push_back(static_cast<char>(u & 0xFF));
      bytes.push_back(static_cast<char>((u >> 8) & 0xFF));
      bytes.push_back(static_cast<char>((u >> 16) & 0xFF));
      bytes.push_back(static_cast<char>((u >> 24) & 0xFF));
    }
  write_file_or_throw(path, bytes);
  write_file_or_throw(fs::path(path.string() + ".json"), sequence_meta(seq).dump(2) + "\n");
}

FrameSequence load_raw_f32(const fs::path& path, int* clamped_count) {
  const json meta = json::parse(read_file_or_throw(fs::path(path.string() + ".json")));
  const int cols = meta.at("width").get<int>();
  const int rows = meta.at("height").get<int>();
  const int count = meta.at("count").get<int>();
  if (rows < 1 || cols < 1 || count < 1)
    throw IoError("raw_f32 sidecar has invalid dims: " + path.string());

  const std::string bytes = read_file_or_throw(path);
  const std::size_t need = static_cast<std::size_t>(rows) * cols * count * 4;
  if (bytes.size() != need)
    throw IoError("raw_f32 payload size mismatch: " + path.string());

  FrameSequence seq;
  seq.frame_interval_s = meta.value("frame_interval", 1.0);
  int clamped = 0;
  std::size_t off = 0;
  for (int b = 0; b < count; ++b) {
    Image img(rows, cols);
    for (double& v : img.data) {
      std::uint32_t u = static_cast<unsigned char>(bytes[off]) |
                        (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8) |
                        (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16) |
                        (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24);
      off += 4;
      const double x = std::bit_cast<float>(u);
      v = std::clamp(x, 0.0, 1.0);
      if (v != x) ++clamped;
    }
    seq.frames.push_back(std::move(img));
  }
  if (clamped_count) *clamped_count = clamped;
  return seq;
}

}  // namespace

FrameFormat parse_frame_format(const std::string& name) {
  if (name == "pgm_dir") return FrameFormat::pgm_dir;
  if (name == "raw_f32") return FrameFormat::raw_f32;
  throw InvalidConfigError("unknown frame format: " + name);
}

std::string frame_format_name(FrameFormat f) {
  return f == FrameFormat::pgm_dir ? "pgm_dir" : "raw_f32";
}

void save_frames(const FrameSequence& seq, const fs::path& path, FrameFormat format) {
  if (seq.count() < 1) throw InvalidConfigError("save_frames: empty sequence");
  if (format == FrameFormat::pgm_dir)
    save_pgm_dir(seq, path);
  else
    save_raw_f32(seq, path);
}

FrameSequence load_frames(const fs::path& path, FrameFormat format, int* clamped_count) {
  if (clamped_count) *clamped_count = 0;
  FrameSequence seq = format == FrameFormat::pgm_dir ? load_pgm_dir(path)
                                                     : load_raw_f32(path, clamped_count);
  return seq;
}

}  // namespace evsci::scene
