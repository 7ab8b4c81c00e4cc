#include "evsci/events/stream_io.hpp"

#include <charconv>
#include <fstream>

#include <json.hpp>

namespace evsci::events {

namespace fs = std::filesystem;
using nlohmann::json;

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

void put_u16le(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u64le(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get_u16le(const std::string& b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    (static_cast<unsigned char>(b[off + 1]) << 8));
}

std::uint64_t get_u64le(const std::string& b, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[off + i])) << (8 * i);
  return v;
}

json sidecar_meta(const EventStream& s) {
  return json{{"T", s.camera.threshold},
              {"log_eps", s.camera.log_eps},
              {"width", s.camera.cols},
              {"height", s.camera.rows},
              {"timestamp_resolution_us", s.camera.timestamp_resolution_us},
              {"sync_t_us", s.sync_t_us},
              {"t_start_us", s.t_start_us},
              {"t_end_us", s.t_end_us}};
}

EventStream stream_from_meta(const fs::path& path) {
  const json meta = json::parse(read_file_or_throw(fs::path(path.string() + ".json")));
  EventStream s;
  s.camera.threshold = meta.at("T").get<double>();
  s.camera.log_eps = meta.at("log_eps").get<double>();
  s.camera.cols = meta.at("width").get<int>();
  s.camera.rows = meta.at("height").get<int>();
  s.camera.timestamp_resolution_us = meta.value("timestamp_resolution_us", std::int64_t{1});
  s.sync_t_us = meta.at("sync_t_us").get<std::int64_t>();
  s.t_start_us = meta.at("t_start_us").get<std::int64_t>();
  s.t_end_us = meta.at("t_end_us").get<std::int64_t>();
  return s;
}

}  // namespace

EventFormat parse_event_format(const std::string& name) {
  if (name == "bin16") return EventFormat::bin16;
  if (name == "csv") return EventFormat::csv;
  throw InvalidConfigError("unknown event format: " + name);
}

std::string event_format_name(EventFormat f) {
  return f == EventFormat::bin16 ? "bin16" : "csv";
}

void write_events(const EventStream& stream, const fs::path& path, EventFormat format) {
  std::string bytes;
  if (format == EventFormat::bin16) {
    bytes.reserve(stream.events.size() * 16);
    for (const Event& e : stream.events) {
      put_u64le(bytes, static_cast<std::uint64_t>(e.t_us));
      put_u16le(bytes, e.x);
      put_u16le(bytes, e.y);
      bytes.push_back(static_cast<char>(e.p));
      bytes.append(3, '\0');
    }
  } else {
    bytes = "t,x,y,p\n";
    for (const Event& e : stream.events)
      bytes += std::to_string(e.t_us) + "," + std::to_string(e.x) + "," + std::to_string(e.y) +
               "," + std::to_string(static_cast<int>(e.p)) + "\n";
  }
  write_file_or_throw(path, bytes);
  write_file_or_throw(fs::path(path.string() + ".json"), sidecar_meta(stream).dump(2) + "\n");
}

EventStream read_events(const fs::path& path, EventFormat format) {
  EventStream stream = stream_from_meta(path);
  const std::string bytes = read_file_or_throw(path);

  if (format == EventFormat::bin16) {
    if (bytes.size() % 16 != 0)
      throw MalformedRecordError("bin16 file size is not a multiple of 16: " + path.string());
    stream.events.reserve(bytes.size() / 16);
    for (std::size_t off = 0; off < bytes.size(); off += 16) {
      Event e;
      e.t_us = static_cast<std::int64_t>(get_u64le(bytes, off));
      e.x = get_u16le(bytes, off + 8);
      e.y = get_u16le(bytes, off + 10);
      e.p = static_cast<std::int8_t>(bytes[off + 12]);
      if (e.p != 1 && e.p != -1)
        throw MalformedRecordError("bin16 polarity must be +1/-1: " + path.string());
      stream.events.push_back(e);
    }
    return stream;
  }

  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= bytes.size()) return {};
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    std::string_view line(bytes.data() + pos, end - pos);
    pos = end + 1;
    return line;
  };
  const std::string_view header = next_line();
  if (header != "t,x,y,p")
    throw MalformedRecordError("csv events must start with 't,x,y,p': " + path.string());
  while (pos < bytes.size()) {
    const std::string_view line = next_line();
    if (line.empty()) continue;
    long long vals[4];
    std::size_t start = 0;
    for (int k = 0; k < 4; ++k) {
      std::size_t comma = k < 3 ? line.find(',', start) : line.size();
      if (comma == std::string_view::npos)
        throw MalformedRecordError("csv event row needs 4 columns: " + path.string());
      const auto res = std::from_chars(line.data() + start, line.data() + comma, vals[k]);
      if (res.ec != std::errc() || res.ptr != line.data() + comma)
        throw MalformedRecordError("csv event row has a non-integer field: " + path.string());
      start = comma + 1;
    }
    if (vals[3] != 1 && vals[3] != -1)
      throw MalformedRecordError("csv polarity must be +1/-1: " + path.string());
    stream.events.push_back(Event{vals[0], static_cast<std::uint16_t>(vals[1]),
                                  static_cast<std::uint16_t>(vals[2]),
                                  static_cast<std::int8_t>(vals[3])});
  }
  return stream;
}

}  // namespace evsci::events
