#pragma once

#include <filesystem>
#include <string>

#include "evsci/events/camera.hpp"

namespace evsci::events {

enum class EventFormat { bin16, csv };

EventFormat parse_event_format(const std::string& name);
std::string event_format_name(EventFormat f);

// bin16 record: t:u64 LE microseconds, x:u16 LE, y:u16 LE, p:i8, 3 pad bytes
// (16 bytes total). csv: header line `t,x,y,p`, one event per row. Both carry
// a `<path>.json` sidecar with the camera model and sync marker.
void write_events(const EventStream& stream, const std::filesystem::path& path,
                  EventFormat format);
EventStream read_events(const std::filesystem::path& path, EventFormat format);

}  // namespace evsci::events
