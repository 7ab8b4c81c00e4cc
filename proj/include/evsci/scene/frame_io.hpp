#pragma once

#include <filesystem>
#include <string>

#include "evsci/scene/scene.hpp"

namespace evsci::scene {

enum class FrameFormat { pgm_dir, raw_f32 };

FrameFormat parse_frame_format(const std::string& name);
std::string frame_format_name(FrameFormat f);

// pgm_dir: binary P5 files (maxval 255) named frame_000001.pgm, ... plus a
// sequence.json with the frame interval. raw_f32: little-endian float32
// planes concatenated into one file, with a `<path>.json` sidecar carrying
// {width, height, count, frame_interval}.
void save_frames(const FrameSequence& seq, const std::filesystem::path& path, FrameFormat format);

// 8-bit PGM samples map to [0,1] by division by 255. raw_f32 samples load
// verbatim and are clamped to [0,1]; the number of clamped samples is
// reported through `clamped_count` when non-null.
FrameSequence load_frames(const std::filesystem::path& path, FrameFormat format,
                          int* clamped_count = nullptr);

}  // namespace evsci::scene
