#pragma once

#include <filesystem>
#include <optional>

#include "longdance/motion.hpp"
#include "longdance/music.hpp"

namespace longdance {

namespace fs = std::filesystem;

// Skeleton file: {"joint_names": [...], "parents": [...], "offsets": [[x,y,z],...], "foot_joints": [...]}
Skeleton read_skeleton(const fs::path& path);
void write_skeleton(const fs::path& path, const Skeleton& skel);
std::string skeleton_to_json(const Skeleton& skel);
/// Throws HeaderError; `origin` names the source in messages.
Skeleton skeleton_from_json(const std::string& text, const std::string& origin = "<memory>");

enum class PayloadFormat { kBinary, kJson };

// Motion file: JSON header {format, layout_version, fps, joints, contacts, dim,
// frame_count} plus either "payload" naming a sidecar of little-endian float32
// frame-major values, or "frames" holding the values inline.
MotionSequence read_motion(const fs::path& path);
void write_motion(const fs::path& path, const MotionSequence& seq, PayloadFormat format = PayloadFormat::kBinary);

// Music feature file: JSON header {format, fps, dim, frame_count, channel_map,
// payload, optional beats} plus a little-endian float32 frame-major sidecar.
MusicFeatureSequence ingest_features(const fs::path& path);
/// Beat grid stored in a music file header, if any.
std::optional<BeatGrid> read_beats(const fs::path& path);
void write_features(const fs::path& path, const MusicFeatureSequence& seq,
                    const std::optional<BeatGrid>& beats = std::nullopt);

/// Sidecar payload path for a header path: "x.motion.json" -> "x.motion.bin".
fs::path payload_path_for(const fs::path& header_path);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& contents);

}  // namespace longdance
