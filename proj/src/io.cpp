#include "longdance/io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "longdance/error.hpp"

namespace longdance {

using nlohmann::json;

namespace {

constexpr const char* kMotionFormat = "longdance-motion";
constexpr const char* kMusicFormat = "longdance-music";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw HeaderError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

template <typename T>
T require(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw HeaderError(fmt::format("{}: missing key '{}'", path.string(), key));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw HeaderError(fmt::format("{}: bad value for '{}': {}", path.string(), key, e.what()));
  }
}

std::string encode_le_f32(const FrameMatrix& m) {
  std::string bytes(static_cast<size_t>(m.size()) * 4, '\0');
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    uint32_t bits = std::bit_cast<uint32_t>(m.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  return bytes;
}

FrameMatrix decode_le_f32(const std::string& bytes, int rows, int cols, const fs::path& path) {
  const size_t expected = static_cast<size_t>(rows) * cols * 4;
  if (bytes.size() != expected) {
    throw FrameLengthError(fmt::format("{}: payload has {} bytes, header implies {} ({} frames x {} channels)",
                                       path.string(), bytes.size(), expected, rows, cols));
  }
  FrameMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    m.data()[i] = std::bit_cast<float>(bits);
  }
  return m;
}

}  // namespace

fs::path payload_path_for(const fs::path& header_path) {
  fs::path p = header_path;
  return p.replace_extension(".bin");
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(fmt::format("short write to {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

Skeleton skeleton_from_json(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw HeaderError(fmt::format("{}: {}", origin, e.what()));
  }
  const fs::path path(origin);
  Skeleton s;
  s.joint_names = require<std::vector<std::string>>(j, "joint_names", path);
  s.parents = require<std::vector<int>>(j, "parents", path);
  for (const auto& o : require<std::vector<std::array<double, 3>>>(j, "offsets", path)) {
    s.offsets.emplace_back(o[0], o[1], o[2]);
  }
  s.foot_joints = require<std::vector<int>>(j, "foot_joints", path);
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw HeaderError(fmt::format("{}: {}", origin, e.what()));
  }
  return s;
}

std::string skeleton_to_json(const Skeleton& skel) {
  json j;
  j["joint_names"] = skel.joint_names;
  j["parents"] = skel.parents;
  json offsets = json::array();
  for (const auto& o : skel.offsets) offsets.push_back({o[0], o[1], o[2]});
  j["offsets"] = offsets;
  j["foot_joints"] = skel.foot_joints;
  return j.dump(2) + "\n";
}

Skeleton read_skeleton(const fs::path& path) { return skeleton_from_json(read_text(path), path.string()); }

void write_skeleton(const fs::path& path, const Skeleton& skel) { write_file_atomic(path, skeleton_to_json(skel)); }

MotionSequence read_motion(const fs::path& path) {
  const json h = parse_json(path);
  if (require<std::string>(h, "format", path) != kMotionFormat) {
    throw HeaderError(fmt::format("{}: not a motion file", path.string()));
  }
  const int version = require<int>(h, "layout_version", path);
  if (version != FrameLayout::kVersion) {
    throw HeaderError(fmt::format("{}: unsupported layout version {}", path.string(), version));
  }
  MotionSequence seq;
  seq.fps = require<double>(h, "fps", path);
  seq.layout = {require<int>(h, "joints", path), require<int>(h, "contacts", path)};
  const int dim = require<int>(h, "dim", path);
  const int n = require<int>(h, "frame_count", path);
  if (!(seq.fps > 0) || n < 0 || seq.layout.joints <= 0 || seq.layout.contacts < 0) {
    throw HeaderError(fmt::format("{}: invalid fps, joints, contacts or frame_count", path.string()));
  }
  if (dim != seq.layout.dim()) {
    throw HeaderError(fmt::format("{}: dim {} disagrees with layout dim {}", path.string(), dim, seq.layout.dim()));
  }
  if (h.contains("frames")) {
    const auto rows = require<std::vector<std::vector<float>>>(h, "frames", path);
    if (static_cast<int>(rows.size()) != n) {
      throw FrameLengthError(fmt::format("{}: {} frames listed, header says {}", path.string(), rows.size(), n));
    }
    seq.frames.resize(n, dim);
    for (int f = 0; f < n; ++f) {
      if (static_cast<int>(rows[f].size()) != dim) {
        throw FrameLengthError(
            fmt::format("{}: frame {} has {} values, expected {}", path.string(), f, rows[f].size(), dim));
      }
      for (int c = 0; c < dim; ++c) seq.frames(f, c) = rows[f][c];
    }
  } else {
    const fs::path payload = path.parent_path() / require<std::string>(h, "payload", path);
    seq.frames = decode_le_f32(read_text(payload), n, dim, payload);
  }
  return seq;
}

void write_motion(const fs::path& path, const MotionSequence& seq, PayloadFormat format) {
  seq.validate();
  json h;
  h["format"] = kMotionFormat;
  h["layout_version"] = FrameLayout::kVersion;
  h["fps"] = seq.fps;
  h["joints"] = seq.layout.joints;
  h["contacts"] = seq.layout.contacts;
  h["dim"] = seq.layout.dim();
  h["frame_count"] = seq.num_frames();
  if (format == PayloadFormat::kJson) {
    json rows = json::array();
    for (int f = 0; f < seq.num_frames(); ++f) {
      const auto r = seq.frame(f);
      rows.push_back(std::vector<float>(r.begin(), r.end()));
    }
    h["frames"] = std::move(rows);
  } else {
    const fs::path payload = payload_path_for(path);
    write_file_atomic(payload, encode_le_f32(seq.frames));
    h["payload"] = payload.filename().string();
  }
  write_file_atomic(path, h.dump(2) + "\n");
}

MusicFeatureSequence ingest_features(const fs::path& path) {
  const json h = parse_json(path);
  if (require<std::string>(h, "format", path) != kMusicFormat) {
    throw HeaderError(fmt::format("{}: not a music feature file", path.string()));
  }
  MusicFeatureSequence seq;
  seq.fps = require<double>(h, "fps", path);
  const int dim = require<int>(h, "dim", path);
  const int n = require<int>(h, "frame_count", path);
  if (dim <= 0 || n < 0) throw HeaderError(fmt::format("{}: invalid dim or frame_count", path.string()));
  const json cmap = require<json>(h, "channel_map", path);
  if (!cmap.is_object()) throw HeaderError(fmt::format("{}: channel_map must be an object", path.string()));
  for (const auto& [name, range] : cmap.items()) {
    if (!range.is_array() || range.size() != 2) {
      throw HeaderError(fmt::format("{}: channel '{}' must be [begin, end]", path.string(), name));
    }
    seq.channel_map.push_back({name, range[0].get<int>(), range[1].get<int>()});
  }
  std::sort(seq.channel_map.begin(), seq.channel_map.end(),
            [](const auto& a, const auto& b) { return a.begin < b.begin; });
  seq.frames.resize(0, dim);
  seq.validate();
  const fs::path payload = path.parent_path() / require<std::string>(h, "payload", path);
  seq.frames = decode_le_f32(read_text(payload), n, dim, payload);
  return seq;
}

std::optional<BeatGrid> read_beats(const fs::path& path) {
  const json h = parse_json(path);
  if (!h.contains("beats")) return std::nullopt;
  const json& b = h["beats"];
  BeatGrid g;
  g.beat_frames = require<std::vector<int>>(b, "frames", path);
  g.bpm = require<double>(b, "bpm", path);
  g.validate();
  return g;
}

void write_features(const fs::path& path, const MusicFeatureSequence& seq, const std::optional<BeatGrid>& beats) {
  seq.validate();
  json h;
  h["format"] = kMusicFormat;
  h["fps"] = seq.fps;
  h["dim"] = seq.dim();
  h["frame_count"] = seq.num_frames();
  json cmap = json::object();
  for (const auto& s : seq.channel_map) cmap[s.name] = {s.begin, s.end};
  h["channel_map"] = cmap;
  const fs::path payload = payload_path_for(path);
  write_file_atomic(payload, encode_le_f32(seq.frames));
  h["payload"] = payload.filename().string();
  if (beats) h["beats"] = {{"frames", beats->beat_frames}, {"bpm", beats->bpm}};
  write_file_atomic(path, h.dump(2) + "\n");
}

}  // namespace longdance
