#include "longdance/export.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>

#include "longdance/error.hpp"
#include "longdance/io.hpp"

namespace longdance {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCsvHeader = "frame,joint,x,y,z";

double parse_double(std::string_view s, const fs::path& path, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(fmt::format("{}:{}: bad number '{}'", path.string(), line, s));
  }
  return v;
}

}  // namespace

void export_positions_csv(const fs::path& path, const Skeleton& skel, const MotionSequence& seq) {
  const JointTrack p = fk_track(skel, seq);
  std::string out = std::string(kCsvHeader) + "\n";
  for (int t = 0; t < p.num_frames(); ++t) {
    for (int j = 0; j < p.num_joints; ++j) {
      const Vec3& x = p.at(t, j);
      out += fmt::format("{},{},{},{},{}\n", t, j, x[0], x[1], x[2]);
    }
  }
  write_file_atomic(path, out);
}

JointTrack read_positions_csv(const fs::path& path, double fps) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw HeaderError(fmt::format("{}: expected header '{}'", path.string(), kCsvHeader));
  }
  JointTrack track{fps, 0, {}};
  std::vector<std::pair<int, int>> keys;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      f.push_back(rest.substr(0, pos));
    }
    f.push_back(rest);
    if (f.size() != 5) throw ParseError(fmt::format("{}:{}: expected 5 fields", path.string(), row));
    keys.emplace_back(static_cast<int>(parse_double(f[0], path, row)), static_cast<int>(parse_double(f[1], path, row)));
    track.xyz.emplace_back(parse_double(f[2], path, row), parse_double(f[3], path, row), parse_double(f[4], path, row));
  }
  const int joints =
      static_cast<int>(std::count_if(keys.begin(), keys.end(), [](const auto& k) { return k.first == 0; }));
  for (size_t i = 0; i < keys.size(); ++i) {
    if (joints == 0 || keys[i] != std::pair{static_cast<int>(i) / joints, static_cast<int>(i) % joints}) {
      throw HeaderError(fmt::format("{}: rows do not form a complete frame-major grid", path.string()));
    }
  }
  if (joints > 0 && keys.size() % joints != 0)
    throw HeaderError(fmt::format("{}: last frame is incomplete", path.string()));
  track.num_joints = joints;
  return track;
}

std::vector<fs::path> export_preview_svg(const fs::path& dir, const Skeleton& skel, const MotionSequence& seq) {
  const JointTrack p = fk_track(skel, seq);
  fs::create_directories(dir);
  // one viewport for the whole clip so frames line up when flipped through
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const auto& x : p.xyz) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  const double margin = 0.1, scale = 200.0;
  const double w = (hi[0] - lo[0] + 2 * margin) * scale, h = (hi[1] - lo[1] + 2 * margin) * scale;
  auto sx = [&](double x) { return (x - lo[0] + margin) * scale; };
  auto sy = [&](double y) { return h - (y - lo[1] + margin) * scale; };

  std::vector<fs::path> files;
  for (int t = 0; t < p.num_frames(); ++t) {
    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.1f}\" height=\"{:.1f}\" viewBox=\"0 0 {:.1f} {:.1f}\">\n",
        w, h, w, h);
    svg += fmt::format("<!-- frame {} -->\n<g stroke=\"#222\" stroke-width=\"3\" stroke-linecap=\"round\">\n", t);
    for (int j = 1; j < skel.num_joints(); ++j) {
      const Vec3 &a = p.at(t, skel.parents[j]), &b = p.at(t, j);
      svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n", sx(a[0]), sy(a[1]),
                         sx(b[0]), sy(b[1]));
    }
    svg += "</g>\n<g fill=\"#c33\">\n";
    for (int j = 0; j < skel.num_joints(); ++j) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\"/>\n", sx(p.at(t, j)[0]), sy(p.at(t, j)[1]));
    }
    svg += "</g>\n</svg>\n";
    files.push_back(dir / fmt::format("frame_{:06d}.svg", t));
    write_file_atomic(files.back(), svg);
  }
  return files;
}

}  // namespace longdance
