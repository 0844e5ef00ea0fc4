#pragma once

#include <filesystem>
#include <vector>

#include "longdance/motion.hpp"

namespace longdance {

/// Rows "frame,joint,x,y,z" with positions from forward kinematics, after a
/// "frame,joint,x,y,z" header. Values use round-trip precision.
void export_positions_csv(const std::filesystem::path& path, const Skeleton& skel, const MotionSequence& seq);

/// Parses a positions CSV back into a track. Throws ParseError on malformed
/// rows and HeaderError on a wrong header or a ragged frame/joint grid.
JointTrack read_positions_csv(const std::filesystem::path& path, double fps = 60.0);

/// One SVG stick figure per frame (front view: x right, y up) into `dir`,
/// named frame_000000.svg ...; returns the paths in frame order.
std::vector<std::filesystem::path> export_preview_svg(const std::filesystem::path& dir, const Skeleton& skel,
                                                      const MotionSequence& seq);

}  // namespace longdance
