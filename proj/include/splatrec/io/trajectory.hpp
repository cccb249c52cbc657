// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "splatrec/geometry.hpp"

namespace splatrec {

// Poses here follow the on-disk TUM convention: camera-to-world. The renderer
// wants world-to-camera, so callers invert when crossing that boundary.
struct TrajectoryEntry {
    double timestamp = 0.0;
    PoseSE3 pose;
};

using Trajectory = std::vector<TrajectoryEntry>;

// TUM text format: `timestamp tx ty tz qx qy qz qw` per line, '#' comments and
// blank lines skipped. Parse errors report 1-based line numbers; lines with a
// field count other than 8 or non-finite values are rejected.
Trajectory read_tum(const std::string& path);
void write_tum(const std::string& path, const Trajectory& trajectory);

// Parses the 7-number septet `tx ty tz qx qy qz qw` (the TUM line without a
// timestamp), normalizing the quaternion.
PoseSE3 parse_pose_septet(const std::string& text);

} // namespace splatrec
