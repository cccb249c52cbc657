// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/io/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "splatrec/io/atomic_file.hpp"

namespace splatrec {

namespace {

bool parse_fields(const std::string& line, std::vector<double>& out) {
    out.clear();
    std::istringstream ss(line);
    double v;
    while (ss >> v)
        out.push_back(v);
    std::string rest;
    ss.clear();
    return !(ss >> rest);
}

PoseSE3 pose_from_septet(const double* f) {
    PoseSE3 p;
    p.translation = Vec3(f[0], f[1], f[2]);
    // disk order qx qy qz qw
    Quat q(f[6], f[3], f[4], f[5]);
    double n = q.norm();
    if (!(n > 0.0))
        raise(Err::MalformedTrajectory, "zero quaternion");
    p.rotation = Quat(q.coeffs() / n);
    return p;
}

} // namespace

Trajectory read_tum(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(Err::MissingResource, "cannot open trajectory: " + path);
    Trajectory out;
    std::string line;
    std::vector<double> fields;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        if (!parse_fields(line, fields) || fields.size() != 8)
            raise(Err::MalformedTrajectory,
                  path + ":" + std::to_string(lineno) + ": expected 8 numeric fields");
        for (double v : fields)
            if (!std::isfinite(v))
                raise(Err::MalformedTrajectory,
                      path + ":" + std::to_string(lineno) + ": non-finite value");
        TrajectoryEntry entry;
        entry.timestamp = fields[0];
        try {
            entry.pose = pose_from_septet(fields.data() + 1);
        } catch (const SplatError& e) {
            raise(Err::MalformedTrajectory,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(entry);
    }
    return out;
}

void write_tum(const std::string& path, const Trajectory& trajectory) {
    AtomicFileWriter writer(path);
    auto& out = writer.stream();
    out << "# timestamp tx ty tz qx qy qz qw\n";
    char buf[256];
    for (const TrajectoryEntry& e : trajectory) {
        const Vec3& t = e.pose.translation;
        const Quat& q = e.pose.rotation;
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                      e.timestamp, t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
        out << buf;
    }
    writer.commit();
}

PoseSE3 parse_pose_septet(const std::string& text) {
    std::vector<double> fields;
    if (!parse_fields(text, fields) || fields.size() != 7)
        raise(Err::MalformedTrajectory, "pose septet needs 7 numbers: '" + text + "'");
    for (double v : fields)
        if (!std::isfinite(v))
            raise(Err::MalformedTrajectory, "non-finite value in pose septet");
    return pose_from_septet(fields.data());
}

} // namespace splatrec
