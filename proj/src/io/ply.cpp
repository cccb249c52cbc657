// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/io/ply.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <sstream>

#include "splatrec/io/atomic_file.hpp"

namespace splatrec {

namespace {

constexpr std::array<const char*, 14> kProps = {
    "x",       "y",       "z",       "red",   "green", "blue",  "opacity",
    "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"};

static_assert(std::endian::native == std::endian::little,
              "PLY writer assumes a little-endian host");

} // namespace

void write_ply(const std::string& path, const GaussianScene& scene) {
    scene.check_consistent();
    AtomicFileWriter writer(path, true);
    auto& out = writer.stream();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << scene.size() << "\n";
    for (const char* prop : kProps)
        out << "property double " << prop << "\n";
    out << "end_header\n";

    std::array<double, 14> row;
    for (size_t i = 0; i < scene.size(); ++i) {
        const Vec3& p = scene.positions[i];
        const Vec3& c = scene.colors[i];
        const Vec3& s = scene.log_scales[i];
        const Vec4& r = scene.rotations[i];
        row = {p.x(), p.y(), p.z(), c.x(),  c.y(),  c.z(),  scene.logit_opacities[i],
               s.x(), s.y(), s.z(), r[0],   r[1],   r[2],   r[3]};
        out.write(reinterpret_cast<const char*>(row.data()), sizeof(row));
    }
    writer.commit();
}

GaussianScene read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(Err::MissingResource, "cannot open PLY: " + path);

    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r"))
        raise(Err::MalformedScene, "bad PLY magic in " + path);

    size_t count = 0;
    std::vector<std::string> props;
    bool binary_le = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "comment") continue;
        if (word == "format") {
            std::string fmt;
            ss >> fmt;
            binary_le = (fmt == "binary_little_endian");
        } else if (word == "element") {
            std::string kind;
            ss >> kind >> count;
            if (kind != "vertex")
                raise(Err::MalformedScene, "unexpected PLY element '" + kind + "' in " + path);
        } else if (word == "property") {
            std::string type, name;
            ss >> type >> name;
            if (type != "double")
                raise(Err::MalformedScene, "expected double properties in " + path);
            props.push_back(name);
        } else if (word == "end_header") {
            break;
        } else {
            raise(Err::MalformedScene, "unexpected PLY header line '" + line + "' in " + path);
        }
    }
    if (!binary_le)
        raise(Err::MalformedScene, "expected binary_little_endian PLY in " + path);
    if (props.size() != kProps.size())
        raise(Err::MalformedScene, "wrong property count in " + path);
    for (size_t i = 0; i < props.size(); ++i)
        if (props[i] != kProps[i])
            raise(Err::MalformedScene, "unexpected property order in " + path);

    GaussianScene scene;
    std::array<double, 14> row;
    for (size_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), sizeof(row));
        if (in.gcount() != static_cast<std::streamsize>(sizeof(row)))
            raise(Err::MalformedScene, "truncated PLY payload in " + path);
        scene.append(Vec3(row[0], row[1], row[2]), Vec3(row[3], row[4], row[5]),
                     Vec4(row[10], row[11], row[12], row[13]), Vec3(row[7], row[8], row[9]),
                     row[6]);
    }
    scene.sync_state();
    return scene;
}

} // namespace splatrec
