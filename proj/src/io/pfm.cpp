// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/io/pfm.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include "splatrec/io/atomic_file.hpp"

namespace splatrec {

namespace {

void byteswap4(char* p, size_t count) {
    for (size_t i = 0; i < count; ++i, p += 4) {
        std::swap(p[0], p[3]);
        std::swap(p[1], p[2]);
    }
}

// Reads one whitespace-delimited token, treating '#' comments as whitespace.
std::string next_token(std::istream& in) {
    std::string tok;
    char c;
    while (in.get(c)) {
        if (c == '#') {
            while (in.get(c) && c != '\n') {}
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(c);
    }
    return tok;
}

} // namespace

DepthMap read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(Err::MissingResource, "cannot open PFM: " + path);

    std::string magic = next_token(in);
    if (magic != "Pf") {
        if (magic == "PF")
            raise(Err::MalformedDepth, "color PFM not supported: " + path);
        raise(Err::MalformedDepth, "bad PFM magic in " + path);
    }
    int width = 0, height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        scale = std::stod(next_token(in));
    } catch (const std::exception&) {
        raise(Err::MalformedDepth, "unparsable PFM header in " + path);
    }
    if (width <= 0 || height <= 0 || scale == 0.0)
        raise(Err::MalformedDepth, "bad PFM dimensions or scale in " + path);

    std::vector<float> raster(static_cast<size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raster.data()),
            static_cast<std::streamsize>(raster.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(raster.size() * sizeof(float)))
        raise(Err::MalformedDepth, "truncated PFM raster in " + path);

    bool file_little = scale < 0.0;
    if (file_little != (std::endian::native == std::endian::little))
        byteswap4(reinterpret_cast<char*>(raster.data()), raster.size());

    DepthMap out(height, width);
    for (int y = 0; y < height; ++y) {
        const float* row = raster.data() + static_cast<size_t>(height - 1 - y) * width;
        for (int x = 0; x < width; ++x)
            out.at(y, x) = static_cast<double>(row[x]);
    }
    return out;
}

void write_pfm(const std::string& path, const DepthMap& depth) {
    if (depth.empty())
        raise(Err::InvalidArgument, "refusing to write empty PFM");
    AtomicFileWriter writer(path, true);
    auto& out = writer.stream();
    out << "Pf\n" << depth.width() << " " << depth.height() << "\n";
    out << (std::endian::native == std::endian::little ? "-1.0" : "1.0") << "\n";
    std::vector<float> row(depth.width());
    for (int y = depth.height() - 1; y >= 0; --y) {
        for (int x = 0; x < depth.width(); ++x)
            row[x] = static_cast<float>(depth.at(y, x));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    writer.commit();
}

} // namespace splatrec
