// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/providers.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <utility>

#include "splatrec/io/pfm.hpp"

namespace splatrec {
namespace {

std::string format_value(const std::string& spec, int value) {
    if (spec.empty()) return std::to_string(value);
    if (spec.size() < 2 || spec[0] != '0')
        raise(Err::InvalidArgument, "unsupported format spec: " + spec);
    int width = 0;
    for (size_t i = 1; i < spec.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(spec[i])))
            raise(Err::InvalidArgument, "unsupported format spec: " + spec);
        width = width * 10 + (spec[i] - '0');
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, value);
    return buf;
}

std::string expand(const std::string& tmpl,
                   const std::vector<std::pair<std::string, int>>& values) {
    std::string out;
    out.reserve(tmpl.size() + 8);
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        const size_t close = tmpl.find('}', i);
        if (close == std::string::npos)
            raise(Err::InvalidArgument, "unbalanced '{' in template: " + tmpl);
        const std::string body = tmpl.substr(i + 1, close - i - 1);
        const size_t colon = body.find(':');
        const std::string name = body.substr(0, colon);
        const std::string spec = colon == std::string::npos ? "" : body.substr(colon + 1);
        bool found = false;
        for (const auto& [key, value] : values) {
            if (key == name) {
                out += format_value(spec, value);
                found = true;
                break;
            }
        }
        if (!found)
            raise(Err::InvalidArgument, "unknown placeholder '" + name + "' in: " + tmpl);
        i = close + 1;
    }
    return out;
}

void validate_matches(const MatchSet& set, const std::string& origin) {
    for (size_t i = 0; i < set.size(); ++i) {
        const Match& m = set[i];
        const bool finite = std::isfinite(m.u_prev) && std::isfinite(m.v_prev) &&
                            std::isfinite(m.u_cur) && std::isfinite(m.v_cur) &&
                            std::isfinite(m.confidence);
        if (!finite || m.confidence < 0.0 || m.confidence > 1.0)
            raise(Err::MalformedMatches,
                  origin + ": match " + std::to_string(i) + " out of range");
    }
}

} // namespace

std::string expand_template(const std::string& tmpl, const std::string& name, int value) {
    return expand(tmpl, {{name, value}});
}

std::string expand_template(const std::string& tmpl, const std::string& name_a, int value_a,
                            const std::string& name_b, int value_b) {
    return expand(tmpl, {{name_a, value_a}, {name_b, value_b}});
}

FileDepthProvider::FileDepthProvider(std::string root, int expected_width,
                                     int expected_height, std::string name_template)
    : root_(std::move(root)), template_(std::move(name_template)), width_(expected_width),
      height_(expected_height) {}

DepthMap FileDepthProvider::get_depth(int frame_index) const {
    namespace fs = std::filesystem;
    const std::string path =
        (fs::path(root_) / expand_template(template_, "index", frame_index)).string();
    const DepthMap depth = read_pfm(path);
    if (depth.width() != width_ || depth.height() != height_)
        raise(Err::MalformedDepth, path + ": expected " + std::to_string(width_) + "x" +
                                       std::to_string(height_) + ", got " +
                                       std::to_string(depth.width()) + "x" +
                                       std::to_string(depth.height()));
    for (double v : depth.raw())
        if (std::isnan(v) || std::isinf(v))
            raise(Err::MalformedDepth, path + ": non-finite depth value");
    return depth;
}

FileMatchProvider::FileMatchProvider(std::string root, std::string name_template)
    : root_(std::move(root)), template_(std::move(name_template)) {}

std::string FileMatchProvider::path_for(int frame_prev, int frame_cur) const {
    namespace fs = std::filesystem;
    return (fs::path(root_) /
            expand_template(template_, "prev", frame_prev, "cur", frame_cur))
        .string();
}

bool FileMatchProvider::has_matches(int frame_prev, int frame_cur) const {
    return std::filesystem::exists(path_for(frame_prev, frame_cur));
}

MatchSet FileMatchProvider::get_matches(int frame_prev, int frame_cur) const {
    const std::string path = path_for(frame_prev, frame_cur);
    MatchSet set = read_matches_csv(path);
    validate_matches(set, path);
    return set;
}

SyntheticDepthProvider::SyntheticDepthProvider(std::shared_ptr<const SynthBundle> bundle)
    : bundle_(std::move(bundle)) {}

DepthMap SyntheticDepthProvider::get_depth(int frame_index) const {
    if (frame_index < 0 || frame_index >= static_cast<int>(bundle_->depths.size()))
        raise(Err::MissingResource,
              "no synthetic depth for frame " + std::to_string(frame_index));
    return bundle_->depths[static_cast<size_t>(frame_index)];
}

SyntheticMatchProvider::SyntheticMatchProvider(std::shared_ptr<const SynthBundle> bundle)
    : bundle_(std::move(bundle)) {}

const MatchEntry* SyntheticMatchProvider::find(int frame_prev, int frame_cur) const {
    for (const MatchEntry& entry : bundle_->matches)
        if (entry.prev == frame_prev && entry.cur == frame_cur) return &entry;
    return nullptr;
}

bool SyntheticMatchProvider::has_matches(int frame_prev, int frame_cur) const {
    return find(frame_prev, frame_cur) != nullptr;
}

MatchSet SyntheticMatchProvider::get_matches(int frame_prev, int frame_cur) const {
    const MatchEntry* entry = find(frame_prev, frame_cur);
    if (!entry)
        raise(Err::MissingResource, "no synthetic matches for pair " +
                                        std::to_string(frame_prev) + " -> " +
                                        std::to_string(frame_cur));
    return entry->set;
}

} // namespace splatrec
