// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatrec/geometry.hpp"
#include "splatrec/image.hpp"
#include "splatrec/io/trajectory.hpp"
#include "splatrec/matches.hpp"

namespace splatrec {

enum class SurfaceKind { Plane, Cavity, Corridor };
enum class PathKind { Dolly, Arc, Orbit };

// Deterministic test-world description. Every random choice derives from
// `seed`, so equal presets generate bitwise-identical bundles.
struct SynthPreset {
    SurfaceKind surface = SurfaceKind::Plane;
    PathKind path = PathKind::Dolly;
    int frames = 12;
    int width = 160;
    int height = 128;
    // Trajectory size: path length in scene units for dolly/arc, angular
    // span in radians for orbit.
    double extent = 0.3;
    int texture_octaves = 4;
    double texture_amplitude = 0.9;
    int match_count = 400;
    double outlier_fraction = 0.0;
    double outlier_confidence = 0.05;
    uint64_t seed = 1;

    CameraIntrinsics intrinsics() const;
    void validate() const;
};

// Named presets: plane, cavity, corridor, lowtex. Throws InvalidPreset.
SynthPreset preset_by_name(const std::string& name);

struct MatchEntry {
    int prev = 0;
    int cur = 0;
    MatchSet set;
};

struct SynthBundle {
    CameraIntrinsics K;
    std::vector<Image> frames;    // linear RGB, ray-traced analytically
    std::vector<DepthMap> depths; // camera-space z at pixel centers
    // Correspondences for every adjacent pair (i, i+1) and bridge pair
    // (i, i+2), so held-out frames leave usable links behind.
    std::vector<MatchEntry> matches;
    Trajectory poses_c2w; // ground truth, timestamps are frame indices
};

// Renders the world by analytic ray-surface intersection: exact depths,
// matches as exact reprojections of surface points (occlusion-checked),
// Lambertian shading lit from the camera.
SynthBundle generate(const SynthPreset& preset);

// Writes the provider/CLI file layout under dir:
//   frames/{index:06}.png, depth/{index:06}.pfm,
//   matches/{prev:06}_{cur:06}.csv, groundtruth.tum, intrinsics.json
void write_bundle(const SynthBundle& bundle, const std::string& dir);

} // namespace splatrec
