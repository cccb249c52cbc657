// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "splatrec/rasterizer.hpp"
#include "splatrec/scene.hpp"
#include "test_util.hpp"

namespace splatrec::testutil {

// Random scene in front of the camera. Depths land on a jittered grid so no
// two gaussians come within 0.05 units of each other; finite differences at
// h = 1e-4 then cannot flip the depth sort.
inline GaussianScene random_scene(std::mt19937_64& rng, int count,
                                  const CameraIntrinsics& K, double opacity_max = 0.6,
                                  double opacity_min = 0.15) {
    GaussianScene scene;
    for (int i = 0; i < count; ++i) {
        double z = 1.5 + 0.08 * i + uniform(rng, 0.0, 0.03);
        double u = uniform(rng, 0.1 * K.width, 0.9 * K.width);
        double v = uniform(rng, 0.1 * K.height, 0.9 * K.height);
        Vec3 mu((u - K.cx) / K.fx * z, (v - K.cy) / K.fy * z, z);
        Vec3 color(uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95),
                   uniform(rng, 0.05, 0.95));
        Quat q = random_quat(rng);
        Vec3 log_s(std::log(uniform(rng, 0.03, 0.15)), std::log(uniform(rng, 0.03, 0.15)),
                   std::log(uniform(rng, 0.03, 0.15)));
        double alpha = uniform(rng, opacity_min, opacity_max);
        scene.append(mu, color, Vec4(q.w(), q.x(), q.y(), q.z()), log_s, logit(alpha));
    }
    scene.sync_state();
    return scene;
}

// Margin checks that keep finite differences away from the non-smooth
// points of the forward pass (alpha clip and transmittance termination).
inline bool fd_safe(const RenderOutput& out, double trans_margin = 3e-4) {
    double max_alpha = 0.0;
    for (int y = 0; y < out.alpha.height(); ++y)
        for (int x = 0; x < out.alpha.width(); ++x)
            max_alpha = std::max(max_alpha, out.alpha.at(y, x, 0));
    return max_alpha < 1.0 - trans_margin;
}

} // namespace splatrec::testutil
