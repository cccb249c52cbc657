// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "splatrec/image.hpp"
#include "splatrec/scene.hpp"

namespace splatrec {

inline constexpr int kTileSize = 16;
inline constexpr double kAlphaClip = 0.99;          // per-splat per-pixel cap
inline constexpr double kTransmittanceMin = 1e-4;   // front-to-back termination
inline constexpr double kMaxCond2D = 1e12;          // degenerate screen covariance skip
// Contributions with per-pixel alpha below this bound may be dropped by tile
// binning; the reference renderer never drops them, so the two agree to
// gaussian_count * kBinCutoff.
inline constexpr double kBinCutoff = 1e-12;

struct RenderOptions {
    // Test hook: per-gaussian offsets added to the projected screen centers,
    // letting finite differences probe the screen-space position gradient.
    const std::vector<Vec2>* center_offsets = nullptr;
    bool keep_replay = true;
};

// Per-gaussian forward state cached for the backward replay.
struct SplatCache {
    Vec3 p_cam;                      // camera-space center
    double u = 0.0, v = 0.0;         // projected center, offsets applied
    double lxx = 0.0, lxy = 0.0, lyy = 0.0;  // inverse 2D covariance
    double alpha_tilde = 0.0;        // decoded opacity
    double qmax = 0.0;               // mahalanobis cutoff matching the bin radius
    int32_t id = 0;                  // index into the scene arrays
};

struct RenderOutput {
    Image color;     // H x W x 3, linear
    DepthMap depth;  // H x W, alpha-blended camera-space z, 0 where nothing hit
    Image alpha;     // H x W x 1, accumulated blend weight

    // Replay state consumed by render_backward; must match the inputs it was
    // produced from (checked via fingerprint).
    bool has_replay = false;
    uint64_t fingerprint = 0;
    int tiles_x = 0, tiles_y = 0;
    std::vector<SplatCache> splats;           // sorted front to back
    std::vector<std::vector<int32_t>> tiles;  // per tile: indices into splats
    std::vector<int32_t> processed;           // per pixel: splats consumed before termination
};

struct ParamGrads {
    std::vector<Vec3> d_positions;
    std::vector<Vec3> d_colors;
    std::vector<Vec4> d_rotations;
    std::vector<Vec3> d_log_scales;
    std::vector<double> d_logit_opacities;
    std::vector<Vec2> d_center2d;        // wrt RenderOptions::center_offsets
    std::vector<uint8_t> contributed;    // touched at least one pixel
    Vec6 d_pose = Vec6::Zero();          // wrt left tangent of the camera pose
    int render_width = 0, render_height = 0;  // set by render_backward

    void resize_zero(size_t n);
    bool all_finite() const;
};

// Tile-binned front-to-back alpha blending. Splats are sorted by camera-space
// depth (ties broken by index), per-pixel contribution is
// alpha * exp(-0.5 * d' Lambda d) clipped at kAlphaClip, and blending stops
// once transmittance falls below kTransmittanceMin. Background is black with
// zero depth. Empty scenes render to background.
RenderOutput render(const GaussianScene& scene, const PoseSE3& T, const CameraIntrinsics& K,
                    const RenderOptions& options = {});

// Same blending math evaluated for every (pixel, splat) pair: no tiles, no
// binning cutoff, no early termination. Test oracle for render().
RenderOutput render_reference(const GaussianScene& scene, const PoseSE3& T,
                              const CameraIntrinsics& K, const RenderOptions& options = {});

// Exact adjoint of the clipped, early-terminated forward pass. d_color is
// H x W x 3 and d_depth H x W x 1 of loss cotangents. Throws ReplayMismatch if
// `forward` was not produced from the same (scene, T, K, offsets).
ParamGrads render_backward(const GaussianScene& scene, const PoseSE3& T,
                           const CameraIntrinsics& K, const RenderOutput& forward,
                           const Image& d_color, const Image& d_depth,
                           const RenderOptions& options = {});

// Adds this render's positional gradient norms into the densification
// statistics of gaussians that contributed. Gradients are rescaled to
// half-image units so the densify threshold is resolution independent.
void accumulate_densify_stats(GaussianScene& scene, const ParamGrads& grads);

// Thread cap from SPLAT_THREADS (>= 1); 1 when unset or unparsable.
int splat_thread_count();

} // namespace splatrec
