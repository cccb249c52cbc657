// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "splatrec/geometry.hpp"
#include "splatrec/image.hpp"
#include "splatrec/matches.hpp"

namespace splatrec {

// Weights and knobs for every training objective. lambda_rgb scales the
// photometric term in the total; dssim_mix is the DSSIM fraction inside it.
struct LossConfig {
    double lambda_rgb = 1.0;
    double dssim_mix = 0.2;
    double lambda_pgc = 0.05;
    double lambda_dgc = 0.1;
    int dgc_patch_size = 16;
    int dgc_patch_count = 32;
    double pearson_eps = 1e-12;
    double depth_clamp_k = 10.0;
    double confidence_min = 0.2;
    int ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_c1 = 0.01 * 0.01;
    double ssim_c2 = 0.03 * 0.03;
    bool pgc_per_match = false;

    void validate() const;
};

struct ScalarImageLoss {
    double value = 0.0;
    Image d_a;
};

// Mean absolute difference; subgradient 0 where a == b.
ScalarImageLoss l1_loss(const Image& a, const Image& b);

// (1 - SSIM(a, b)) / 2 with a Gaussian window, evaluated over the region
// where the window fits entirely inside the image. Inputs in [0,1].
ScalarImageLoss dssim_loss(const Image& a, const Image& b, const LossConfig& cfg = {});

// Mean SSIM over the same valid region; shared by dssim_loss and the metrics.
double ssim_mean(const Image& a, const Image& b, const LossConfig& cfg = {});

// (1 - dssim_mix) * L1 + dssim_mix * DSSIM, gradient w.r.t. `rendered`.
ScalarImageLoss rgb_loss(const Image& rendered, const Image& target, const LossConfig& cfg = {});

// Marks rendered depth invalid wherever the accumulated alpha coverage is
// below min_alpha, so background and grazing pixels drop out of the masks.
DepthMap depth_from_render(const DepthMap& depth, const Image& alpha, double min_alpha = 0.5);

// H x W x 1 copy of a depth raster, for loss gradients over rendered depth.
Image depth_to_image(const DepthMap& depth);

// True where the pixel is valid and depth <= k * median(valid depth).
// All-invalid input yields an all-false mask.
std::vector<uint8_t> depth_mask(const DepthMap& depth, double k);

// Bilinear footprint of a sample at pixel coordinates (u, v); taps are
// clamped to the image border, weights sum to 1.
struct BilinearTaps {
    int x[4];
    int y[4];
    double w[4];
};
BilinearTaps bilinear_taps(int width, int height, double u, double v);
double sample_bilinear(const Image& img, double u, double v, int channel = 0);

struct PgcResult {
    double value = 0.0;
    Image d_depth_prev;
    Vec6 d_pose_cur = Vec6::Zero();
    int used_matches = 0;
};

// Projection consistency between feature-match displacements and the
// displacement implied by back-projecting the previous frame's rendered
// depth and re-projecting with the current pose. Matches below the
// confidence threshold or landing on masked depth are dropped; gradients
// flow to the previous depth image and the current pose only. The pose
// gradient lives in the same left tangent convention as pose_retract.
PgcResult pgc_loss(const MatchSet& matches, const Image& depth_prev,
                   const std::vector<uint8_t>& mask_prev, const PoseSE3& T_prev,
                   const PoseSE3& T_cur, const CameraIntrinsics& K, const LossConfig& cfg = {});

struct DgcResult {
    double value = 0.0;
    Image d_depth_rendered;
    int used_patches = 0;
};

// One minus the mean patchwise Pearson correlation between provider and
// rendered depth. Patches are square, sampled with the given seed, and
// rejected unless every covered pixel is valid in both maps and the mask;
// sampling stops after 10x the requested count of attempts.
DgcResult dgc_loss(const DepthMap& depth_provider, const Image& depth_rendered,
                   const std::vector<uint8_t>& mask, const LossConfig& cfg, uint64_t rng_seed);

struct TotalLossResult {
    double value = 0.0;
    Image d_color;
    Image d_depth;
    Vec6 d_pose = Vec6::Zero();
};

// Weighted sum of the term values and of their gradients. Null terms are
// treated as absent. Throws NonFiniteLoss if any input value is non-finite.
TotalLossResult total_loss(const ScalarImageLoss& rgb, const PgcResult* pgc, const DgcResult* dgc,
                           const LossConfig& cfg);

} // namespace splatrec
