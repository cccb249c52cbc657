// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "splatrec/image.hpp"
#include "splatrec/io/trajectory.hpp"
#include "splatrec/losses.hpp"

namespace splatrec {

// 10 * log10(1 / MSE) for unit-range images, capped at 100 dB.
double psnr(const Image& a, const Image& b);

// Mean SSIM with the same Gaussian window as dssim_loss.
double ssim_metric(const Image& a, const Image& b, const LossConfig& cfg = {});

// RMSE of camera positions after a least-squares rigid alignment of the
// predicted trajectory onto the ground truth (similarity alignment when
// align_scale is set). Trajectories are index-matched camera-to-world poses.
double ate(const std::vector<TrajectoryEntry>& predicted,
           const std::vector<TrajectoryEntry>& truth, bool align_scale = false);

struct RpeResult {
    double translation = 0.0;
    double rotation_deg = 0.0;
};

// RMSE of relative-pose discrepancies at the given frame separation.
RpeResult rpe(const std::vector<TrajectoryEntry>& predicted,
              const std::vector<TrajectoryEntry>& truth, int delta = 1);

} // namespace splatrec
