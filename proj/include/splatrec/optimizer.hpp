// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "splatrec/losses.hpp"
#include "splatrec/rasterizer.hpp"
#include "splatrec/scene.hpp"

namespace splatrec {

struct OptimizerConfig {
    double lr_position = 2e-4;
    double lr_color = 2.5e-3;
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;

    double pose_lr_rotation = 1e-3;
    double pose_lr_translation = 2e-3;
    double pose_lr_decay = 0.95;  // multiplied in every pose_decay_every iterations
    int pose_decay_every = 50;
    int pose_iterations = 200;

    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Early stop for pose estimation when the loss delta falls below this;
    // zero disables it.
    double loss_tolerance = 0.0;

    void validate() const;
};

// Standard Adam update with bias correction over a flat parameter array.
// `step` is the 1-based update count shared by the moment state. Throws
// NonFiniteGradient if any gradient entry is not finite.
void adam_step(double* params, const double* grads, GaussianScene::Moments& state, size_t n,
               int64_t step, double lr, const OptimizerConfig& cfg);

// One Adam update over every gaussian parameter group, with the per-group
// learning rates; quaternions are renormalized afterwards so the scene stays
// a valid rigid-splat set.
void scene_adam_step(GaussianScene& scene, const ParamGrads& grads, const OptimizerConfig& cfg);

struct PoseAdamState {
    Vec6 m = Vec6::Zero();
    Vec6 v = Vec6::Zero();
    int64_t step = 0;
};

// Adam on the 6-dof left tangent, retracted onto SE(3) after the update. The
// rotation and translation halves use separate learning rates.
void pose_adam_step(PoseSE3& pose, const Vec6& grad, PoseAdamState& state, double lr_rotation,
                    double lr_translation, const OptimizerConfig& cfg);

struct PoseEstimate {
    PoseSE3 pose;
    double final_loss = 0.0;
    int iterations = 0;
};

// Photometric relative-pose estimation: gradient descent on
// rgb_loss(render(scene, A), frame_next) over A only, all gaussian
// attributes frozen. Returns the best-loss pose seen. Throws DivergedPose
// when the loss stays above 10x its initial value for 50 consecutive
// iterations.
PoseEstimate estimate_relative_pose(const GaussianScene& scene, const Image& frame_next,
                                    const CameraIntrinsics& K, const PoseSE3& init = PoseSE3{},
                                    const OptimizerConfig& ocfg = {},
                                    const LossConfig& lcfg = {});

} // namespace splatrec
