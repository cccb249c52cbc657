// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <vector>

#include "splatrec/io/trajectory.hpp"
#include "splatrec/optimizer.hpp"
#include "splatrec/providers.hpp"

namespace splatrec {

// Full reconstruction configuration. Frame 0 anchors the world (identity
// pose); every later frame is tracked photometrically against the splats
// visible in its predecessor, then the global scene is refined under the
// combined color/projection/depth objective.
struct PipelineConfig {
    LossConfig loss;
    OptimizerConfig optimizer;
    DensifyConfig densify;

    int iterations_per_frame = 120;
    // Pose-only iterations under the full objective (scene frozen) before
    // the joint window. The photometric tracker alone can stall a pixel or
    // two off; the reprojection term has its sharp zero at the true pose
    // only while the scene still agrees with the earlier views, so the pose
    // must be anchored before the scene is allowed to deform around it.
    int pose_anchor_iterations = 60;
    // Photometric fit of the frame-0 splats. Deliberately brief: a longer
    // single-view fit reaches a quality the later multi-view objective
    // cannot sustain, which would break append-consistency.
    int init_iterations = 30;
    int init_stride = 2;       // pixel stride of the initial back-projection
    double init_opacity = 0.1;

    // Replay: besides the current frame, each refinement iteration renders
    // up to replay_keyframes earlier keyframes (the previous one always,
    // carrying the projection-consistency term, plus replay_keyframes - 1
    // random older ones every replay_interval iterations), so integrated
    // views keep receiving gradient and are not forgotten.
    int replay_keyframes = 4;
    int replay_interval = 1;

    double prune_max_scale = 1.0;    // scene units
    int opacity_reset_interval = 0;  // frames; 0 disables
    double opacity_reset_cap = 0.01;
    double visible_margin_px = 32.0; // frustum slack for the local scene
    double min_alpha_coverage = 0.5; // rendered-depth validity threshold

    bool constant_velocity = false;  // pose init: extrapolate instead of hold
    bool normalize_frame0_depth = true;
    bool deterministic = true; // accepted for config compatibility; rendering
                               // reductions always run in a fixed order, so
                               // runs are deterministic for any fixed
                               // SPLAT_THREADS value
    uint64_t seed = 1;
    std::vector<int> holdout;  // frames excluded from training, fitted after

    void validate() const;
};

// One row of the run report. Held-out frames carry trained = false and only
// pose + psnr are meaningful; a non-empty error marks a skipped frame.
struct FrameRecord {
    int frame = 0;
    bool trained = true;
    double l_rgb = 0.0, l_pgc = 0.0, l_dgc = 0.0, l_total = 0.0;
    double psnr = 0.0; // re-render vs. the input frame after integration
    PoseSE3 pose_w2c;
    int gaussians = 0;
    int pose_iterations = 0;
    double wall_seconds = 0.0;
    std::string error;
};

struct PipelineState {
    CameraIntrinsics K;
    GaussianScene scene;
    Trajectory trajectory_w2c; // timestamp = frame index
    std::vector<FrameRecord> report;

    // Pixels of integrated frames, kept for replay supervision.
    std::vector<int> keyframes;
    std::vector<Image> keyframe_images;

    std::mt19937_64 rng;
    int frames_since_reset = 0;
};

// Back-projects frame 0 (positions frozen) and fits colors/shapes/opacities
// photometrically. The trajectory starts at the identity.
PipelineState init_stage(const Image& frame0, const DepthMap& depth0,
                         const CameraIntrinsics& K, const PipelineConfig& cfg);

// Tracks frame_index against the scene and refines the scene on the new
// view. Throws DivergedPose when tracking fails badly; other errors
// propagate for the caller to record.
void step_frame(PipelineState& state, int frame_index, const Image& frame,
                const DepthProvider& depths, const MatchProvider& matches,
                const PipelineConfig& cfg);

struct RunResult {
    GaussianScene scene;
    Trajectory trajectory_w2c;
    std::vector<FrameRecord> report;
    bool diverged = false;
    std::string abort_reason;
};

// init_stage on frame 0, step_frame over the rest. Held-out frames are
// skipped during training; afterwards their poses are fitted photometrically
// against the frozen scene and reported with re-render PSNR. Per-frame
// errors are recorded and the frame skipped; only frame 0 errors abort.
// DivergedPose stops processing and returns the partial result.
RunResult run(const std::vector<Image>& frames, const DepthProvider& depths,
              const MatchProvider& matches, const CameraIntrinsics& K,
              const PipelineConfig& cfg);

} // namespace splatrec
