// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "splatrec/metrics.hpp"
#include "splatrec/rasterizer.hpp"

namespace splatrec {
namespace {

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t mix3(uint64_t a, uint64_t b, uint64_t c) {
    return splitmix(splitmix(a + 0x9e3779b97f4a7c15ULL * (b + 1)) ^ c);
}

void add_grads(ParamGrads& dst, const ParamGrads& src) {
    if (dst.d_positions.size() != src.d_positions.size())
        raise(Err::ShapeMismatch, "gradient accumulation across different scene sizes");
    for (size_t i = 0; i < dst.d_positions.size(); ++i) {
        dst.d_positions[i] += src.d_positions[i];
        dst.d_colors[i] += src.d_colors[i];
        dst.d_rotations[i] += src.d_rotations[i];
        dst.d_log_scales[i] += src.d_log_scales[i];
        dst.d_logit_opacities[i] += src.d_logit_opacities[i];
        dst.contributed[i] |= src.contributed[i];
    }
    dst.d_pose += src.d_pose;
}

void scale_in_place(Image& img, double s) {
    for (double& v : img.raw()) v *= s;
}

// Renders one supervision view and accumulates its weighted gradients.
// d_depth carries the geometric term of that view (projection consistency
// for the previous keyframe, depth correlation for the current frame).
// d_pose_out receives this render's pose gradient when the view's camera is
// still being optimized; for frozen keyframe poses it stays null.
double supervised_backward(GaussianScene& scene, const PoseSE3& T, const CameraIntrinsics& K,
                           const Image& target, const Image& d_depth, double* rgb_value,
                           const PipelineConfig& cfg, const RenderOutput& out,
                           ParamGrads& total, Vec6* d_pose_out = nullptr) {
    ScalarImageLoss rgb = rgb_loss(out.color, target, cfg.loss);
    scale_in_place(rgb.d_a, cfg.loss.lambda_rgb);
    ParamGrads g = render_backward(scene, T, K, out, rgb.d_a, d_depth);
    accumulate_densify_stats(scene, g);
    add_grads(total, g);
    if (d_pose_out) *d_pose_out += g.d_pose;
    if (rgb_value) *rgb_value = rgb.value;
    return cfg.loss.lambda_rgb * rgb.value;
}

// Blended depth under-reports the surface by the uncaptured transmittance;
// dividing by accumulated alpha gives the expected depth of what was hit.
// Pixels below the coverage threshold are zeroed and masked out downstream.
DepthMap coverage_depth(const RenderOutput& out, double min_alpha) {
    DepthMap d(out.depth.height(), out.depth.width());
    for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x) {
            const double a = out.alpha.at(y, x, 0);
            d.at(y, x) = a >= min_alpha ? out.depth.at(y, x) / a : 0.0;
        }
    return d;
}

// Adjoint of the division above, back onto the raw blended depth. The path
// through alpha itself is dropped; opacity is steered by the color loss.
void chain_to_blended(Image& d_depth, const Image& alpha, double min_alpha) {
    for (int y = 0; y < d_depth.height(); ++y)
        for (int x = 0; x < d_depth.width(); ++x) {
            const double a = alpha.at(y, x, 0);
            d_depth.at(y, x, 0) = a >= min_alpha ? d_depth.at(y, x, 0) / a : 0.0;
        }
}

const TrajectoryEntry* find_entry(const Trajectory& traj, int frame) {
    for (const TrajectoryEntry& e : traj)
        if (e.timestamp == static_cast<double>(frame)) return &e;
    return nullptr;
}

PoseSE3 nearest_pose(const Trajectory& traj, int frame) {
    const TrajectoryEntry* best = nullptr;
    double best_dist = 0.0;
    for (const TrajectoryEntry& e : traj) {
        const double dist = std::abs(e.timestamp - static_cast<double>(frame));
        if (!best || dist < best_dist) {
            best = &e;
            best_dist = dist;
        }
    }
    return best->pose;
}

GaussianScene local_snapshot(const GaussianScene& scene, const PoseSE3& T,
                             const CameraIntrinsics& K, double margin_px) {
    const std::vector<int32_t> vis = visible_indices(scene, T, K, margin_px);
    if (vis.empty()) return scene; // degenerate view; track against everything
    return select(scene, vis);
}

} // namespace

void PipelineConfig::validate() const {
    loss.validate();
    optimizer.validate();
    if (iterations_per_frame < 1 || init_iterations < 1)
        raise(Err::InvalidArgument, "iteration counts must be positive");
    if (pose_anchor_iterations < 0)
        raise(Err::InvalidArgument, "pose_anchor_iterations must be >= 0");
    if (init_stride < 1) raise(Err::InvalidArgument, "init_stride must be >= 1");
    if (init_opacity <= 0.0 || init_opacity >= 1.0)
        raise(Err::InvalidArgument, "init_opacity must be in (0,1)");
    if (replay_keyframes < 1 || replay_interval < 1)
        raise(Err::InvalidArgument, "replay settings must be positive");
    if (prune_max_scale <= 0.0) raise(Err::InvalidArgument, "prune_max_scale must be > 0");
    if (opacity_reset_cap <= 0.0 || opacity_reset_cap >= 1.0)
        raise(Err::InvalidArgument, "opacity_reset_cap must be in (0,1)");
    if (opacity_reset_interval < 0)
        raise(Err::InvalidArgument, "opacity_reset_interval must be >= 0");
    if (visible_margin_px < 0.0)
        raise(Err::InvalidArgument, "visible_margin_px must be >= 0");
    if (min_alpha_coverage < 0.0 || min_alpha_coverage > 1.0)
        raise(Err::InvalidArgument, "min_alpha_coverage must be in [0,1]");
    for (int h : holdout)
        if (h <= 0) raise(Err::InvalidArgument, "holdout frames must be >= 1");
}

PipelineState init_stage(const Image& frame0, const DepthMap& depth0,
                         const CameraIntrinsics& K, const PipelineConfig& cfg) {
    cfg.validate();
    K.validate();

    DepthMap depth = depth0;
    if (cfg.normalize_frame0_depth) {
        // Monocular depth has no absolute scale; pinning the median to 1.0
        // fixes the gauge the whole reconstruction lives in.
        const double scale = 1.0 / depth.median_valid();
        for (double& v : depth.raw())
            if (v > 0.0) v *= scale;
    }

    PipelineState state;
    state.K = K;
    state.rng.seed(splitmix(cfg.seed));
    state.scene =
        init_from_depth(frame0, depth, K, PoseSE3::identity(), cfg.init_stride,
                        cfg.init_opacity);

    const auto t0 = std::chrono::steady_clock::now();
    const Image zero_depth(K.height, K.width, 1, 0.0);
    for (int iter = 0; iter < cfg.init_iterations; ++iter) {
        const RenderOutput out = render(state.scene, PoseSE3::identity(), K);
        ScalarImageLoss rgb = rgb_loss(out.color, frame0, cfg.loss);
        ParamGrads g =
            render_backward(state.scene, PoseSE3::identity(), K, out, rgb.d_a, zero_depth);
        // Positions stay on the back-projected depth until multi-view signal
        // exists; only appearance and shape are fitted here.
        std::fill(g.d_positions.begin(), g.d_positions.end(), Vec3::Zero());
        scene_adam_step(state.scene, g, cfg.optimizer);
    }

    state.trajectory_w2c.push_back({0.0, PoseSE3::identity()});
    state.keyframes.push_back(0);
    state.keyframe_images.push_back(frame0);

    const RenderOutput out = render(state.scene, PoseSE3::identity(), K);
    FrameRecord rec;
    rec.frame = 0;
    rec.l_rgb = rgb_loss(out.color, frame0, cfg.loss).value;
    rec.l_total = cfg.loss.lambda_rgb * rec.l_rgb;
    rec.psnr = psnr(out.color, frame0);
    rec.pose_w2c = PoseSE3::identity();
    rec.gaussians = static_cast<int>(state.scene.size());
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.report.push_back(std::move(rec));
    return state;
}

void step_frame(PipelineState& state, int frame_index, const Image& frame,
                const DepthProvider& depths, const MatchProvider& matches,
                const PipelineConfig& cfg) {
    if (state.keyframes.empty())
        raise(Err::InvalidArgument, "step_frame before init_stage");
    if (frame.height() != state.K.height || frame.width() != state.K.width ||
        frame.channels() != 3)
        raise(Err::ShapeMismatch, "frame dimensions do not match intrinsics");

    const auto t0 = std::chrono::steady_clock::now();
    const CameraIntrinsics& K = state.K;
    const PoseSE3 T_prev = state.trajectory_w2c.back().pose;
    const int prev_kf = state.keyframes.back();
    const Image& prev_img = state.keyframe_images.back();
    const PoseSE3 T_prev_kf = find_entry(state.trajectory_w2c, prev_kf)->pose;

    // Inputs are fetched before any state mutation so a missing or malformed
    // resource leaves the pipeline exactly where it was.
    const DepthMap provider_depth = depths.get_depth(frame_index);
    if (provider_depth.width() != K.width || provider_depth.height() != K.height)
        raise(Err::MalformedDepth, "provider depth does not match intrinsics");
    MatchSet match_set;
    if (matches.has_matches(prev_kf, frame_index))
        match_set = matches.get_matches(prev_kf, frame_index);

    PoseSE3 T_init = T_prev;
    if (cfg.constant_velocity && state.trajectory_w2c.size() >= 2) {
        const PoseSE3& T_pp =
            state.trajectory_w2c[state.trajectory_w2c.size() - 2].pose;
        T_init = pose_compose(pose_compose(T_prev, T_pp.inverse()), T_prev);
    }

    // Track: photometric pose fit against the splats the last view could see.
    const GaussianScene local = local_snapshot(state.scene, T_prev, K, cfg.visible_margin_px);
    const PoseEstimate est =
        estimate_relative_pose(local, frame, K, T_init, cfg.optimizer, cfg.loss);
    PoseSE3 T_cur = est.pose;
    state.trajectory_w2c.push_back({static_cast<double>(frame_index), T_cur});

    PoseAdamState pose_state;
    int pose_steps = 0;
    auto pose_step = [&](const Vec6& g) {
        const double decay = std::pow(cfg.optimizer.pose_lr_decay,
                                      pose_steps / cfg.optimizer.pose_decay_every);
        pose_adam_step(T_cur, g, pose_state, cfg.optimizer.pose_lr_rotation * decay,
                       cfg.optimizer.pose_lr_translation * decay, cfg.optimizer);
        ++pose_steps;
    };

    const Image zero_depth(K.height, K.width, 1, 0.0);

    // Anchor: pose-only steps under the full objective. The photometric
    // tracker stalls within a pixel or two; the reprojection term has its
    // sharp zero at the true pose only while the scene still agrees with
    // the earlier views, so the pose converges before the scene may move.
    if (cfg.pose_anchor_iterations > 0) {
        const RenderOutput out_prev = render(state.scene, T_prev_kf, K);
        const DepthMap cov_prev = coverage_depth(out_prev, cfg.min_alpha_coverage);
        const std::vector<uint8_t> mask_prev =
            depth_mask(cov_prev, cfg.loss.depth_clamp_k);
        const Image depth_prev_img = depth_to_image(cov_prev);
        for (int iter = 0; iter < cfg.pose_anchor_iterations; ++iter) {
            const RenderOutput out = render(state.scene, T_cur, K);
            ScalarImageLoss rgb = rgb_loss(out.color, frame, cfg.loss);
            scale_in_place(rgb.d_a, cfg.loss.lambda_rgb);
            Image d_depth = zero_depth;
            try {
                const DepthMap covered = coverage_depth(out, cfg.min_alpha_coverage);
                DgcResult dgc = dgc_loss(provider_depth, depth_to_image(covered),
                                         depth_mask(covered, cfg.loss.depth_clamp_k),
                                         cfg.loss,
                                         mix3(cfg.seed ^ 0x616e63686f72ULL,
                                              static_cast<uint64_t>(frame_index),
                                              static_cast<uint64_t>(iter)));
                d_depth = std::move(dgc.d_depth_rendered);
                scale_in_place(d_depth, cfg.loss.lambda_dgc);
                chain_to_blended(d_depth, out.alpha, cfg.min_alpha_coverage);
            } catch (const SplatError& e) {
                if (e.code() != Err::NoValidPatches) throw;
            }
            ParamGrads g = render_backward(state.scene, T_cur, K, out, rgb.d_a, d_depth);
            Vec6 d_pose = g.d_pose;
            if (!match_set.empty()) {
                try {
                    PgcResult pgc = pgc_loss(match_set, depth_prev_img, mask_prev,
                                             T_prev_kf, T_cur, K, cfg.loss);
                    d_pose += cfg.loss.lambda_pgc * pgc.d_pose_cur;
                } catch (const SplatError& e) {
                    if (e.code() != Err::NoValidMatches) throw;
                }
            }
            pose_step(d_pose);
        }
    }

    // Frame boundary: growth is continuous, never terminated. Running it at
    // entry keeps every clone/split/reset inside a refinement window, so the
    // scene handed back is always a refined one.
    densify(state.scene, cfg.densify, state.rng);
    prune(state.scene, cfg.densify.prune_opacity, cfg.prune_max_scale);
    if (cfg.opacity_reset_interval > 0 &&
        ++state.frames_since_reset >= cfg.opacity_reset_interval) {
        reset_opacity(state.scene, cfg.opacity_reset_cap);
        state.frames_since_reset = 0;
    }

    // Refine: the new view supervises color and depth correlation, the
    // previous keyframe carries the projection-consistency term, and extra
    // replayed keyframes keep earlier views from being forgotten.
    FrameRecord rec;
    rec.frame = frame_index;
    rec.pose_w2c = T_cur;
    rec.pose_iterations = est.iterations;

    // Scene refinement window. The pose found above is now part of the
    // trajectory and stays fixed; letting it drift here would allow the
    // scene to co-deform around a sliding camera.
    for (int iter = 0; iter < cfg.iterations_per_frame; ++iter) {
        ParamGrads total;
        total.resize_zero(state.scene.size());
        double l_total = 0.0;

        // Current frame: RGB plus depth-correlation supervision.
        {
            const RenderOutput out = render(state.scene, T_cur, K);
            const DepthMap covered = coverage_depth(out, cfg.min_alpha_coverage);
            const std::vector<uint8_t> mask = depth_mask(covered, cfg.loss.depth_clamp_k);
            Image d_depth = zero_depth;
            rec.l_dgc = 0.0;
            try {
                DgcResult dgc =
                    dgc_loss(provider_depth, depth_to_image(covered), mask, cfg.loss,
                             mix3(cfg.seed, static_cast<uint64_t>(frame_index),
                                  static_cast<uint64_t>(iter)));
                rec.l_dgc = dgc.value;
                d_depth = std::move(dgc.d_depth_rendered);
                scale_in_place(d_depth, cfg.loss.lambda_dgc);
                chain_to_blended(d_depth, out.alpha, cfg.min_alpha_coverage);
            } catch (const SplatError& e) {
                if (e.code() != Err::NoValidPatches) throw;
            }
            l_total += supervised_backward(state.scene, T_cur, K, frame, d_depth,
                                           &rec.l_rgb, cfg, out, total);
            l_total += cfg.loss.lambda_dgc * rec.l_dgc;
        }

        // Previous keyframe: replay RGB plus projection consistency. Its
        // rendered depth is what the matches are lifted through. The render's
        // own pose gradient is discarded (that camera is frozen); the
        // reprojection term still steers the current pose.
        {
            const RenderOutput out = render(state.scene, T_prev_kf, K);
            Image d_depth = zero_depth;
            rec.l_pgc = 0.0;
            if (!match_set.empty()) {
                const DepthMap covered = coverage_depth(out, cfg.min_alpha_coverage);
                const std::vector<uint8_t> mask =
                    depth_mask(covered, cfg.loss.depth_clamp_k);
                try {
                    PgcResult pgc =
                        pgc_loss(match_set, depth_to_image(covered), mask, T_prev_kf,
                                 T_cur, K, cfg.loss);
                    rec.l_pgc = pgc.value;
                    d_depth = std::move(pgc.d_depth_prev);
                    scale_in_place(d_depth, cfg.loss.lambda_pgc);
                    chain_to_blended(d_depth, out.alpha, cfg.min_alpha_coverage);
                } catch (const SplatError& e) {
                    if (e.code() != Err::NoValidMatches) throw;
                }
            }
            l_total += supervised_backward(state.scene, T_prev_kf, K, prev_img, d_depth,
                                           nullptr, cfg, out, total);
            l_total += cfg.loss.lambda_pgc * rec.l_pgc;
        }

        // Occasional replay of older keyframes (anti-forgetting).
        if (iter % cfg.replay_interval == 0 && state.keyframes.size() >= 2 &&
            cfg.replay_keyframes >= 2) {
            std::vector<int> pool(state.keyframes.begin(), state.keyframes.end() - 1);
            const int want =
                std::min<int>(cfg.replay_keyframes - 1, static_cast<int>(pool.size()));
            for (int pick = 0; pick < want; ++pick) {
                const int j =
                    pick + static_cast<int>(state.rng() %
                                            static_cast<uint64_t>(pool.size() - pick));
                std::swap(pool[pick], pool[j]);
                const int kf = pool[pick];
                const size_t slot = static_cast<size_t>(
                    std::find(state.keyframes.begin(), state.keyframes.end(), kf) -
                    state.keyframes.begin());
                const PoseSE3 T_kf = find_entry(state.trajectory_w2c, kf)->pose;
                const RenderOutput out = render(state.scene, T_kf, K);
                l_total += supervised_backward(state.scene, T_kf, K,
                                               state.keyframe_images[slot], zero_depth,
                                               nullptr, cfg, out, total);
            }
        }

        rec.l_total = l_total;
        scene_adam_step(state.scene, total, cfg.optimizer);
    }
    state.trajectory_w2c.back().pose = T_cur;
    rec.pose_w2c = T_cur;

    state.keyframes.push_back(frame_index);
    state.keyframe_images.push_back(frame);

    rec.psnr = psnr(render(state.scene, T_cur, K).color, frame);
    rec.gaussians = static_cast<int>(state.scene.size());
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.report.push_back(std::move(rec));
}

RunResult run(const std::vector<Image>& frames, const DepthProvider& depths,
              const MatchProvider& matches, const CameraIntrinsics& K,
              const PipelineConfig& cfg) {
    cfg.validate();
    if (frames.empty()) raise(Err::InvalidArgument, "need at least one frame");
    for (int h : cfg.holdout)
        if (h >= static_cast<int>(frames.size()))
            raise(Err::InvalidArgument, "holdout frame beyond sequence end");
    auto held_out = [&](int t) {
        return std::find(cfg.holdout.begin(), cfg.holdout.end(), t) != cfg.holdout.end();
    };

    PipelineState state = init_stage(frames[0], depths.get_depth(0), K, cfg);

    RunResult result;
    for (int t = 1; t < static_cast<int>(frames.size()); ++t) {
        if (held_out(t)) continue;
        try {
            step_frame(state, t, frames[t], depths, matches, cfg);
        } catch (const SplatError& e) {
            FrameRecord rec;
            rec.frame = t;
            rec.trained = false;
            rec.error = e.what();
            state.report.push_back(std::move(rec));
            if (e.code() == Err::DivergedPose) {
                result.diverged = true;
                result.abort_reason = e.what();
                break;
            }
            // Other per-frame failures (missing or malformed inputs) skip
            // the frame; the chain continues from the last good keyframe.
        }
    }

    // Held-out frames: fit a camera against the frozen scene, render, score.
    if (!result.diverged) {
        for (int t = 1; t < static_cast<int>(frames.size()); ++t) {
            if (!held_out(t)) continue;
            FrameRecord rec;
            rec.frame = t;
            rec.trained = false;
            try {
                const PoseSE3 T_near = nearest_pose(state.trajectory_w2c, t);
                const GaussianScene local =
                    local_snapshot(state.scene, T_near, K, cfg.visible_margin_px);
                const PoseEstimate est =
                    estimate_relative_pose(local, frames[t], K, T_near, cfg.optimizer,
                                           cfg.loss);
                rec.pose_w2c = est.pose;
                rec.pose_iterations = est.iterations;
                rec.l_rgb = est.final_loss;
                rec.psnr = psnr(render(state.scene, est.pose, K).color, frames[t]);
                state.trajectory_w2c.push_back({static_cast<double>(t), est.pose});
            } catch (const SplatError& e) {
                rec.error = e.what();
            }
            state.report.push_back(std::move(rec));
        }
    }

    std::sort(state.trajectory_w2c.begin(), state.trajectory_w2c.end(),
              [](const TrajectoryEntry& a, const TrajectoryEntry& b) {
                  return a.timestamp < b.timestamp;
              });
    std::sort(state.report.begin(), state.report.end(),
              [](const FrameRecord& a, const FrameRecord& b) { return a.frame < b.frame; });

    result.scene = std::move(state.scene);
    result.trajectory_w2c = std::move(state.trajectory_w2c);
    result.report = std::move(state.report);
    return result;
}

} // namespace splatrec
