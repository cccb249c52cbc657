// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/optimizer.hpp"

#include <cmath>
#include <limits>

namespace splatrec {

namespace {

constexpr double kDivergenceFactor = 10.0;
constexpr int kDivergencePatience = 50;
// Below this the photometric loss is numerical noise: stop instead of letting
// Adam normalize roundoff-sized gradients into full-size steps.
constexpr double kConvergedLoss = 1e-12;
// Keeps the 10x divergence test meaningful when the initial loss is ~zero.
constexpr double kDivergenceFloor = 1e-9;

} // namespace

void OptimizerConfig::validate() const {
    if (!(lr_position > 0) || !(lr_color > 0) || !(lr_rotation > 0) || !(lr_scale > 0) ||
        !(lr_opacity > 0) || !(pose_lr_rotation > 0) || !(pose_lr_translation > 0))
        raise(Err::InvalidArgument, "optimizer step sizes must be positive");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
        raise(Err::InvalidArgument, "adam betas must lie in [0, 1)");
    if (!(eps > 0))
        raise(Err::InvalidArgument, "adam eps must be positive");
    if (pose_iterations < 1 || pose_decay_every < 1)
        raise(Err::InvalidArgument, "pose iteration counts must be positive");
    if (!(pose_lr_decay > 0) || pose_lr_decay > 1)
        raise(Err::InvalidArgument, "pose_lr_decay must lie in (0, 1]");
    if (loss_tolerance < 0)
        raise(Err::InvalidArgument, "loss_tolerance must be non-negative");
}

void adam_step(double* params, const double* grads, GaussianScene::Moments& state, size_t n,
               int64_t step, double lr, const OptimizerConfig& cfg) {
    if (state.m.size() < n || state.v.size() < n)
        raise(Err::ShapeMismatch, "adam_step: moment state smaller than parameter array");
    for (size_t i = 0; i < n; ++i)
        if (!std::isfinite(grads[i]))
            raise(Err::NonFiniteGradient, "adam_step: non-finite gradient entry");
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t i = 0; i < n; ++i) {
        double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

void scene_adam_step(GaussianScene& scene, const ParamGrads& grads, const OptimizerConfig& cfg) {
    size_t n = scene.size();
    if (grads.d_positions.size() != n || grads.d_colors.size() != n ||
        grads.d_rotations.size() != n || grads.d_log_scales.size() != n ||
        grads.d_logit_opacities.size() != n)
        raise(Err::ShapeMismatch, "scene_adam_step: gradient arrays disagree with scene size");
    scene.sync_state();
    int64_t step = ++scene.adam_steps;
    if (n == 0)
        return;
    adam_step(scene.positions[0].data(), grads.d_positions[0].data(), scene.mom_position, 3 * n,
              step, cfg.lr_position, cfg);
    adam_step(scene.colors[0].data(), grads.d_colors[0].data(), scene.mom_color, 3 * n, step,
              cfg.lr_color, cfg);
    adam_step(scene.rotations[0].data(), grads.d_rotations[0].data(), scene.mom_rotation, 4 * n,
              step, cfg.lr_rotation, cfg);
    adam_step(scene.log_scales[0].data(), grads.d_log_scales[0].data(), scene.mom_scale, 3 * n,
              step, cfg.lr_scale, cfg);
    adam_step(scene.logit_opacities.data(), grads.d_logit_opacities.data(), scene.mom_opacity, n,
              step, cfg.lr_opacity, cfg);
    for (Vec4& q : scene.rotations)
        q.normalize();
    for (Vec3& c : scene.colors)
        c = c.cwiseMax(0.0).cwiseMin(1.0);
}

void pose_adam_step(PoseSE3& pose, const Vec6& grad, PoseAdamState& state, double lr_rotation,
                    double lr_translation, const OptimizerConfig& cfg) {
    if (!grad.allFinite())
        raise(Err::NonFiniteGradient, "pose_adam_step: non-finite pose gradient");
    int64_t step = ++state.step;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    Vec6 xi;
    for (int i = 0; i < 6; ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        double lr = i < 3 ? lr_rotation : lr_translation;
        xi[i] = -lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    pose = pose_retract(pose, xi);
}

PoseEstimate estimate_relative_pose(const GaussianScene& scene, const Image& frame_next,
                                    const CameraIntrinsics& K, const PoseSE3& init,
                                    const OptimizerConfig& ocfg, const LossConfig& lcfg) {
    if (scene.empty())
        raise(Err::InvalidArgument, "estimate_relative_pose: empty scene");
    ocfg.validate();

    PoseSE3 pose = init;
    PoseAdamState state;
    PoseEstimate best;
    best.pose = init;
    best.final_loss = std::numeric_limits<double>::infinity();
    Image d_depth(K.height, K.width, 1);

    double initial_loss = 0.0;
    double prev_loss = 0.0;
    int diverged_streak = 0;
    int iter = 0;
    for (; iter < ocfg.pose_iterations; ++iter) {
        RenderOutput out = render(scene, pose, K);
        ScalarImageLoss rl = rgb_loss(out.color, frame_next, lcfg);
        if (iter == 0)
            initial_loss = rl.value;
        if (rl.value < best.final_loss) {
            best.final_loss = rl.value;
            best.pose = pose;
        }
        if (rl.value < kConvergedLoss) {
            best.iterations = iter + 1;
            return best;
        }
        if (rl.value > kDivergenceFactor * initial_loss + kDivergenceFloor) {
            if (++diverged_streak >= kDivergencePatience)
                raise(Err::DivergedPose, "estimate_relative_pose: loss diverged");
        } else {
            diverged_streak = 0;
        }
        if (ocfg.loss_tolerance > 0 && iter > 0 &&
            std::abs(prev_loss - rl.value) < ocfg.loss_tolerance) {
            ++iter;
            break;
        }
        prev_loss = rl.value;

        ParamGrads grads = render_backward(scene, pose, K, out, rl.d_a, d_depth);
        double decay = std::pow(ocfg.pose_lr_decay, iter / ocfg.pose_decay_every);
        pose_adam_step(pose, grads.d_pose, state, ocfg.pose_lr_rotation * decay,
                       ocfg.pose_lr_translation * decay, ocfg);
    }
    // The final retraction was never scored inside the loop.
    double last = rgb_loss(render(scene, pose, K).color, frame_next, lcfg).value;
    if (last < best.final_loss) {
        best.final_loss = last;
        best.pose = pose;
    }
    best.iterations = iter;
    return best;
}

} // namespace splatrec
