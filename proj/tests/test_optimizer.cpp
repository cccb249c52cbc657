// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "scene_util.hpp"
#include "splatrec/optimizer.hpp"
#include "test_util.hpp"

using namespace splatrec;
using testutil::random_scene;
using testutil::uniform;

namespace {

template <typename Fn>
Err thrown_code(Fn&& fn) {
    try {
        fn();
    } catch (const SplatError& e) {
        return e.code();
    }
    return Err::IoError;
}

} // namespace

TEST_CASE("adam_step basics: zero gradient, descent direction, quadratic oracle") {
    OptimizerConfig cfg;
    GaussianScene::Moments state;
    state.resize(1);

    double x = 1.25;
    double zero = 0.0;
    adam_step(&x, &zero, state, 1, 1, 0.1, cfg);
    CHECK(x == 1.25);

    double g = 0.7;
    for (int t = 1; t <= 10; ++t)
        adam_step(&x, &g, state, 1, t + 1, 0.05, cfg);
    CHECK(x < 1.25);

    // Quadratic with minimum at 3.
    GaussianScene::Moments qs;
    qs.resize(1);
    double q = -2.0;
    for (int t = 1; t <= 500; ++t) {
        double grad = 2.0 * (q - 3.0);
        adam_step(&q, &grad, qs, 1, t, 0.1, cfg);
    }
    CHECK(std::abs(q - 3.0) < 1e-6);

    double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(thrown_code([&] { adam_step(&x, &nan, state, 1, 12, 0.1, cfg); }) ==
          Err::NonFiniteGradient);
}

TEST_CASE("scene_adam_step moves parameters and keeps the scene valid") {
    std::mt19937_64 rng(401);
    CameraIntrinsics K = testutil::test_camera(32, 24);
    GaussianScene scene = random_scene(rng, 12, K);
    GaussianScene before = scene;

    ParamGrads grads;
    grads.resize_zero(scene.size());
    for (size_t i = 0; i < scene.size(); ++i) {
        grads.d_positions[i] = Vec3(1.0, -1.0, 0.5);
        grads.d_colors[i] = Vec3(-0.2, 0.0, 0.2);
        grads.d_rotations[i] = Vec4(0.0, 0.1, -0.1, 0.05);
        grads.d_log_scales[i] = Vec3(0.3, 0.3, -0.3);
        grads.d_logit_opacities[i] = -0.4;
    }
    OptimizerConfig cfg;
    scene_adam_step(scene, grads, cfg);
    CHECK(scene.adam_steps == 1);
    for (size_t i = 0; i < scene.size(); ++i) {
        CHECK(scene.positions[i].x() < before.positions[i].x());
        CHECK(scene.positions[i].y() > before.positions[i].y());
        CHECK(scene.colors[i].x() >= before.colors[i].x());
        CHECK(scene.logit_opacities[i] > before.logit_opacities[i]);
        CHECK(scene.rotations[i].norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(scene.colors[i].minCoeff() >= 0.0);
        CHECK(scene.colors[i].maxCoeff() <= 1.0);
    }

    ParamGrads wrong;
    wrong.resize_zero(scene.size() + 1);
    CHECK(thrown_code([&] { scene_adam_step(scene, wrong, cfg); }) == Err::ShapeMismatch);
}

TEST_CASE("pose_adam_step stays on SE(3) and descends") {
    OptimizerConfig cfg;
    PoseAdamState state;
    PoseSE3 pose;
    Vec6 grad;
    grad << 0.1, -0.2, 0.05, 1.0, 0.0, -1.0;
    for (int i = 0; i < 5; ++i)
        pose_adam_step(pose, grad, state, 1e-2, 2e-2, cfg);
    CHECK(pose.rotation.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pose.translation.x() < 0.0);
    CHECK(pose.translation.z() > 0.0);

    Vec6 bad = Vec6::Constant(std::numeric_limits<double>::infinity());
    CHECK(thrown_code([&] { pose_adam_step(pose, bad, state, 1e-2, 2e-2, cfg); }) ==
          Err::NonFiniteGradient);
}

TEST_CASE("estimate_relative_pose is a fixed point at zero motion") {
    std::mt19937_64 rng(402);
    CameraIntrinsics K = testutil::test_camera(48, 36);
    GaussianScene scene = random_scene(rng, 60, K, 0.8);
    Image frame = render(scene, PoseSE3{}, K).color;

    GaussianScene before = scene;
    PoseEstimate est = estimate_relative_pose(scene, frame, K);
    CHECK(est.pose.translation.norm() < 1e-4);
    CHECK(rotation_angle(est.pose.rotation) < 1e-4);
    CHECK(est.final_loss < 1e-10);

    // Gaussian attributes are never touched.
    for (size_t i = 0; i < scene.size(); ++i) {
        CHECK((scene.positions[i].array() == before.positions[i].array()).all());
        CHECK((scene.colors[i].array() == before.colors[i].array()).all());
        CHECK((scene.rotations[i].array() == before.rotations[i].array()).all());
        CHECK((scene.log_scales[i].array() == before.log_scales[i].array()).all());
        CHECK(scene.logit_opacities[i] == before.logit_opacities[i]);
    }
}

TEST_CASE("estimate_relative_pose recovers a small camera motion") {
    std::mt19937_64 rng(403);
    CameraIntrinsics K = testutil::test_camera(64, 48);
    GaussianScene scene = random_scene(rng, 140, K, 0.85);
    Vec6 xi_gt;
    xi_gt << 2e-3, -1.5e-3, 1e-3, 0.01, -0.006, 0.004;
    PoseSE3 T_gt = pose_retract(PoseSE3{}, xi_gt);
    Image frame_next = render(scene, T_gt, K).color;

    PoseEstimate est = estimate_relative_pose(scene, frame_next, K);
    CHECK((est.pose.translation - T_gt.translation).norm() < 0.1 * T_gt.translation.norm());
    PoseSE3 err = pose_compose(est.pose.inverse(), T_gt);
    CHECK(rotation_angle(err.rotation) < 0.1 * rotation_angle(T_gt.rotation) + 1e-4);
    CHECK(est.final_loss < 0.2 * rgb_loss(render(scene, PoseSE3{}, K).color, frame_next).value);
}

TEST_CASE("estimate_relative_pose returns the best pose it visited") {
    std::mt19937_64 rng(404);
    CameraIntrinsics K = testutil::test_camera(40, 32);
    GaussianScene scene = random_scene(rng, 50, K, 0.8);
    Vec6 xi;
    xi << 0.0, 0.0, 0.0, 0.008, 0.0, 0.0;
    Image frame_next = render(scene, pose_retract(PoseSE3{}, xi), K).color;

    OptimizerConfig short_run;
    short_run.pose_iterations = 30;
    PoseEstimate est = estimate_relative_pose(scene, frame_next, K, PoseSE3{}, short_run);
    double init_loss = rgb_loss(render(scene, PoseSE3{}, K).color, frame_next).value;
    CHECK(est.final_loss <= init_loss + 1e-15);
    double at_returned = rgb_loss(render(scene, est.pose, K).color, frame_next).value;
    CHECK(at_returned == doctest::Approx(est.final_loss).epsilon(1e-12));
}

TEST_CASE("estimate_relative_pose flags hopeless targets") {
    std::mt19937_64 rng(405);
    CameraIntrinsics K = testutil::test_camera(32, 24);
    GaussianScene scene = random_scene(rng, 40, K, 0.8);
    Image noise(K.height, K.width, 3);
    for (double& v : noise.raw())
        v = uniform(rng, 0.0, 1.0);

    bool diverged = false;
    double final_loss = 0.0;
    try {
        PoseEstimate est = estimate_relative_pose(scene, noise, K);
        final_loss = est.final_loss;
    } catch (const SplatError& e) {
        diverged = e.code() == Err::DivergedPose;
    }
    CHECK((diverged || final_loss > 0.05));
}

TEST_CASE("estimate_relative_pose reports divergence under a runaway step size") {
    std::mt19937_64 rng(406);
    CameraIntrinsics K = testutil::test_camera(32, 24);
    GaussianScene scene = random_scene(rng, 50, K, 0.8);
    Vec6 xi;
    xi << 0.0, 0.0, 0.0, 0.004, 0.0, 0.0;
    Image frame_next = render(scene, pose_retract(PoseSE3{}, xi), K).color;

    OptimizerConfig wild;
    wild.pose_lr_rotation = 5.0;
    wild.pose_lr_translation = 10.0;
    CHECK(thrown_code([&] {
              estimate_relative_pose(scene, frame_next, K, PoseSE3{}, wild);
          }) == Err::DivergedPose);
}

TEST_CASE("estimate_relative_pose validates inputs") {
    CameraIntrinsics K = testutil::test_camera(16, 16);
    GaussianScene empty;
    Image frame(16, 16, 3);
    CHECK(thrown_code([&] { estimate_relative_pose(empty, frame, K); }) == Err::InvalidArgument);

    OptimizerConfig bad;
    bad.pose_lr_translation = -1.0;
    CHECK(thrown_code([&] { bad.validate(); }) == Err::InvalidArgument);
}
