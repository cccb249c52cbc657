// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/pipeline.hpp"

#include <functional>
#include <memory>

#include "doctest.h"
#include "splatrec/metrics.hpp"
#include "splatrec/rasterizer.hpp"
#include "splatrec/synthetic.hpp"

using namespace splatrec;

namespace {

SynthPreset small_preset(const char* name, int frames) {
    SynthPreset p = preset_by_name(name);
    p.frames = frames;
    p.width = 80;
    p.height = 64;
    p.match_count = 200;
    return p;
}

PipelineConfig fast_cfg() {
    PipelineConfig cfg;
    cfg.iterations_per_frame = 30;
    cfg.optimizer.pose_iterations = 80;
    return cfg;
}

std::shared_ptr<const SynthBundle> make_bundle(const SynthPreset& p) {
    return std::make_shared<const SynthBundle>(generate(p));
}

struct NullMatchProvider final : MatchProvider {
    bool has_matches(int, int) const override { return false; }
    MatchSet get_matches(int, int) const override {
        raise(Err::MissingResource, "no matches");
    }
};

struct ConstDepthProvider final : DepthProvider {
    DepthMap depth;
    explicit ConstDepthProvider(DepthMap d) : depth(std::move(d)) {}
    DepthMap get_depth(int) const override { return depth; }
};

// Fails for exactly one frame index, else defers to the wrapped provider.
struct HoleDepthProvider final : DepthProvider {
    const DepthProvider& inner;
    int hole;
    HoleDepthProvider(const DepthProvider& p, int h) : inner(p), hole(h) {}
    DepthMap get_depth(int index) const override {
        if (index == hole) raise(Err::MissingResource, "withheld depth frame");
        return inner.get_depth(index);
    }
};

Err thrown_code(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const SplatError& e) {
        return e.code();
    }
    return Err::IoError; // sentinel: nothing thrown
}

} // namespace

TEST_CASE("init stage fits the first frame above 30 dB with frozen positions") {
    SynthPreset p = small_preset("plane", 1);
    auto bundle = make_bundle(p);
    PipelineConfig cfg = fast_cfg();
    cfg.init_iterations = 150;

    PipelineState state = init_stage(bundle->frames[0], bundle->depths[0], bundle->K, cfg);

    REQUIRE(state.report.size() == 1);
    CHECK(state.report[0].psnr > 30.0);
    CHECK(state.trajectory_w2c.size() == 1);
    CHECK(state.trajectory_w2c[0].pose.translation.norm() == 0.0);

    // Positions must still be the normalized back-projection of frame 0:
    // plane depth is constant, so after the median rescale every splat sits
    // at unit camera depth.
    for (size_t i = 0; i < state.scene.size(); ++i)
        CHECK(state.scene.positions[i].z() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant-color frame is fitted nearly exactly") {
    Image flat(48, 64, 3, 0.42);
    DepthMap depth(48, 64, 2.0);
    CameraIntrinsics K{54.4, 54.4, 32.0, 24.0, 64, 48};
    PipelineConfig cfg = fast_cfg();
    cfg.init_iterations = 200;

    PipelineState state = init_stage(flat, depth, K, cfg);
    CHECK(state.report[0].l_rgb < 1e-3);
    CHECK(state.report[0].psnr > 40.0);
}

TEST_CASE("frame-0 depth with no positive values is rejected") {
    Image img(16, 16, 3, 0.5);
    DepthMap depth(16, 16, 0.0);
    CameraIntrinsics K{13.6, 13.6, 8.0, 8.0, 16, 16};
    CHECK(thrown_code([&] { init_stage(img, depth, K, fast_cfg()); }) == Err::EmptyDepth);
}

TEST_CASE("config validation rejects out-of-range values") {
    PipelineConfig cfg;
    cfg.init_opacity = 1.5;
    CHECK(thrown_code([&] { cfg.validate(); }) == Err::InvalidArgument);
    cfg = PipelineConfig{};
    cfg.iterations_per_frame = 0;
    CHECK(thrown_code([&] { cfg.validate(); }) == Err::InvalidArgument);
    cfg = PipelineConfig{};
    cfg.holdout = {0};
    CHECK(thrown_code([&] { cfg.validate(); }) == Err::InvalidArgument);
}

TEST_CASE("tracking a duplicate of frame 0 stays at the identity") {
    SynthPreset p = small_preset("plane", 1);
    auto bundle = make_bundle(p);
    PipelineConfig cfg = fast_cfg();

    PipelineState state = init_stage(bundle->frames[0], bundle->depths[0], bundle->K, cfg);
    ConstDepthProvider depths(bundle->depths[0]);
    NullMatchProvider matches;
    step_frame(state, 1, bundle->frames[0], depths, matches, cfg);

    const PoseSE3& T1 = state.trajectory_w2c.back().pose;
    CHECK(T1.translation.norm() < 5e-3);
    CHECK(rotation_angle(T1.rotation) < 5e-3);
    CHECK(state.report.back().frame == 1);
    CHECK(state.report.back().pose_iterations > 0);
}

TEST_CASE("two-frame dolly recovers the ground-truth baseline within 10%") {
    SynthPreset p = small_preset("plane", 2);
    p.extent = 0.2;
    auto bundle = make_bundle(p);
    PipelineConfig cfg; // default schedule: accuracy is the point here
    cfg.normalize_frame0_depth = false; // keep the world metric for comparison

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);
    RunResult result = run(bundle->frames, depths, matches, bundle->K, cfg);

    REQUIRE(!result.diverged);
    REQUIRE(result.trajectory_w2c.size() == 2);
    const PoseSE3 gt_w2c = bundle->poses_c2w[1].pose.inverse();
    const PoseSE3& est = result.trajectory_w2c[1].pose;
    const double baseline = gt_w2c.translation.norm();
    CHECK((est.translation - gt_w2c.translation).norm() < 0.10 * baseline);
    CHECK(rotation_angle(PoseSE3{est.rotation.conjugate() * gt_w2c.rotation,
                                 Vec3::Zero()}
                             .rotation) < 0.02);
}

TEST_CASE("scene keeps growing as the corridor reveals new walls") {
    SynthPreset p = small_preset("corridor", 4);
    auto bundle = make_bundle(p);
    PipelineConfig cfg = fast_cfg();

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);
    RunResult result = run(bundle->frames, depths, matches, bundle->K, cfg);

    REQUIRE(!result.diverged);
    REQUIRE(result.report.size() == 4);
    CHECK(result.trajectory_w2c.size() == 4);
    CHECK(result.report.back().gaussians >= result.report.front().gaussians);
    for (const FrameRecord& rec : result.report) {
        CHECK(rec.trained);
        CHECK(rec.error.empty());
        CHECK(std::isfinite(rec.l_total));
    }
}

TEST_CASE("integrated frames keep re-render quality as later frames arrive") {
    SynthPreset p = preset_by_name("corridor");
    p.frames = 3;
    p.width = 64;
    p.height = 48;
    p.match_count = 150;
    auto bundle = make_bundle(p);
    PipelineConfig cfg; // default schedule; replay is what preserves quality

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);
    RunResult result = run(bundle->frames, depths, matches, bundle->K, cfg);

    REQUIRE(!result.diverged);
    for (const FrameRecord& rec : result.report) {
        const double end_psnr =
            psnr(render(result.scene, result.trajectory_w2c[rec.frame].pose, bundle->K)
                     .color,
                 bundle->frames[rec.frame]);
        CHECK(end_psnr >= rec.psnr - 2.0);
    }
}

TEST_CASE("held-out frame is skipped in training and fitted afterwards") {
    SynthPreset p = small_preset("plane", 5);
    auto bundle = make_bundle(p);
    PipelineConfig cfg = fast_cfg();
    cfg.holdout = {2};

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);
    RunResult result = run(bundle->frames, depths, matches, bundle->K, cfg);

    REQUIRE(!result.diverged);
    REQUIRE(result.trajectory_w2c.size() == 5);
    for (int t = 0; t < 5; ++t)
        CHECK(result.trajectory_w2c[t].timestamp == doctest::Approx(t));

    REQUIRE(result.report.size() == 5);
    const FrameRecord& held = result.report[2];
    CHECK(held.frame == 2);
    CHECK(!held.trained);
    CHECK(held.error.empty());
    CHECK(held.psnr > 20.0);
    for (int t : {0, 1, 3, 4}) CHECK(result.report[t].trained);
}

TEST_CASE("a mid-sequence input failure skips that frame and continues") {
    SynthPreset p = small_preset("plane", 4);
    auto bundle = make_bundle(p);
    PipelineConfig cfg = fast_cfg();

    SyntheticDepthProvider inner(bundle);
    HoleDepthProvider depths(inner, 2);
    SyntheticMatchProvider matches(bundle);
    RunResult result = run(bundle->frames, depths, matches, bundle->K, cfg);

    REQUIRE(!result.diverged);
    REQUIRE(result.report.size() == 4);
    CHECK(!result.report[2].trained);
    CHECK(!result.report[2].error.empty());
    CHECK(result.report[3].trained);

    REQUIRE(result.trajectory_w2c.size() == 3);
    CHECK(result.trajectory_w2c[0].timestamp == doctest::Approx(0));
    CHECK(result.trajectory_w2c[1].timestamp == doctest::Approx(1));
    CHECK(result.trajectory_w2c[2].timestamp == doctest::Approx(3));
}

TEST_CASE("single-frame run produces an identity trajectory and a scene") {
    SynthPreset p = small_preset("plane", 1);
    auto bundle = make_bundle(p);

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);
    RunResult result = run(bundle->frames, depths, matches, bundle->K, fast_cfg());

    CHECK(!result.diverged);
    CHECK(result.trajectory_w2c.size() == 1);
    CHECK(result.report.size() == 1);
    CHECK(result.scene.size() > 0);
}

TEST_CASE("missing frame-0 depth aborts the run with a structured error") {
    SynthPreset p = small_preset("plane", 2);
    auto bundle = make_bundle(p);

    SyntheticDepthProvider inner(bundle);
    HoleDepthProvider depths(inner, 0);
    SyntheticMatchProvider matches(bundle);
    CHECK(thrown_code([&] {
              run(bundle->frames, depths, matches, bundle->K, fast_cfg());
          }) == Err::MissingResource);
}

TEST_CASE("identical runs are bitwise identical") {
    SynthPreset p = small_preset("plane", 3);
    auto bundle = make_bundle(p);
    PipelineConfig cfg = fast_cfg();

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);
    RunResult a = run(bundle->frames, depths, matches, bundle->K, cfg);
    RunResult b = run(bundle->frames, depths, matches, bundle->K, cfg);

    REQUIRE(a.trajectory_w2c.size() == b.trajectory_w2c.size());
    for (size_t i = 0; i < a.trajectory_w2c.size(); ++i) {
        CHECK((a.trajectory_w2c[i].pose.translation.array() ==
               b.trajectory_w2c[i].pose.translation.array())
                  .all());
        CHECK((a.trajectory_w2c[i].pose.rotation.coeffs().array() ==
               b.trajectory_w2c[i].pose.rotation.coeffs().array())
                  .all());
    }
    REQUIRE(a.scene.size() == b.scene.size());
    for (size_t i = 0; i < a.scene.size(); ++i)
        CHECK((a.scene.positions[i].array() == b.scene.positions[i].array()).all());
    for (size_t i = 0; i < a.report.size(); ++i)
        CHECK(a.report[i].l_total == b.report[i].l_total);
}
