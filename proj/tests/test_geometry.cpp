// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "splatrec/geometry.hpp"
#include "test_util.hpp"

using namespace splatrec;
using testutil::random_pose;
using testutil::random_quat;
using testutil::random_vec3;
using testutil::uniform;

TEST_CASE("quat_to_rotmat produces orthonormal matrices") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        Mat3 R = quat_to_rotmat(random_quat(rng));
        CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Unnormalized input is normalized, not scaled.
    Quat q = random_quat(rng);
    Quat q3(q.coeffs() * 3.0);
    CHECK((quat_to_rotmat(q) - quat_to_rotmat(q3)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(quat_to_rotmat(Quat(0.0, 0.0, 0.0, 0.0)), SplatError);
}

TEST_CASE("pose compose and inverse act pointwise") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 50; ++i) {
        PoseSE3 a = random_pose(rng), b = random_pose(rng);
        Vec3 x = random_vec3(rng, -2.0, 2.0);
        CHECK((pose_compose(a, b).apply(x) - a.apply(b.apply(x))).norm() < 1e-9);
        CHECK((a.inverse().apply(a.apply(x)) - x).norm() < 1e-9);
        PoseSE3 ai = pose_compose(a, a.inverse());
        CHECK((ai.apply(x) - x).norm() < 1e-9);
    }
}

TEST_CASE("quat_exp matches axis-angle and handles tiny angles") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 40; ++i) {
        Vec3 axis = random_vec3(rng, -1.0, 1.0).normalized();
        double angle = uniform(rng, -3.0, 3.0);
        Quat expected(Eigen::AngleAxisd(angle, axis));
        Quat got = quat_exp(angle * axis);
        double diff = std::min((got.coeffs() - expected.coeffs()).norm(),
                               (got.coeffs() + expected.coeffs()).norm());
        CHECK(diff < 1e-12);
    }
    Vec3 tiny(1e-12, -2e-12, 5e-13);
    Quat q = quat_exp(tiny);
    CHECK(q.w() == doctest::Approx(1.0));
    CHECK((q.vec() - 0.5 * tiny).norm() < 1e-20);
    CHECK(quat_exp(Vec3::Zero()).coeffs() == Quat::Identity().coeffs());
}

TEST_CASE("rotation_angle recovers the sampled angle") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 30; ++i) {
        Vec3 axis = random_vec3(rng, -1.0, 1.0).normalized();
        double angle = uniform(rng, 0.0, 3.1);
        CHECK(rotation_angle(quat_exp(angle * axis)) == doctest::Approx(angle).epsilon(1e-10));
    }
    CHECK(rotation_angle(Quat::Identity()) == 0.0);
}

TEST_CASE("pose_retract is a left perturbation to first order") {
    std::mt19937_64 rng(15);
    for (int i = 0; i < 30; ++i) {
        PoseSE3 T = random_pose(rng);
        Vec3 p = random_vec3(rng, -2.0, 2.0);
        Vec6 xi;
        xi << random_vec3(rng, -1.0, 1.0), random_vec3(rng, -1.0, 1.0);
        double eps = 1e-6;
        Vec3 moved = pose_retract(T, eps * xi).apply(p);
        Vec3 base = T.apply(p);
        Vec3 predicted = base + eps * (xi.head<3>().cross(base) + xi.tail<3>());
        CHECK((moved - predicted).norm() / eps < 1e-4);
    }
    // retract with zero tangent is the identity map on poses
    PoseSE3 T = random_pose(rng);
    PoseSE3 same = pose_retract(T, Vec6::Zero());
    CHECK((same.apply(Vec3(1, 2, 3)) - T.apply(Vec3(1, 2, 3))).norm() < 1e-15);
}

TEST_CASE("project and backproject round-trip") {
    std::mt19937_64 rng(16);
    CameraIntrinsics K = testutil::test_camera();
    for (int i = 0; i < 100; ++i) {
        PoseSE3 T = random_pose(rng, 0.3);
        double u = uniform(rng, 0.0, K.width);
        double v = uniform(rng, 0.0, K.height);
        double d = uniform(rng, 0.2, 8.0);
        Vec3 world = backproject(T, K, u, v, d);
        Projected pr = project(T, K, world);
        CHECK(std::abs(pr.u - u) < 1e-6);
        CHECK(std::abs(pr.v - v) < 1e-6);
        CHECK(std::abs(pr.depth - d) < 1e-9);
    }
}

TEST_CASE("project rejects points at or behind the camera") {
    CameraIntrinsics K = testutil::test_camera();
    PoseSE3 I;
    CHECK_THROWS_AS(project(I, K, Vec3(0, 0, -1.0)), SplatError);
    CHECK_THROWS_AS(project(I, K, Vec3(0, 0, 0.0)), SplatError);
    CHECK_THROWS_AS(project(I, K, Vec3(0, 0, 0.5 * kDepthEps)), SplatError);
    CHECK_THROWS_AS(backproject(I, K, 5.0, 5.0, 0.0), SplatError);
    CHECK_THROWS_AS(backproject(I, K, 5.0, 5.0, -1.0), SplatError);
    try {
        project(I, K, Vec3(0, 0, -1.0));
    } catch (const SplatError& e) {
        CHECK(e.code() == Err::NonPositiveDepth);
    }
}

TEST_CASE("covariance_3d has eigenvalues equal to squared scales") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 30; ++i) {
        Quat q = random_quat(rng);
        Vec3 s(uniform(rng, 0.05, 2.0), uniform(rng, 0.05, 2.0), uniform(rng, 0.05, 2.0));
        Mat3 sigma = covariance_3d(q, s);
        CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat3> es(sigma);
        Vec3 want = s.array().square();
        std::sort(want.data(), want.data() + 3);
        CHECK((es.eigenvalues() - want).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK_THROWS_AS(covariance_3d(Quat::Identity(), Vec3(1.0, 0.0, 1.0)), SplatError);
    CHECK_THROWS_AS(covariance_3d(Quat::Identity(), Vec3(1.0, -0.1, 1.0)), SplatError);
}

TEST_CASE("projection_jacobian matches finite differences") {
    std::mt19937_64 rng(18);
    CameraIntrinsics K = testutil::test_camera();
    auto proj_cam = [&](const Vec3& p) {
        return Vec2(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
    };
    for (int i = 0; i < 20; ++i) {
        Vec3 p = random_vec3(rng, -1.0, 1.0);
        p.z() = uniform(rng, 0.5, 4.0);
        Eigen::Matrix<double, 2, 3> J = projection_jacobian(K, p);
        double eps = 1e-6;
        for (int k = 0; k < 3; ++k) {
            Vec3 dp = Vec3::Zero();
            dp[k] = eps;
            Vec2 fd = (proj_cam(p + dp) - proj_cam(p - dp)) / (2.0 * eps);
            CHECK((J.col(k) - fd).cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("covariance_2d applies the camera frame and low-pass") {
    CameraIntrinsics K = testutil::test_camera();

    // A gaussian straight ahead with axis-aligned scales gives a diagonal
    // screen covariance (f s / z)^2 plus the low-pass term.
    PoseSE3 I;
    Vec3 mu(0.0, 0.0, 2.0);
    Vec3 s(0.1, 0.2, 0.3);
    Mat2 c2 = covariance_2d(covariance_3d(Quat::Identity(), s), I, K, mu);
    double ex = K.fx * s.x() / mu.z(), ey = K.fy * s.y() / mu.z();
    CHECK(c2(0, 0) == doctest::Approx(ex * ex + kCovLowPass).epsilon(1e-12));
    CHECK(c2(1, 1) == doctest::Approx(ey * ey + kCovLowPass).epsilon(1e-12));
    CHECK(std::abs(c2(0, 1)) < 1e-12);
    CHECK(c2(0, 1) == c2(1, 0));
}

TEST_CASE("covariance_2d is invariant to rotating world and camera together") {
    std::mt19937_64 rng(19);
    CameraIntrinsics K = testutil::test_camera();
    for (int i = 0; i < 20; ++i) {
        Vec3 scales(uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5), uniform(rng, 0.05, 0.5));
        Mat3 sigma = covariance_3d(random_quat(rng), scales);
        PoseSE3 cam = random_pose(rng, 0.2);
        Vec3 world = backproject(cam, K, uniform(rng, 8.0, 56.0), uniform(rng, 8.0, 40.0),
                                 uniform(rng, 1.0, 4.0));
        Mat2 a = covariance_2d(sigma, cam, K, world);

        PoseSE3 spin{random_quat(rng), Vec3::Zero()};
        Mat3 Rw = spin.rotmat();
        Mat2 b = covariance_2d(Rw * sigma * Rw.transpose(), pose_compose(cam, spin.inverse()),
                               K, spin.apply(world));
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
    }
}
