// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "splatrec/errors.hpp"

namespace splatrec {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Conventions used throughout:
//  - Quaternions are w-first in all stored 4-vectors: (w, x, y, z).
//  - A pose acts on points as p' = R * p + t. Rendering poses map world to
//    camera coordinates; trajectory files on disk hold camera-to-world.
//  - Pixel (ix, iy) has its center at continuous coordinates
//    (ix + 0.5, iy + 0.5); projection returns continuous coordinates.
//  - SE(3) tangent vectors are (omega, upsilon): rotation first, and are
//    applied as a left perturbation, see pose_retract().

inline constexpr double kDepthEps = 1e-6;    // guards division by camera z
inline constexpr double kCovLowPass = 0.3;   // px^2 added to both Sigma2D diagonals

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    void validate() const {
        if (fx <= 0.0 || fy <= 0.0)
            raise(Err::InvalidArgument, "focal lengths must be positive");
        if (width <= 0 || height <= 0)
            raise(Err::InvalidArgument, "image size must be positive");
        if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
            raise(Err::InvalidArgument, "principal point outside image");
    }

    bool operator==(const CameraIntrinsics& o) const {
        return fx == o.fx && fy == o.fy && cx == o.cx && cy == o.cy &&
               width == o.width && height == o.height;
    }
};

struct PoseSE3 {
    Quat rotation{1.0, 0.0, 0.0, 0.0};
    Vec3 translation{0.0, 0.0, 0.0};

    static PoseSE3 identity() { return PoseSE3{}; }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Mat3 rotmat() const { return rotation.toRotationMatrix(); }

    PoseSE3 inverse() const {
        Quat qi = rotation.conjugate();
        return PoseSE3{qi, -(qi * translation)};
    }

    bool operator==(const PoseSE3& o) const {
        return rotation.coeffs() == o.rotation.coeffs() && translation == o.translation;
    }
};

// (a o b)(x) = a(b(x))
PoseSE3 pose_compose(const PoseSE3& a, const PoseSE3& b);

// Rotation matrix of q, normalizing defensively.
Mat3 quat_to_rotmat(const Quat& q);
Mat3 quat_to_rotmat(const Vec4& wxyz);

// Exponential map of so(3): axis-angle vector to unit quaternion.
Quat quat_exp(const Vec3& omega);

// Rotation angle of q in radians, in [0, pi].
double rotation_angle(const Quat& q);

// Left retraction: returns delta o T where delta = (quat_exp(omega), upsilon)
// and xi = (omega, upsilon). Gradients produced by the rasterizer and losses
// are with respect to this parameterization at xi = 0.
PoseSE3 pose_retract(const PoseSE3& T, const Vec6& xi);

struct Projected {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

// Pinhole projection of world point mu through pose T (world-to-camera).
// Throws NonPositiveDepth if the camera-space z is <= kDepthEps.
Projected project(const PoseSE3& T, const CameraIntrinsics& K, const Vec3& mu);

// Inverse of project(): world point whose projection under (T, K) is
// (u, v, depth). Throws NonPositiveDepth for depth <= 0.
Vec3 backproject(const PoseSE3& T, const CameraIntrinsics& K, double u, double v,
                 double depth);

// Sigma = R * diag(s^2) * R^T. Throws NonPositiveScale.
Mat3 covariance_3d(const Quat& rotation, const Vec3& scales);

// Screen-space covariance J * W * Sigma * W^T * J^T + kCovLowPass * I, with J
// the pinhole Jacobian at the camera-space position of mu and W = rot(T).
Mat2 covariance_2d(const Mat3& sigma, const PoseSE3& T, const CameraIntrinsics& K,
                   const Vec3& mu);

// Pinhole Jacobian d(u,v)/d(camera point) at camera-space point p.
Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraIntrinsics& K, const Vec3& p);

} // namespace splatrec
