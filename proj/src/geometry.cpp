// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/geometry.hpp"

#include <cmath>

namespace splatrec {

PoseSE3 pose_compose(const PoseSE3& a, const PoseSE3& b) {
    PoseSE3 out;
    out.rotation = (a.rotation * b.rotation).normalized();
    out.translation = a.rotation * b.translation + a.translation;
    return out;
}

Mat3 quat_to_rotmat(const Quat& q) {
    double n = q.norm();
    if (!(n > 0.0))
        raise(Err::InvalidArgument, "zero quaternion has no rotation");
    return Quat(q.coeffs() / n).toRotationMatrix();
}

Mat3 quat_to_rotmat(const Vec4& wxyz) {
    return quat_to_rotmat(Quat(wxyz[0], wxyz[1], wxyz[2], wxyz[3]));
}

Quat quat_exp(const Vec3& omega) {
    double theta = omega.norm();
    double half = 0.5 * theta;
    double w = std::cos(half);
    // sin(theta/2)/theta, series below the noise floor of the closed form.
    double k = theta < 1e-8 ? 0.5 - theta * theta / 48.0 : std::sin(half) / theta;
    Quat q(w, k * omega.x(), k * omega.y(), k * omega.z());
    return q.normalized();
}

double rotation_angle(const Quat& q) {
    Quat qn = q.normalized();
    return 2.0 * std::atan2(qn.vec().norm(), std::abs(qn.w()));
}

PoseSE3 pose_retract(const PoseSE3& T, const Vec6& xi) {
    PoseSE3 delta;
    delta.rotation = quat_exp(xi.head<3>());
    delta.translation = xi.tail<3>();
    return pose_compose(delta, T);
}

Projected project(const PoseSE3& T, const CameraIntrinsics& K, const Vec3& mu) {
    Vec3 p = T.apply(mu);
    if (p.z() <= kDepthEps)
        raise(Err::NonPositiveDepth, "point at or behind the camera plane");
    Projected out;
    out.u = K.fx * p.x() / p.z() + K.cx;
    out.v = K.fy * p.y() / p.z() + K.cy;
    out.depth = p.z();
    return out;
}

Vec3 backproject(const PoseSE3& T, const CameraIntrinsics& K, double u, double v,
                 double depth) {
    if (depth <= 0.0)
        raise(Err::NonPositiveDepth, "backprojection needs positive depth");
    Vec3 p((u - K.cx) / K.fx * depth, (v - K.cy) / K.fy * depth, depth);
    return T.inverse().apply(p);
}

Mat3 covariance_3d(const Quat& rotation, const Vec3& scales) {
    if (!(scales.minCoeff() > 0.0))
        raise(Err::NonPositiveScale, "gaussian scales must be positive");
    Mat3 R = quat_to_rotmat(rotation);
    return R * scales.array().square().matrix().asDiagonal() * R.transpose();
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraIntrinsics& K, const Vec3& p) {
    double iz = 1.0 / p.z();
    double iz2 = iz * iz;
    Eigen::Matrix<double, 2, 3> J;
    J << K.fx * iz, 0.0, -K.fx * p.x() * iz2,
         0.0, K.fy * iz, -K.fy * p.y() * iz2;
    return J;
}

Mat2 covariance_2d(const Mat3& sigma, const PoseSE3& T, const CameraIntrinsics& K,
                   const Vec3& mu) {
    Vec3 p = T.apply(mu);
    if (p.z() <= kDepthEps)
        raise(Err::NonPositiveDepth, "covariance projection behind camera");
    Mat3 W = T.rotmat();
    Eigen::Matrix<double, 2, 3> J = projection_jacobian(K, p);
    Mat2 out = J * W * sigma * W.transpose() * J.transpose();
    out(0, 0) += kCovLowPass;
    out(1, 1) += kCovLowPass;
    return out;
}

} // namespace splatrec
