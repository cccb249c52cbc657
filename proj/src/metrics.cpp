// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/metrics.hpp"

#include <Eigen/Geometry>
#include <cmath>

namespace splatrec {

double psnr(const Image& a, const Image& b) {
    if (!a.same_shape(b))
        raise(Err::ShapeMismatch, "psnr: image shapes differ");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a.raw()[i] - b.raw()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse < 1e-10)
        return 100.0;
    return -10.0 * std::log10(mse);
}

double ssim_metric(const Image& a, const Image& b, const LossConfig& cfg) {
    return ssim_mean(a, b, cfg);
}

namespace {

void check_pair(const std::vector<TrajectoryEntry>& predicted,
                const std::vector<TrajectoryEntry>& truth) {
    if (predicted.size() != truth.size())
        raise(Err::ShapeMismatch, "trajectory lengths differ");
}

} // namespace

double ate(const std::vector<TrajectoryEntry>& predicted,
           const std::vector<TrajectoryEntry>& truth, bool align_scale) {
    check_pair(predicted, truth);
    size_t n = predicted.size();
    if (n == 0)
        raise(Err::DegenerateAlignment, "ate: empty trajectory");
    if (n == 1)
        return 0.0;

    Eigen::Matrix3Xd src(3, n), dst(3, n);
    for (size_t i = 0; i < n; ++i) {
        src.col(i) = predicted[i].pose.translation;
        dst.col(i) = truth[i].pose.translation;
    }
    double spread_src = (src.colwise() - src.rowwise().mean()).colwise().norm().maxCoeff();
    double spread_dst = (dst.colwise() - dst.rowwise().mean()).colwise().norm().maxCoeff();
    if (spread_src < 1e-12 || spread_dst < 1e-12)
        raise(Err::DegenerateAlignment, "ate: trajectory positions are coincident");

    Eigen::Matrix4d T = Eigen::umeyama(src, dst, align_scale);
    double sum_sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
        Vec3 aligned = T.topLeftCorner<3, 3>() * src.col(i) + T.topRightCorner<3, 1>();
        sum_sq += (aligned - dst.col(i)).squaredNorm();
    }
    return std::sqrt(sum_sq / static_cast<double>(n));
}

RpeResult rpe(const std::vector<TrajectoryEntry>& predicted,
              const std::vector<TrajectoryEntry>& truth, int delta) {
    check_pair(predicted, truth);
    if (delta < 1)
        raise(Err::InvalidArgument, "rpe: delta must be at least 1");
    size_t n = predicted.size();
    if (n <= static_cast<size_t>(delta))
        raise(Err::TooShort, "rpe: trajectory shorter than the frame separation");

    double sum_trans = 0.0, sum_rot = 0.0;
    size_t steps = n - static_cast<size_t>(delta);
    for (size_t i = 0; i < steps; ++i) {
        PoseSE3 q_rel = pose_compose(truth[i].pose.inverse(), truth[i + delta].pose);
        PoseSE3 p_rel = pose_compose(predicted[i].pose.inverse(), predicted[i + delta].pose);
        PoseSE3 err = pose_compose(q_rel.inverse(), p_rel);
        sum_trans += err.translation.squaredNorm();
        double angle = rotation_angle(err.rotation);
        sum_rot += angle * angle;
    }
    RpeResult out;
    out.translation = std::sqrt(sum_trans / static_cast<double>(steps));
    out.rotation_deg = std::sqrt(sum_rot / static_cast<double>(steps)) * 180.0 / M_PI;
    return out;
}

} // namespace splatrec
