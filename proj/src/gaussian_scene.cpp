// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/scene.hpp"

#include <cmath>

namespace splatrec {

namespace {

template <typename T>
void filter_rows(std::vector<T>& rows, const std::vector<uint8_t>& keep) {
    size_t out = 0;
    for (size_t i = 0; i < rows.size(); ++i)
        if (keep[i]) rows[out++] = rows[i];
    rows.resize(out);
}

void filter_moments(GaussianScene::Moments& mom, const std::vector<uint8_t>& keep, int dim) {
    size_t out = 0;
    for (size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        for (int k = 0; k < dim; ++k) {
            mom.m[out * dim + k] = mom.m[i * dim + k];
            mom.v[out * dim + k] = mom.v[i * dim + k];
        }
        ++out;
    }
    mom.m.resize(out * dim);
    mom.v.resize(out * dim);
}

} // namespace

void GaussianScene::append(const Vec3& position, const Vec3& color, const Vec4& rotation,
                           const Vec3& log_scale, double logit_opacity) {
    positions.push_back(position);
    colors.push_back(color);
    rotations.push_back(rotation);
    log_scales.push_back(log_scale);
    logit_opacities.push_back(logit_opacity);
}

void GaussianScene::remove_by_mask(const std::vector<uint8_t>& keep) {
    if (keep.size() != size())
        raise(Err::ShapeMismatch, "keep mask size does not match scene");
    sync_state();
    filter_rows(positions, keep);
    filter_rows(colors, keep);
    filter_rows(rotations, keep);
    filter_rows(log_scales, keep);
    filter_rows(logit_opacities, keep);
    filter_rows(grad_accum, keep);
    filter_rows(grad_count, keep);
    filter_moments(mom_position, keep, 3);
    filter_moments(mom_color, keep, 3);
    filter_moments(mom_rotation, keep, 4);
    filter_moments(mom_scale, keep, 3);
    filter_moments(mom_opacity, keep, 1);
}

void GaussianScene::sync_state() {
    size_t n = size();
    grad_accum.resize(n, 0.0);
    grad_count.resize(n, 0);
    mom_position.resize(3 * n);
    mom_color.resize(3 * n);
    mom_rotation.resize(4 * n);
    mom_scale.resize(3 * n);
    mom_opacity.resize(n);
}

void GaussianScene::check_consistent() const {
    size_t n = size();
    if (colors.size() != n || rotations.size() != n || log_scales.size() != n ||
        logit_opacities.size() != n)
        raise(Err::ShapeMismatch, "gaussian parameter arrays disagree on count");
}

GaussianScene init_from_depth(const Image& image, const DepthMap& depth,
                              const CameraIntrinsics& K, const PoseSE3& T, int stride,
                              double init_opacity) {
    if (stride < 1)
        raise(Err::InvalidArgument, "stride must be >= 1");
    if (image.height() != depth.height() || image.width() != depth.width())
        raise(Err::ShapeMismatch, "image and depth sizes differ");
    if (image.channels() != 3)
        raise(Err::ShapeMismatch, "expected a 3-channel image");

    GaussianScene scene;
    double lo = logit(init_opacity);
    for (int y = 0; y < image.height(); y += stride) {
        for (int x = 0; x < image.width(); x += stride) {
            double d = depth.at(y, x);
            if (d <= 0.0) continue;
            Vec3 mu = backproject(T, K, x + 0.5, y + 0.5, d);
            Vec3 c(image.at(y, x, 0), image.at(y, x, 1), image.at(y, x, 2));
            double s = stride * d / K.fx;
            scene.append(mu, c, Vec4(1, 0, 0, 0), Vec3::Constant(std::log(s)), lo);
        }
    }
    if (scene.empty())
        raise(Err::EmptyDepth, "no valid depth pixels to initialize from");
    scene.sync_state();
    return scene;
}

GaussianScene transform_scene(const GaussianScene& scene, const PoseSE3& A) {
    GaussianScene out = scene;
    for (size_t i = 0; i < out.size(); ++i) {
        out.positions[i] = A.apply(scene.positions[i]);
        Quat q = (A.rotation * scene.rot(i)).normalized();
        out.rotations[i] = Vec4(q.w(), q.x(), q.y(), q.z());
    }
    return out;
}

DensifyStats densify(GaussianScene& scene, const DensifyConfig& cfg, std::mt19937_64& rng) {
    scene.sync_state();
    DensifyStats stats;
    size_t n = scene.size();
    std::vector<uint8_t> keep(n, 1);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (size_t i = 0; i < n; ++i) {
        if (scene.grad_count[i] == 0) continue;
        double mean_grad = scene.grad_accum[i] / scene.grad_count[i];
        if (mean_grad <= cfg.grad_threshold) continue;

        Vec3 s = scene.scale(i);
        if (s.maxCoeff() < cfg.split_scale_threshold) {
            Vec3 jitter(gauss(rng), gauss(rng), gauss(rng));
            scene.append(scene.positions[i] + cfg.clone_jitter_sigma * jitter,
                         scene.colors[i], scene.rotations[i], scene.log_scales[i],
                         scene.logit_opacities[i]);
            ++stats.cloned;
        } else {
            Mat3 R = quat_to_rotmat(scene.rot(i));
            Vec3 child_log = scene.log_scales[i].array() - std::log(cfg.split_factor);
            for (int k = 0; k < 2; ++k) {
                Vec3 local(gauss(rng) * s.x(), gauss(rng) * s.y(), gauss(rng) * s.z());
                scene.append(scene.positions[i] + R * local, scene.colors[i],
                             scene.rotations[i], child_log, scene.logit_opacities[i]);
            }
            keep[i] = 0;
            ++stats.split;
        }
    }

    keep.resize(scene.size(), 1);
    scene.sync_state();
    scene.remove_by_mask(keep);
    std::fill(scene.grad_accum.begin(), scene.grad_accum.end(), 0.0);
    std::fill(scene.grad_count.begin(), scene.grad_count.end(), 0);
    return stats;
}

int prune(GaussianScene& scene, double min_opacity, double max_scale) {
    size_t n = scene.size();
    std::vector<uint8_t> keep(n, 1);
    int removed = 0;
    for (size_t i = 0; i < n; ++i) {
        if (scene.opacity(i) < min_opacity || scene.scale(i).maxCoeff() > max_scale) {
            keep[i] = 0;
            ++removed;
        }
    }
    if (removed > 0) scene.remove_by_mask(keep);
    return removed;
}

void reset_opacity(GaussianScene& scene, double cap) {
    double cap_logit = logit(cap);
    for (double& lo : scene.logit_opacities)
        lo = std::min(lo, cap_logit);
}

std::vector<int32_t> visible_indices(const GaussianScene& scene, const PoseSE3& T,
                                     const CameraIntrinsics& K, double margin_px) {
    std::vector<int32_t> out;
    for (size_t i = 0; i < scene.size(); ++i) {
        Vec3 p = T.apply(scene.positions[i]);
        if (p.z() <= kDepthEps) continue;
        double u = K.fx * p.x() / p.z() + K.cx;
        double v = K.fy * p.y() / p.z() + K.cy;
        if (u < -margin_px || u > K.width + margin_px || v < -margin_px ||
            v > K.height + margin_px)
            continue;
        out.push_back(static_cast<int32_t>(i));
    }
    return out;
}

GaussianScene select(const GaussianScene& scene, const std::vector<int32_t>& indices) {
    GaussianScene out;
    for (int32_t i : indices)
        out.append(scene.positions[i], scene.colors[i], scene.rotations[i],
                   scene.log_scales[i], scene.logit_opacities[i]);
    out.sync_state();
    return out;
}

} // namespace splatrec
