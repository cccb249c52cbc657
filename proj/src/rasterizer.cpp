// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <thread>

namespace splatrec {

namespace {

uint64_t fnv1a(const void* data, size_t n, uint64_t h) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <typename T>
uint64_t hash_vector(const std::vector<T>& v, uint64_t h) {
    h = fnv1a(v.data(), v.size() * sizeof(T), h);
    return h;
}

uint64_t state_fingerprint(const GaussianScene& scene, const PoseSE3& T,
                           const CameraIntrinsics& K, const std::vector<Vec2>* offsets) {
    uint64_t h = 14695981039346656037ull;
    size_t n = scene.size();
    h = fnv1a(&n, sizeof(n), h);
    h = hash_vector(scene.positions, h);
    h = hash_vector(scene.colors, h);
    h = hash_vector(scene.rotations, h);
    h = hash_vector(scene.log_scales, h);
    h = hash_vector(scene.logit_opacities, h);
    double pose[7] = {T.rotation.w(), T.rotation.x(), T.rotation.y(), T.rotation.z(),
                      T.translation.x(), T.translation.y(), T.translation.z()};
    h = fnv1a(pose, sizeof(pose), h);
    double cam[6] = {K.fx, K.fy, K.cx, K.cy, double(K.width), double(K.height)};
    h = fnv1a(cam, sizeof(cam), h);
    if (offsets) h = hash_vector(*offsets, h);
    return h;
}

struct PreparedSplat {
    SplatCache cache;
    double radius = 0.0;
};

// Projects one gaussian; returns false when it is skipped (behind the camera,
// vanishing opacity, or degenerate screen covariance).
bool project_splat(const GaussianScene& scene, size_t i, const Mat3& W, const Vec3& t,
                   const CameraIntrinsics& K, const std::vector<Vec2>* offsets,
                   PreparedSplat& out) {
    Vec3 p = W * scene.positions[i] + t;
    if (p.z() <= kDepthEps) return false;

    double alpha_tilde = scene.opacity(i);
    if (alpha_tilde <= kBinCutoff) return false;

    Mat3 R = quat_to_rotmat(scene.rot(i));
    Vec3 s2 = (2.0 * scene.log_scales[i]).array().exp();
    Mat3 sigma = R * s2.asDiagonal() * R.transpose();
    Mat3 M = W * sigma * W.transpose();

    double iz = 1.0 / p.z();
    double iz2 = iz * iz;
    Eigen::Matrix<double, 2, 3> J;
    J << K.fx * iz, 0.0, -K.fx * p.x() * iz2,
         0.0, K.fy * iz, -K.fy * p.y() * iz2;
    Mat2 cov2 = J * M * J.transpose();
    double sxx = cov2(0, 0) + kCovLowPass;
    double sxy = 0.5 * (cov2(0, 1) + cov2(1, 0));
    double syy = cov2(1, 1) + kCovLowPass;

    double half_trace = 0.5 * (sxx + syy);
    double disc = std::sqrt(std::max(0.0, half_trace * half_trace - (sxx * syy - sxy * sxy)));
    double lam_max = half_trace + disc;
    double lam_min = half_trace - disc;
    if (!(lam_min > 0.0) || lam_max / lam_min > kMaxCond2D) return false;

    double det = sxx * syy - sxy * sxy;
    double idet = 1.0 / det;

    SplatCache& c = out.cache;
    c.p_cam = p;
    c.u = K.fx * p.x() * iz + K.cx;
    c.v = K.fy * p.y() * iz + K.cy;
    if (offsets) {
        c.u += (*offsets)[i].x();
        c.v += (*offsets)[i].y();
    }
    c.lxx = syy * idet;
    c.lxy = -sxy * idet;
    c.lyy = sxx * idet;
    c.alpha_tilde = alpha_tilde;
    c.qmax = 2.0 * std::log(alpha_tilde / kBinCutoff);
    c.id = static_cast<int32_t>(i);
    out.radius = std::sqrt(c.qmax * lam_max);
    return true;
}

std::vector<PreparedSplat> prepare_sorted(const GaussianScene& scene, const PoseSE3& T,
                                          const CameraIntrinsics& K,
                                          const std::vector<Vec2>* offsets) {
    scene.check_consistent();
    if (offsets && offsets->size() != scene.size())
        raise(Err::ShapeMismatch, "center offset count does not match scene");
    Mat3 W = T.rotmat();
    std::vector<PreparedSplat> splats;
    splats.reserve(scene.size());
    PreparedSplat ps;
    for (size_t i = 0; i < scene.size(); ++i)
        if (project_splat(scene, i, W, T.translation, K, offsets, ps))
            splats.push_back(ps);
    std::sort(splats.begin(), splats.end(), [](const PreparedSplat& a, const PreparedSplat& b) {
        if (a.cache.p_cam.z() != b.cache.p_cam.z()) return a.cache.p_cam.z() < b.cache.p_cam.z();
        return a.cache.id < b.cache.id;
    });
    return splats;
}

void run_tiled(int tile_count, int threads, const std::function<void(int)>& body) {
    if (threads <= 1) {
        for (int t = 0; t < tile_count; ++t) body(t);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (int t = w; t < tile_count; t += threads) body(t);
        });
    for (auto& th : pool) th.join();
}

} // namespace

void ParamGrads::resize_zero(size_t n) {
    d_positions.assign(n, Vec3::Zero());
    d_colors.assign(n, Vec3::Zero());
    d_rotations.assign(n, Vec4::Zero());
    d_log_scales.assign(n, Vec3::Zero());
    d_logit_opacities.assign(n, 0.0);
    d_center2d.assign(n, Vec2::Zero());
    contributed.assign(n, 0);
    d_pose.setZero();
}

bool ParamGrads::all_finite() const {
    auto ok3 = [](const std::vector<Vec3>& v) {
        for (const Vec3& x : v)
            if (!x.allFinite()) return false;
        return true;
    };
    for (const Vec4& x : d_rotations)
        if (!x.allFinite()) return false;
    for (double x : d_logit_opacities)
        if (!std::isfinite(x)) return false;
    return ok3(d_positions) && ok3(d_colors) && ok3(d_log_scales) && d_pose.allFinite();
}

int splat_thread_count() {
    const char* env = std::getenv("SPLAT_THREADS");
    if (!env) return 1;
    int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

RenderOutput render(const GaussianScene& scene, const PoseSE3& T, const CameraIntrinsics& K,
                    const RenderOptions& options) {
    K.validate();
    RenderOutput out;
    out.color = Image(K.height, K.width, 3);
    out.depth = DepthMap(K.height, K.width);
    out.alpha = Image(K.height, K.width, 1);
    out.processed.assign(static_cast<size_t>(K.height) * K.width, 0);
    out.tiles_x = (K.width + kTileSize - 1) / kTileSize;
    out.tiles_y = (K.height + kTileSize - 1) / kTileSize;

    std::vector<PreparedSplat> prepared = prepare_sorted(scene, T, K, options.center_offsets);
    out.splats.resize(prepared.size());
    for (size_t i = 0; i < prepared.size(); ++i)
        out.splats[i] = prepared[i].cache;

    out.tiles.assign(static_cast<size_t>(out.tiles_x) * out.tiles_y, {});
    for (size_t k = 0; k < prepared.size(); ++k) {
        const SplatCache& c = prepared[k].cache;
        double r = prepared[k].radius;
        double fx0 = std::floor((c.u - r) / kTileSize);
        double fx1 = std::floor((c.u + r) / kTileSize);
        double fy0 = std::floor((c.v - r) / kTileSize);
        double fy1 = std::floor((c.v + r) / kTileSize);
        if (fx1 < 0.0 || fy1 < 0.0 || fx0 > out.tiles_x - 1.0 || fy0 > out.tiles_y - 1.0)
            continue;
        int tx0 = fx0 < 0.0 ? 0 : static_cast<int>(fx0);
        int tx1 = fx1 > out.tiles_x - 1.0 ? out.tiles_x - 1 : static_cast<int>(fx1);
        int ty0 = fy0 < 0.0 ? 0 : static_cast<int>(fy0);
        int ty1 = fy1 > out.tiles_y - 1.0 ? out.tiles_y - 1 : static_cast<int>(fy1);
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                out.tiles[static_cast<size_t>(ty) * out.tiles_x + tx].push_back(
                    static_cast<int32_t>(k));
    }

    int tile_count = out.tiles_x * out.tiles_y;
    run_tiled(tile_count, splat_thread_count(), [&](int tile) {
        int ty = tile / out.tiles_x;
        int tx = tile % out.tiles_x;
        const std::vector<int32_t>& list = out.tiles[tile];
        int y1 = std::min(K.height, (ty + 1) * kTileSize);
        int x1 = std::min(K.width, (tx + 1) * kTileSize);
        for (int y = ty * kTileSize; y < y1; ++y) {
            for (int x = tx * kTileSize; x < x1; ++x) {
                double px = x + 0.5, py = y + 0.5;
                double trans = 1.0, red = 0.0, green = 0.0, blue = 0.0, depth = 0.0,
                       acc_alpha = 0.0;
                int32_t count = 0;
                for (int32_t entry : list) {
                    ++count;
                    const SplatCache& c = out.splats[entry];
                    double du = px - c.u, dv = py - c.v;
                    double q = c.lxx * du * du + 2.0 * c.lxy * du * dv + c.lyy * dv * dv;
                    if (q > c.qmax) continue;
                    double a = c.alpha_tilde * std::exp(-0.5 * q);
                    if (a > kAlphaClip) a = kAlphaClip;
                    double w = a * trans;
                    const Vec3& col = scene.colors[c.id];
                    red += w * col.x();
                    green += w * col.y();
                    blue += w * col.z();
                    depth += w * c.p_cam.z();
                    acc_alpha += w;
                    trans *= (1.0 - a);
                    if (trans < kTransmittanceMin) break;
                }
                out.color.at(y, x, 0) = red;
                out.color.at(y, x, 1) = green;
                out.color.at(y, x, 2) = blue;
                out.depth.at(y, x) = depth;
                out.alpha.at(y, x, 0) = acc_alpha;
                out.processed[static_cast<size_t>(y) * K.width + x] = count;
            }
        }
    });

    if (options.keep_replay) {
        out.has_replay = true;
        out.fingerprint = state_fingerprint(scene, T, K, options.center_offsets);
    } else {
        out.splats.clear();
        out.tiles.clear();
        out.processed.clear();
    }
    return out;
}

RenderOutput render_reference(const GaussianScene& scene, const PoseSE3& T,
                              const CameraIntrinsics& K, const RenderOptions& options) {
    K.validate();
    RenderOutput out;
    out.color = Image(K.height, K.width, 3);
    out.depth = DepthMap(K.height, K.width);
    out.alpha = Image(K.height, K.width, 1);

    std::vector<PreparedSplat> prepared = prepare_sorted(scene, T, K, options.center_offsets);
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            double px = x + 0.5, py = y + 0.5;
            double trans = 1.0, red = 0.0, green = 0.0, blue = 0.0, depth = 0.0,
                   acc_alpha = 0.0;
            for (const PreparedSplat& ps : prepared) {
                const SplatCache& c = ps.cache;
                double du = px - c.u, dv = py - c.v;
                double q = c.lxx * du * du + 2.0 * c.lxy * du * dv + c.lyy * dv * dv;
                double a = c.alpha_tilde * std::exp(-0.5 * q);
                if (a > kAlphaClip) a = kAlphaClip;
                double w = a * trans;
                const Vec3& col = scene.colors[c.id];
                red += w * col.x();
                green += w * col.y();
                blue += w * col.z();
                depth += w * c.p_cam.z();
                acc_alpha += w;
                trans *= (1.0 - a);
            }
            out.color.at(y, x, 0) = red;
            out.color.at(y, x, 1) = green;
            out.color.at(y, x, 2) = blue;
            out.depth.at(y, x) = depth;
            out.alpha.at(y, x, 0) = acc_alpha;
        }
    }
    return out;
}

namespace {

struct Contribution {
    int32_t splat = 0;   // index into RenderOutput::splats
    double a = 0.0;      // clipped per-pixel alpha
    double w = 0.0;      // blend weight a * T_before
    double t_before = 0.0;
    double g = 0.0;      // exp(-q/2)
    double du = 0.0, dv = 0.0;
    bool clipped = false;
};

struct Accumulators {
    std::vector<Vec3> d_color;
    std::vector<double> d_lxx, d_lxy, d_lyy;  // cotangent of the inverse covariance
    std::vector<Vec2> d_center;
    std::vector<double> d_logit;
    std::vector<double> d_zblend;
    std::vector<uint8_t> touched;

    void resize(size_t n) {
        d_color.assign(n, Vec3::Zero());
        d_lxx.assign(n, 0.0);
        d_lxy.assign(n, 0.0);
        d_lyy.assign(n, 0.0);
        d_center.assign(n, Vec2::Zero());
        d_logit.assign(n, 0.0);
        d_zblend.assign(n, 0.0);
        touched.assign(n, 0);
    }

    void add(const Accumulators& o) {
        for (size_t i = 0; i < d_color.size(); ++i) {
            if (!o.touched[i]) continue;
            d_color[i] += o.d_color[i];
            d_lxx[i] += o.d_lxx[i];
            d_lxy[i] += o.d_lxy[i];
            d_lyy[i] += o.d_lyy[i];
            d_center[i] += o.d_center[i];
            d_logit[i] += o.d_logit[i];
            d_zblend[i] += o.d_zblend[i];
            touched[i] = 1;
        }
    }
};

} // namespace

ParamGrads render_backward(const GaussianScene& scene, const PoseSE3& T,
                           const CameraIntrinsics& K, const RenderOutput& forward,
                           const Image& d_color, const Image& d_depth,
                           const RenderOptions& options) {
    if (!forward.has_replay)
        raise(Err::ReplayMismatch, "forward output carries no replay state");
    if (forward.fingerprint != state_fingerprint(scene, T, K, options.center_offsets))
        raise(Err::ReplayMismatch, "forward replay was produced from different inputs");
    if (d_color.height() != K.height || d_color.width() != K.width || d_color.channels() != 3)
        raise(Err::ShapeMismatch, "d_color shape does not match camera");
    if (d_depth.height() != K.height || d_depth.width() != K.width || d_depth.channels() != 1)
        raise(Err::ShapeMismatch, "d_depth shape does not match camera");

    size_t n = scene.size();
    ParamGrads grads;
    grads.resize_zero(n);
    grads.render_width = K.width;
    grads.render_height = K.height;

    int threads = splat_thread_count();
    int tile_count = forward.tiles_x * forward.tiles_y;
    std::vector<Accumulators> partials(threads <= 1 ? 1 : threads);
    for (auto& acc : partials) acc.resize(n);

    auto process_tile = [&](Accumulators& acc, int tile) {
        int ty = tile / forward.tiles_x;
        int tx = tile % forward.tiles_x;
        const std::vector<int32_t>& list = forward.tiles[tile];
        if (list.empty()) return;
        int y1 = std::min(K.height, (ty + 1) * kTileSize);
        int x1 = std::min(K.width, (tx + 1) * kTileSize);
        std::vector<Contribution> stack;
        stack.reserve(64);
        for (int y = ty * kTileSize; y < y1; ++y) {
            for (int x = tx * kTileSize; x < x1; ++x) {
                Vec3 dc(d_color.at(y, x, 0), d_color.at(y, x, 1), d_color.at(y, x, 2));
                double dd = d_depth.at(y, x, 0);
                if (dc.x() == 0.0 && dc.y() == 0.0 && dc.z() == 0.0 && dd == 0.0) continue;

                // replay the forward walk for this pixel
                double px = x + 0.5, py = y + 0.5;
                int32_t limit = forward.processed[static_cast<size_t>(y) * K.width + x];
                double trans = 1.0;
                stack.clear();
                for (int32_t e = 0; e < limit; ++e) {
                    const SplatCache& c = forward.splats[list[e]];
                    double du = px - c.u, dv = py - c.v;
                    double q = c.lxx * du * du + 2.0 * c.lxy * du * dv + c.lyy * dv * dv;
                    if (q > c.qmax) continue;
                    double g = std::exp(-0.5 * q);
                    double a = c.alpha_tilde * g;
                    bool clipped = a > kAlphaClip;
                    if (clipped) a = kAlphaClip;
                    Contribution con;
                    con.splat = list[e];
                    con.a = a;
                    con.t_before = trans;
                    con.w = a * trans;
                    con.g = g;
                    con.du = du;
                    con.dv = dv;
                    con.clipped = clipped;
                    stack.push_back(con);
                    trans *= (1.0 - a);
                }

                // suffix pass, back to front
                double suffix = 0.0;
                for (size_t k = stack.size(); k-- > 0;) {
                    const Contribution& con = stack[k];
                    const SplatCache& c = forward.splats[con.splat];
                    int32_t id = c.id;
                    double r = dc.dot(scene.colors[id]) + dd * c.p_cam.z();

                    acc.touched[id] = 1;
                    acc.d_color[id] += con.w * dc;
                    acc.d_zblend[id] += con.w * dd;

                    double da = r * con.t_before - suffix / (1.0 - con.a);
                    suffix += r * con.w;
                    if (con.clipped) continue;

                    acc.d_logit[id] += da * con.g * c.alpha_tilde * (1.0 - c.alpha_tilde);
                    double gq = -0.5 * con.a * da;
                    double dq_du = 2.0 * (c.lxx * con.du + c.lxy * con.dv);
                    double dq_dv = 2.0 * (c.lxy * con.du + c.lyy * con.dv);
                    acc.d_center[id] -= gq * Vec2(dq_du, dq_dv);
                    acc.d_lxx[id] += gq * con.du * con.du;
                    acc.d_lxy[id] += gq * 2.0 * con.du * con.dv;
                    acc.d_lyy[id] += gq * con.dv * con.dv;
                }
            }
        }
    };

    if (threads <= 1) {
        for (int t = 0; t < tile_count; ++t) process_tile(partials[0], t);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (int t = w; t < tile_count; t += threads) process_tile(partials[w], t);
            });
        for (auto& th : pool) th.join();
        for (int w = 1; w < threads; ++w) partials[0].add(partials[w]);
    }
    Accumulators& acc = partials[0];

    // Chain the per-splat accumulators through covariance projection,
    // the pinhole map, and the pose.
    Mat3 W = T.rotmat();
    std::vector<char> seen(n, 0);
    for (const SplatCache& c : forward.splats) {
        size_t id = static_cast<size_t>(c.id);
        if (seen[id]) continue;  // a splat appears once; guard anyway
        seen[id] = 1;
        if (!acc.touched[id]) continue;
        grads.contributed[id] = 1;
        grads.d_colors[id] = acc.d_color[id];
        grads.d_logit_opacities[id] = acc.d_logit[id];
        grads.d_center2d[id] = acc.d_center[id];

        const Vec3& p = c.p_cam;
        // d_lxy accumulated the symmetric pair jointly; split it back to a
        // full-matrix cotangent.
        Mat2 d_lambda;
        d_lambda << acc.d_lxx[id], 0.5 * acc.d_lxy[id], 0.5 * acc.d_lxy[id], acc.d_lyy[id];
        Mat2 lambda;
        lambda << c.lxx, c.lxy, c.lxy, c.lyy;
        Mat2 d_cov2 = -lambda * d_lambda * lambda;

        Mat3 R = quat_to_rotmat(scene.rot(id));
        Vec3 s2 = (2.0 * scene.log_scales[id]).array().exp();
        Mat3 sigma = R * s2.asDiagonal() * R.transpose();
        Mat3 M = W * sigma * W.transpose();

        double iz = 1.0 / p.z();
        double iz2 = iz * iz;
        Eigen::Matrix<double, 2, 3> J;
        J << K.fx * iz, 0.0, -K.fx * p.x() * iz2,
             0.0, K.fy * iz, -K.fy * p.y() * iz2;

        Mat3 dM = J.transpose() * d_cov2 * J;
        Eigen::Matrix<double, 2, 3> dJ = 2.0 * d_cov2 * J * M;

        Vec3 dp = Vec3::Zero();
        // J's own dependence on the camera-space point
        dp.x() += dJ(0, 2) * (-K.fx * iz2);
        dp.y() += dJ(1, 2) * (-K.fy * iz2);
        dp.z() += dJ(0, 0) * (-K.fx * iz2) + dJ(1, 1) * (-K.fy * iz2) +
                  dJ(0, 2) * (2.0 * K.fx * p.x() * iz2 * iz) +
                  dJ(1, 2) * (2.0 * K.fy * p.y() * iz2 * iz);
        // projected center and blended depth
        dp += J.transpose() * acc.d_center[id];
        dp.z() += acc.d_zblend[id];

        Mat3 d_sigma = W.transpose() * dM * W;
        Mat3 dR = 2.0 * d_sigma * R * s2.asDiagonal();
        Mat3 rtdr = R.transpose() * d_sigma * R;
        for (int k = 0; k < 3; ++k)
            grads.d_log_scales[id][k] = 2.0 * s2[k] * rtdr(k, k);

        // rotation-matrix cotangent back to the stored quaternion
        const Vec4& qs = scene.rotations[id];
        double qn = qs.norm();
        Vec4 qu = qs / qn;
        double w = qu[0], qx = qu[1], qy = qu[2], qz = qu[3];
        Mat3 Pw, Px, Py, Pz;
        Pw << 0, -qz, qy, qz, 0, -qx, -qy, qx, 0;
        Px << 0, qy, qz, qy, -2 * qx, -w, qz, w, -2 * qx;
        Py << -2 * qy, qx, w, qx, 0, qz, -w, qz, -2 * qy;
        Pz << -2 * qz, -w, qx, w, -2 * qz, qy, qx, qy, 0;
        Vec4 dq_unit(2.0 * dR.cwiseProduct(Pw).sum(), 2.0 * dR.cwiseProduct(Px).sum(),
                     2.0 * dR.cwiseProduct(Py).sum(), 2.0 * dR.cwiseProduct(Pz).sum());
        grads.d_rotations[id] = (dq_unit - qu * qu.dot(dq_unit)) / qn;

        grads.d_positions[id] = W.transpose() * dp;

        // pose tangent: translation, rotation moving the point, and rotation
        // moving the camera-frame covariance
        grads.d_pose.tail<3>() += dp;
        grads.d_pose.head<3>() += p.cross(dp);
        Mat3 B = M * dM;
        grads.d_pose[0] += 2.0 * (B(1, 2) - B(2, 1));
        grads.d_pose[1] += 2.0 * (B(2, 0) - B(0, 2));
        grads.d_pose[2] += 2.0 * (B(0, 1) - B(1, 0));
    }

    return grads;
}

void accumulate_densify_stats(GaussianScene& scene, const ParamGrads& grads) {
    scene.sync_state();
    if (grads.d_center2d.size() != scene.size())
        raise(Err::ShapeMismatch, "gradient count does not match scene");
    if (grads.render_width <= 0 || grads.render_height <= 0)
        raise(Err::InvalidArgument, "gradients lack render dimensions");
    const double sx = 0.5 * grads.render_width, sy = 0.5 * grads.render_height;
    for (size_t i = 0; i < scene.size(); ++i) {
        if (!grads.contributed[i]) continue;
        const Vec2& d = grads.d_center2d[i];
        scene.grad_accum[i] += Vec2(d.x() * sx, d.y() * sy).norm();
        scene.grad_count[i] += 1;
    }
}

} // namespace splatrec
