// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/losses.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace splatrec {

namespace {

void check_same_shape(const Image& a, const Image& b, const char* where) {
    if (!a.same_shape(b))
        raise(Err::ShapeMismatch, std::string(where) + ": image shapes differ");
}

std::vector<double> gauss_kernel(int window, double sigma) {
    std::vector<double> k(static_cast<size_t>(window));
    int r = window / 2;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        double d = i - r;
        k[i] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k)
        v /= sum;
    return k;
}

// Separable zero-padded correlation of a single-channel H x W buffer with a
// symmetric kernel. Outputs within the interior (where the window fits) are
// exact; border outputs see the zero padding and must not be consumed.
void filter2(const std::vector<double>& in, std::vector<double>& out, int h, int w,
             const std::vector<double>& k) {
    int r = static_cast<int>(k.size()) / 2;
    std::vector<double> tmp(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = in.data() + static_cast<size_t>(y) * w;
        double* trow = tmp.data() + static_cast<size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            int j0 = std::max(-r, -x), j1 = std::min(r, w - 1 - x);
            for (int j = j0; j <= j1; ++j)
                acc += k[static_cast<size_t>(j + r)] * row[x + j];
            trow[x] = acc;
        }
    }
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        int j0 = std::max(-r, -y), j1 = std::min(r, h - 1 - y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = j0; j <= j1; ++j)
                acc += k[static_cast<size_t>(j + r)] * tmp[static_cast<size_t>(y + j) * w + x];
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    }
}

struct SsimChannelStats {
    std::vector<double> mu_a, mu_b, var_a, var_b, cov_ab;
};

void ssim_channel_stats(const Image& a, const Image& b, int c, const std::vector<double>& kernel,
                        SsimChannelStats& s) {
    int h = a.height(), w = a.width();
    size_t n = static_cast<size_t>(h) * w;
    std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            size_t i = static_cast<size_t>(y) * w + x;
            double va = a.at(y, x, c), vb = b.at(y, x, c);
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
    filter2(pa, s.mu_a, h, w, kernel);
    filter2(pb, s.mu_b, h, w, kernel);
    filter2(paa, s.var_a, h, w, kernel);
    filter2(pbb, s.var_b, h, w, kernel);
    filter2(pab, s.cov_ab, h, w, kernel);
    for (size_t i = 0; i < n; ++i) {
        s.var_a[i] -= s.mu_a[i] * s.mu_a[i];
        s.var_b[i] -= s.mu_b[i] * s.mu_b[i];
        s.cov_ab[i] -= s.mu_a[i] * s.mu_b[i];
    }
}

double ssim_point(const SsimChannelStats& s, size_t i, double c1, double c2) {
    double a1 = 2.0 * s.mu_a[i] * s.mu_b[i] + c1;
    double a2 = 2.0 * s.cov_ab[i] + c2;
    double b1 = s.mu_a[i] * s.mu_a[i] + s.mu_b[i] * s.mu_b[i] + c1;
    double b2 = s.var_a[i] + s.var_b[i] + c2;
    return (a1 * a2) / (b1 * b2);
}

void ssim_require_window_fit(const Image& a, int window) {
    if (a.height() < window || a.width() < window)
        raise(Err::InvalidArgument, "image smaller than the SSIM window");
}

uint64_t bounded_draw(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

} // namespace

void LossConfig::validate() const {
    if (lambda_rgb < 0 || lambda_pgc < 0 || lambda_dgc < 0)
        raise(Err::InvalidArgument, "loss weights must be non-negative");
    if (dssim_mix < 0 || dssim_mix > 1)
        raise(Err::InvalidArgument, "dssim_mix must be in [0,1]");
    if (dgc_patch_size < 2)
        raise(Err::InvalidArgument, "dgc_patch_size must be at least 2");
    if (dgc_patch_count < 1)
        raise(Err::InvalidArgument, "dgc_patch_count must be positive");
    if (!(pearson_eps > 0))
        raise(Err::InvalidArgument, "pearson_eps must be positive");
    if (!(depth_clamp_k > 0))
        raise(Err::InvalidArgument, "depth_clamp_k must be positive");
    if (confidence_min < 0 || confidence_min > 1)
        raise(Err::InvalidArgument, "confidence_min must be in [0,1]");
    if (ssim_window < 3 || ssim_window % 2 == 0)
        raise(Err::InvalidArgument, "ssim_window must be odd and at least 3");
    if (!(ssim_sigma > 0) || !(ssim_c1 > 0) || !(ssim_c2 > 0))
        raise(Err::InvalidArgument, "ssim parameters must be positive");
}

ScalarImageLoss l1_loss(const Image& a, const Image& b) {
    check_same_shape(a, b, "l1_loss");
    ScalarImageLoss out;
    out.d_a = Image(a.height(), a.width(), a.channels());
    double n = static_cast<double>(a.size());
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a.raw()[i] - b.raw()[i];
        sum += std::abs(d);
        out.d_a.raw()[i] = (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / n;
    }
    out.value = sum / n;
    return out;
}

double ssim_mean(const Image& a, const Image& b, const LossConfig& cfg) {
    check_same_shape(a, b, "ssim_mean");
    ssim_require_window_fit(a, cfg.ssim_window);
    std::vector<double> kernel = gauss_kernel(cfg.ssim_window, cfg.ssim_sigma);
    int h = a.height(), w = a.width(), r = cfg.ssim_window / 2;
    double sum = 0.0;
    size_t count = 0;
    SsimChannelStats s;
    for (int c = 0; c < a.channels(); ++c) {
        ssim_channel_stats(a, b, c, kernel, s);
        for (int y = r; y < h - r; ++y)
            for (int x = r; x < w - r; ++x) {
                sum += ssim_point(s, static_cast<size_t>(y) * w + x, cfg.ssim_c1, cfg.ssim_c2);
                ++count;
            }
    }
    return sum / static_cast<double>(count);
}

ScalarImageLoss dssim_loss(const Image& a, const Image& b, const LossConfig& cfg) {
    check_same_shape(a, b, "dssim_loss");
    ssim_require_window_fit(a, cfg.ssim_window);
    std::vector<double> kernel = gauss_kernel(cfg.ssim_window, cfg.ssim_sigma);
    int h = a.height(), w = a.width(), r = cfg.ssim_window / 2;
    size_t n = static_cast<size_t>(h) * w;
    size_t valid = static_cast<size_t>(h - 2 * r) * (w - 2 * r) * a.channels();

    ScalarImageLoss out;
    out.d_a = Image(h, w, a.channels());
    double ssim_sum = 0.0;
    double upstream = -0.5 / static_cast<double>(valid);

    SsimChannelStats s;
    std::vector<double> g_mu(n), g_va(n), g_cab(n), t1(n), t2(n), f(n);
    for (int c = 0; c < a.channels(); ++c) {
        ssim_channel_stats(a, b, c, kernel, s);
        std::fill(g_mu.begin(), g_mu.end(), 0.0);
        std::fill(g_va.begin(), g_va.end(), 0.0);
        std::fill(g_cab.begin(), g_cab.end(), 0.0);
        for (int y = r; y < h - r; ++y)
            for (int x = r; x < w - r; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                double a1 = 2.0 * s.mu_a[i] * s.mu_b[i] + cfg.ssim_c1;
                double a2 = 2.0 * s.cov_ab[i] + cfg.ssim_c2;
                double b1 = s.mu_a[i] * s.mu_a[i] + s.mu_b[i] * s.mu_b[i] + cfg.ssim_c1;
                double b2 = s.var_a[i] + s.var_b[i] + cfg.ssim_c2;
                double num = a1 * a2, den = b1 * b2;
                ssim_sum += num / den;
                double inv_den = 1.0 / den;
                g_mu[i] = upstream * (2.0 * s.mu_b[i] * a2 * inv_den -
                                      num * 2.0 * s.mu_a[i] * b2 * inv_den * inv_den);
                g_va[i] = upstream * (-num * b1 * inv_den * inv_den);
                g_cab[i] = upstream * (2.0 * a1 * inv_den);
            }
        // Adjoint of the window statistics: correlate the per-pixel partials
        // back through the Gaussian window.
        filter2(g_mu, f, h, w, kernel);
        for (size_t i = 0; i < n; ++i)
            t1[i] = g_va[i] * s.mu_a[i];
        filter2(t1, t2, h, w, kernel);
        for (size_t i = 0; i < n; ++i)
            f[i] -= 2.0 * t2[i];
        filter2(g_va, t2, h, w, kernel);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                f[static_cast<size_t>(y) * w + x] +=
                    2.0 * a.at(y, x, c) * t2[static_cast<size_t>(y) * w + x];
        for (size_t i = 0; i < n; ++i)
            t1[i] = g_cab[i] * s.mu_b[i];
        filter2(t1, t2, h, w, kernel);
        for (size_t i = 0; i < n; ++i)
            f[i] -= t2[i];
        filter2(g_cab, t2, h, w, kernel);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                out.d_a.at(y, x, c) = f[i] + b.at(y, x, c) * t2[i];
            }
    }
    out.value = 0.5 * (1.0 - ssim_sum / static_cast<double>(valid));
    return out;
}

ScalarImageLoss rgb_loss(const Image& rendered, const Image& target, const LossConfig& cfg) {
    check_same_shape(rendered, target, "rgb_loss");
    ScalarImageLoss l1 = l1_loss(rendered, target);
    if (cfg.dssim_mix == 0.0)
        return l1;
    ScalarImageLoss ds = dssim_loss(rendered, target, cfg);
    ScalarImageLoss out;
    out.value = (1.0 - cfg.dssim_mix) * l1.value + cfg.dssim_mix * ds.value;
    out.d_a = Image(rendered.height(), rendered.width(), rendered.channels());
    for (size_t i = 0; i < out.d_a.size(); ++i)
        out.d_a.raw()[i] =
            (1.0 - cfg.dssim_mix) * l1.d_a.raw()[i] + cfg.dssim_mix * ds.d_a.raw()[i];
    return out;
}

DepthMap depth_from_render(const DepthMap& depth, const Image& alpha, double min_alpha) {
    if (alpha.channels() != 1 || depth.height() != alpha.height() ||
        depth.width() != alpha.width())
        raise(Err::ShapeMismatch, "depth_from_render: depth and alpha shapes differ");
    DepthMap out(depth.height(), depth.width());
    for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x)
            out.at(y, x) = alpha.at(y, x, 0) >= min_alpha ? depth.at(y, x) : 0.0;
    return out;
}

Image depth_to_image(const DepthMap& depth) {
    Image out(depth.height(), depth.width(), 1);
    out.raw() = depth.raw();
    return out;
}

std::vector<uint8_t> depth_mask(const DepthMap& depth, double k) {
    if (!(k > 0))
        raise(Err::InvalidArgument, "depth_mask: k must be positive");
    std::vector<uint8_t> mask(depth.size(), 0);
    bool any_valid = false;
    for (double v : depth.raw())
        if (v > 0) {
            any_valid = true;
            break;
        }
    if (!any_valid)
        return mask;
    double cutoff = k * depth.median_valid();
    for (size_t i = 0; i < depth.size(); ++i)
        mask[i] = depth.raw()[i] > 0 && depth.raw()[i] <= cutoff;
    return mask;
}

BilinearTaps bilinear_taps(int width, int height, double u, double v) {
    double x = u - 0.5, y = v - 0.5;
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    double fx = x - x0, fy = y - y0;
    auto cx = [&](int q) { return std::clamp(q, 0, width - 1); };
    auto cy = [&](int q) { return std::clamp(q, 0, height - 1); };
    BilinearTaps t;
    t.x[0] = cx(x0);
    t.y[0] = cy(y0);
    t.w[0] = (1 - fx) * (1 - fy);
    t.x[1] = cx(x0 + 1);
    t.y[1] = cy(y0);
    t.w[1] = fx * (1 - fy);
    t.x[2] = cx(x0);
    t.y[2] = cy(y0 + 1);
    t.w[2] = (1 - fx) * fy;
    t.x[3] = cx(x0 + 1);
    t.y[3] = cy(y0 + 1);
    t.w[3] = fx * fy;
    return t;
}

double sample_bilinear(const Image& img, double u, double v, int channel) {
    BilinearTaps t = bilinear_taps(img.width(), img.height(), u, v);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        acc += t.w[i] * img.at(t.y[i], t.x[i], channel);
    return acc;
}

PgcResult pgc_loss(const MatchSet& matches, const Image& depth_prev,
                   const std::vector<uint8_t>& mask_prev, const PoseSE3& T_prev,
                   const PoseSE3& T_cur, const CameraIntrinsics& K, const LossConfig& cfg) {
    if (depth_prev.channels() != 1)
        raise(Err::ShapeMismatch, "pgc_loss: depth must be single-channel");
    if (mask_prev.size() != depth_prev.size())
        raise(Err::ShapeMismatch, "pgc_loss: mask size does not match depth");
    int w = depth_prev.width(), h = depth_prev.height();

    Mat3 r_prev_inv = T_prev.rotmat().transpose();
    Mat3 r_cur = T_cur.rotmat();
    Mat3 r_rel = r_cur * r_prev_inv;

    struct Active {
        const Match* m;
        BilinearTaps taps;
        Vec3 dir;
        Vec3 p_cc;
        double s, s_hat;
        Vec2 e;
    };
    std::vector<Active> active;
    active.reserve(matches.size());
    for (const Match& m : matches) {
        if (m.confidence < cfg.confidence_min)
            continue;
        BilinearTaps taps = bilinear_taps(w, h, m.u_prev, m.v_prev);
        bool ok = true;
        double d = 0.0;
        for (int i = 0; i < 4; ++i) {
            size_t idx = static_cast<size_t>(taps.y[i]) * w + taps.x[i];
            if (!mask_prev[idx]) {
                ok = false;
                break;
            }
            d += taps.w[i] * depth_prev.at(taps.y[i], taps.x[i], 0);
        }
        if (!ok || d <= kDepthEps)
            continue;
        Vec3 dir((m.u_prev - K.cx) / K.fx, (m.v_prev - K.cy) / K.fy, 1.0);
        Vec3 p_world = r_prev_inv * (dir * d - T_prev.translation);
        Vec3 p_cc = r_cur * p_world + T_cur.translation;
        if (p_cc.z() <= kDepthEps)
            continue;
        Active a;
        a.m = &m;
        a.taps = taps;
        a.dir = dir;
        a.p_cc = p_cc;
        double uh = K.cx + K.fx * p_cc.x() / p_cc.z();
        double vh = K.cy + K.fy * p_cc.y() / p_cc.z();
        a.e = Vec2(uh - m.u_prev, vh - m.v_prev);
        a.s_hat = a.e.norm();
        a.s = std::hypot(m.u_cur - m.u_prev, m.v_cur - m.v_prev);
        active.push_back(a);
    }
    if (active.empty())
        raise(Err::NoValidMatches, "pgc_loss: no usable matches after filtering");

    double inv_m = 1.0 / static_cast<double>(active.size());
    PgcResult out;
    out.used_matches = static_cast<int>(active.size());
    out.d_depth_prev = Image(h, w, 1);

    // Upstream on each s_hat_i; the two modes differ only in where the
    // absolute value sits.
    std::vector<double> g_shat(active.size(), 0.0);
    if (cfg.pgc_per_match) {
        double sum = 0.0;
        for (size_t i = 0; i < active.size(); ++i) {
            double d = active[i].s - active[i].s_hat;
            sum += std::abs(d);
            g_shat[i] = (d > 0 ? -1.0 : d < 0 ? 1.0 : 0.0) * inv_m;
        }
        out.value = sum * inv_m;
    } else {
        double ds = 0.0, dsh = 0.0;
        for (const Active& a : active) {
            ds += a.s;
            dsh += a.s_hat;
        }
        ds *= inv_m;
        dsh *= inv_m;
        double diff = ds - dsh;
        out.value = std::abs(diff);
        double g = (diff > 0 ? -1.0 : diff < 0 ? 1.0 : 0.0) * inv_m;
        std::fill(g_shat.begin(), g_shat.end(), g);
    }

    for (size_t i = 0; i < active.size(); ++i) {
        const Active& a = active[i];
        if (g_shat[i] == 0.0 || a.s_hat < 1e-12)
            continue;
        Vec2 g_e = g_shat[i] * a.e / a.s_hat;
        double z = a.p_cc.z(), inv_z = 1.0 / z;
        Vec3 g_p(K.fx * inv_z * g_e.x(), K.fy * inv_z * g_e.y(),
                 (-K.fx * a.p_cc.x() * g_e.x() - K.fy * a.p_cc.y() * g_e.y()) * inv_z * inv_z);
        out.d_pose_cur.tail<3>() += g_p;
        out.d_pose_cur.head<3>() += a.p_cc.cross(g_p);
        double g_d = g_p.dot(r_rel * a.dir);
        for (int t = 0; t < 4; ++t)
            out.d_depth_prev.at(a.taps.y[t], a.taps.x[t], 0) += g_d * a.taps.w[t];
    }
    return out;
}

DgcResult dgc_loss(const DepthMap& depth_provider, const Image& depth_rendered,
                   const std::vector<uint8_t>& mask, const LossConfig& cfg, uint64_t rng_seed) {
    int h = depth_rendered.height(), w = depth_rendered.width();
    if (depth_rendered.channels() != 1 || depth_provider.height() != h ||
        depth_provider.width() != w || mask.size() != depth_rendered.size())
        raise(Err::ShapeMismatch, "dgc_loss: depth/mask shapes differ");
    int a = cfg.dgc_patch_size;
    DgcResult out;
    out.d_depth_rendered = Image(h, w, 1);
    if (w < a || h < a)
        raise(Err::NoValidPatches, "dgc_loss: image smaller than the patch size");

    std::mt19937_64 rng(rng_seed);
    int max_x = w - a, max_y = h - a;
    struct Patch {
        int x0, y0;
    };
    std::vector<Patch> patches;
    int attempts = 10 * cfg.dgc_patch_count;
    for (int t = 0; t < attempts && static_cast<int>(patches.size()) < cfg.dgc_patch_count; ++t) {
        int x0 = static_cast<int>(bounded_draw(rng, static_cast<uint64_t>(max_x) + 1));
        int y0 = static_cast<int>(bounded_draw(rng, static_cast<uint64_t>(max_y) + 1));
        bool ok = true;
        for (int y = y0; y < y0 + a && ok; ++y)
            for (int x = x0; x < x0 + a; ++x) {
                size_t idx = static_cast<size_t>(y) * w + x;
                if (!mask[idx] || depth_provider.at(y, x) <= 0) {
                    ok = false;
                    break;
                }
            }
        if (ok)
            patches.push_back({x0, y0});
    }
    if (patches.empty())
        raise(Err::NoValidPatches, "dgc_loss: no fully valid patch found");

    // A patch whose depth is (numerically) constant on either side carries no
    // correlation signal, only cancellation noise amplified by 1/eps; such
    // patches are rejected. The floor is relative so affine rescaling of the
    // depths cannot flip a verdict.
    constexpr double kVarianceFloor = 1e-9;
    double n = static_cast<double>(a) * a;
    struct PatchStats {
        Patch p;
        double mx, my, var_x, var_y, cov;
    };
    std::vector<PatchStats> valid;
    valid.reserve(patches.size());
    for (const Patch& p : patches) {
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int y = p.y0; y < p.y0 + a; ++y)
            for (int x = p.x0; x < p.x0 + a; ++x) {
                double xv = depth_provider.at(y, x), yv = depth_rendered.at(y, x, 0);
                sx += xv;
                sy += yv;
                sxx += xv * xv;
                syy += yv * yv;
                sxy += xv * yv;
            }
        PatchStats s;
        s.p = p;
        s.mx = sx / n;
        s.my = sy / n;
        s.var_x = std::max(sxx / n - s.mx * s.mx, 0.0);
        s.var_y = std::max(syy / n - s.my * s.my, 0.0);
        s.cov = sxy / n - s.mx * s.my;
        if (s.var_x <= kVarianceFloor * (1.0 + s.mx * s.mx) ||
            s.var_y <= kVarianceFloor * (1.0 + s.my * s.my))
            continue;
        valid.push_back(s);
    }
    if (valid.empty())
        raise(Err::NoValidPatches, "dgc_loss: every candidate patch is depth-constant");

    double inv_m = 1.0 / static_cast<double>(valid.size());
    out.used_patches = static_cast<int>(valid.size());
    double rho_sum = 0.0;
    for (const PatchStats& s : valid) {
        double sig_x = std::sqrt(s.var_x), sig_y = std::sqrt(s.var_y);
        double den = (sig_x + cfg.pearson_eps) * (sig_y + cfg.pearson_eps);
        double rho = s.cov / den;
        rho_sum += rho;
        // d(1 - mean rho)/d y_j, accumulated across overlapping patches.
        double c1 = -inv_m / (n * den);
        double c2 = inv_m * s.cov / (n * sig_y * den * (sig_y + cfg.pearson_eps));
        for (int y = s.p.y0; y < s.p.y0 + a; ++y)
            for (int x = s.p.x0; x < s.p.x0 + a; ++x) {
                double xv = depth_provider.at(y, x), yv = depth_rendered.at(y, x, 0);
                out.d_depth_rendered.at(y, x, 0) += c1 * (xv - s.mx) + c2 * (yv - s.my);
            }
    }
    out.value = 1.0 - rho_sum * inv_m;
    return out;
}

TotalLossResult total_loss(const ScalarImageLoss& rgb, const PgcResult* pgc, const DgcResult* dgc,
                           const LossConfig& cfg) {
    auto require_finite = [](double v, const char* term) {
        if (!std::isfinite(v))
            raise(Err::NonFiniteLoss, std::string("total_loss: non-finite ") + term);
    };
    require_finite(rgb.value, "rgb term");
    if (pgc)
        require_finite(pgc->value, "pgc term");
    if (dgc)
        require_finite(dgc->value, "dgc term");

    TotalLossResult out;
    out.value = cfg.lambda_rgb * rgb.value + (pgc ? cfg.lambda_pgc * pgc->value : 0.0) +
                (dgc ? cfg.lambda_dgc * dgc->value : 0.0);
    require_finite(out.value, "total");

    if (!rgb.d_a.empty()) {
        out.d_color = Image(rgb.d_a.height(), rgb.d_a.width(), rgb.d_a.channels());
        for (size_t i = 0; i < out.d_color.size(); ++i)
            out.d_color.raw()[i] = cfg.lambda_rgb * rgb.d_a.raw()[i];
    }
    const Image* depth_shape = pgc ? &pgc->d_depth_prev : dgc ? &dgc->d_depth_rendered : nullptr;
    if (depth_shape) {
        if (pgc && dgc && !pgc->d_depth_prev.same_shape(dgc->d_depth_rendered))
            raise(Err::ShapeMismatch, "total_loss: depth gradient shapes differ");
        out.d_depth = Image(depth_shape->height(), depth_shape->width(), 1);
        for (size_t i = 0; i < out.d_depth.size(); ++i)
            out.d_depth.raw()[i] =
                (pgc ? cfg.lambda_pgc * pgc->d_depth_prev.raw()[i] : 0.0) +
                (dgc ? cfg.lambda_dgc * dgc->d_depth_rendered.raw()[i] : 0.0);
    }
    if (pgc)
        out.d_pose = cfg.lambda_pgc * pgc->d_pose_cur;
    return out;
}

} // namespace splatrec
