// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "json.hpp"
#include "splatrec/io/atomic_file.hpp"
#include "splatrec/io/pfm.hpp"
#include "splatrec/io/png_io.hpp"

namespace splatrec {
namespace {

// World geometry. All surfaces are closed (or unbounded) as seen from the
// camera path, so every pixel ray hits and every depth is valid.
constexpr double kPlaneZ = 2.5;
constexpr double kCavityRadius = 2.8;
const Vec3 kCavityCenter{0.0, 0.0, 2.2};
constexpr double kOrbitRadius = 2.2; // camera circles inside the cavity
constexpr double kArcRadius = 4.0;   // corridor centerline curvature
constexpr double kTubeHalfWidth = 0.5;
constexpr double kTubeHalfHeight = 0.4;
constexpr double kTubeBehind = 0.15; // rad of corridor behind the first camera
constexpr double kTubeAhead = 3.0;   // arc length past the last camera
constexpr double kSegmentStep = 0.04; // rad per piecewise-planar tube segment

constexpr double kRayEps = 1e-9;
constexpr double kBaryEps = 1e-12; // slack so shared triangle edges stay watertight
constexpr double kOcclusionTol = 1e-9;

// Shading: albedo from value noise, lit from the camera with quadratic
// falloff. The gain/floor window keeps texture contrast away from clipping.
constexpr double kTexBaseFreq = 1.7;
constexpr double kShadeGain = 1.25;
constexpr double kShadeFalloff = 0.08;
constexpr double kShadeFloor = 0.06;

constexpr double kOutlierMinPx = 5.0;
constexpr double kOutlierMaxPx = 20.0;

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t mix2(uint64_t a, uint64_t b) {
    return splitmix(a + 0x9e3779b97f4a7c15ULL * (b + 1));
}

double u01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// rng() % n instead of uniform_int_distribution: the distribution's mapping
// is implementation-defined, and bundles must be bitwise stable across
// platforms.
int bounded_draw(std::mt19937_64& rng, int n) {
    return static_cast<int>(rng() % static_cast<uint64_t>(n));
}

double lattice(uint64_t salt, int64_t x, int64_t y, int64_t z) {
    uint64_t h = salt;
    h = splitmix(h ^ static_cast<uint64_t>(x));
    h = splitmix(h ^ static_cast<uint64_t>(y));
    h = splitmix(h ^ static_cast<uint64_t>(z));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep01(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(const Vec3& p, uint64_t salt) {
    const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
    const int64_t ix = static_cast<int64_t>(fx);
    const int64_t iy = static_cast<int64_t>(fy);
    const int64_t iz = static_cast<int64_t>(fz);
    const double tx = smoothstep01(p.x() - fx);
    const double ty = smoothstep01(p.y() - fy);
    const double tz = smoothstep01(p.z() - fz);
    double corners[2][2][2];
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
                corners[dz][dy][dx] = lattice(salt, ix + dx, iy + dy, iz + dz);
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    const double c00 = lerp(corners[0][0][0], corners[0][0][1], tx);
    const double c01 = lerp(corners[0][1][0], corners[0][1][1], tx);
    const double c10 = lerp(corners[1][0][0], corners[1][0][1], tx);
    const double c11 = lerp(corners[1][1][0], corners[1][1][1], tx);
    return lerp(lerp(c00, c01, ty), lerp(c10, c11, ty), tz);
}

double fbm(const Vec3& p, int octaves, uint64_t salt) {
    double sum = 0.0, norm = 0.0, freq = kTexBaseFreq, amp = 1.0;
    for (int o = 0; o < octaves; ++o) {
        sum += amp * value_noise(p * freq, mix2(salt, static_cast<uint64_t>(o)));
        norm += amp;
        freq *= 2.0;
        amp *= 0.5;
    }
    return sum / norm;
}

struct Triangle {
    Vec3 a, b, c;
    Vec3 normal;
};

struct SurfaceHit {
    bool hit = false;
    double t = 0.0; // ray parameter; equals camera depth for dir_cam.z == 1
    Vec3 normal{0.0, 0.0, 1.0};
};

bool intersect_triangle(const Triangle& tri, const Vec3& o, const Vec3& d, double& t_out) {
    const Vec3 e1 = tri.b - tri.a;
    const Vec3 e2 = tri.c - tri.a;
    const Vec3 pvec = d.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < 1e-14) return false;
    const double inv = 1.0 / det;
    const Vec3 tvec = o - tri.a;
    const double u = tvec.dot(pvec) * inv;
    if (u < -kBaryEps || u > 1.0 + kBaryEps) return false;
    const Vec3 qvec = tvec.cross(e1);
    const double v = d.dot(qvec) * inv;
    if (v < -kBaryEps || u + v > 1.0 + kBaryEps) return false;
    const double t = e2.dot(qvec) * inv;
    if (t <= kRayEps) return false;
    t_out = t;
    return true;
}

// Corridor centerline: a circle of radius kArcRadius through the origin with
// tangent +z there, so the first camera starts at the world origin looking
// down the tube.
Vec3 arc_center(double theta) {
    return Vec3(kArcRadius * (1.0 - std::cos(theta)), 0.0, kArcRadius * std::sin(theta));
}

Vec3 arc_radial(double theta) { return Vec3(-std::cos(theta), 0.0, std::sin(theta)); }

struct World {
    SurfaceKind kind = SurfaceKind::Plane;
    std::vector<Triangle> triangles; // corridor only

    SurfaceHit intersect(const Vec3& o, const Vec3& d) const {
        SurfaceHit out;
        switch (kind) {
        case SurfaceKind::Plane: {
            if (std::abs(d.z()) < 1e-14) return out;
            const double t = (kPlaneZ - o.z()) / d.z();
            if (t <= kRayEps) return out;
            out.hit = true;
            out.t = t;
            out.normal = Vec3(0.0, 0.0, -1.0);
            return out;
        }
        case SurfaceKind::Cavity: {
            const Vec3 oc = o - kCavityCenter;
            const double a = d.squaredNorm();
            const double b = 2.0 * d.dot(oc);
            const double c = oc.squaredNorm() - kCavityRadius * kCavityRadius;
            const double disc = b * b - 4.0 * a * c;
            if (disc < 0.0) return out;
            const double t = (-b + std::sqrt(disc)) / (2.0 * a);
            if (t <= kRayEps) return out;
            out.hit = true;
            out.t = t;
            out.normal = (kCavityCenter - (o + t * d)) / kCavityRadius;
            return out;
        }
        case SurfaceKind::Corridor: {
            double best = 0.0;
            const Triangle* best_tri = nullptr;
            for (const Triangle& tri : triangles) {
                double t = 0.0;
                if (intersect_triangle(tri, o, d, t) && (!best_tri || t < best)) {
                    best = t;
                    best_tri = &tri;
                }
            }
            if (!best_tri) return out;
            out.hit = true;
            out.t = best;
            out.normal = best_tri->normal;
            return out;
        }
        }
        return out;
    }
};

// Quads may twist slightly (the radial direction rotates along the arc), so
// each half-triangle carries its own plane normal.
void push_quad(std::vector<Triangle>& tris, const Vec3& a, const Vec3& b, const Vec3& c,
               const Vec3& d) {
    tris.push_back({a, b, c, (b - a).cross(c - a).normalized()});
    tris.push_back({a, c, d, (c - a).cross(d - a).normalized()});
}

World build_world(const SynthPreset& preset) {
    World world;
    world.kind = preset.surface;
    if (preset.surface != SurfaceKind::Corridor) return world;

    const double theta_end = preset.extent / kArcRadius;
    const double lo = -kTubeBehind;
    const double hi = theta_end + kTubeAhead / kArcRadius;
    const int segments = std::max(1, static_cast<int>(std::ceil((hi - lo) / kSegmentStep)));

    // Cross-section corner in the frame at angle theta: radial (width) and
    // world-y (height) offsets around the centerline. The return type must be
    // a concrete vector, not a deduced Eigen expression over temporaries.
    auto corner = [&](double theta, double sx, double sy) -> Vec3 {
        return arc_center(theta) + sx * kTubeHalfWidth * arc_radial(theta) +
               Vec3(0.0, sy * kTubeHalfHeight, 0.0);
    };

    for (int s = 0; s < segments; ++s) {
        const double ta = lo + (hi - lo) * s / segments;
        const double tb = lo + (hi - lo) * (s + 1) / segments;
        // Four walls of the tube segment; shared corners make it watertight.
        push_quad(world.triangles, corner(ta, 1, -1), corner(ta, 1, 1), corner(tb, 1, 1),
                  corner(tb, 1, -1));
        push_quad(world.triangles, corner(ta, -1, -1), corner(ta, -1, 1), corner(tb, -1, 1),
                  corner(tb, -1, -1));
        push_quad(world.triangles, corner(ta, -1, -1), corner(ta, 1, -1), corner(tb, 1, -1),
                  corner(tb, -1, -1));
        push_quad(world.triangles, corner(ta, -1, 1), corner(ta, 1, 1), corner(tb, 1, 1),
                  corner(tb, -1, 1));
    }
    push_quad(world.triangles, corner(lo, -1, -1), corner(lo, 1, -1), corner(lo, 1, 1),
              corner(lo, -1, 1));
    push_quad(world.triangles, corner(hi, -1, -1), corner(hi, 1, -1), corner(hi, 1, 1),
              corner(hi, -1, 1));
    return world;
}

PoseSE3 path_pose(const SynthPreset& preset, int frame) {
    const double s =
        preset.frames <= 1 ? 0.0 : preset.extent * frame / (preset.frames - 1);
    PoseSE3 c2w;
    switch (preset.path) {
    case PathKind::Dolly: {
        // Mostly-forward translation with a lateral component so the flow
        // field carries parallax, not just expansion.
        const Vec3 dir = Vec3(0.35, 0.12, 1.0).normalized();
        c2w.translation = s * dir;
        return c2w;
    }
    case PathKind::Arc: {
        const double theta = s / kArcRadius;
        c2w.rotation = Quat(std::cos(theta / 2.0), 0.0, std::sin(theta / 2.0), 0.0);
        c2w.translation = arc_center(theta);
        return c2w;
    }
    case PathKind::Orbit: {
        // Circle inside the cavity, always looking at its center; s is the
        // swept angle in radians and frame 0 sits at the world origin.
        const double phi = s;
        c2w.rotation = Quat(std::cos(phi / 2.0), 0.0, -std::sin(phi / 2.0), 0.0);
        c2w.translation =
            kCavityCenter + kOrbitRadius * Vec3(std::sin(phi), 0.0, -std::cos(phi));
        return c2w;
    }
    }
    return c2w;
}

void render_frame(const World& world, const SynthPreset& preset, const CameraIntrinsics& K,
                  const PoseSE3& c2w, Image& color, DepthMap& depth) {
    uint64_t tex_salt[3];
    for (int c = 0; c < 3; ++c)
        tex_salt[c] = mix2(preset.seed ^ 0x7465787475726533ULL, static_cast<uint64_t>(c));

    const Vec3 origin = c2w.translation;
    for (int iy = 0; iy < K.height; ++iy) {
        for (int ix = 0; ix < K.width; ++ix) {
            // Unnormalized camera ray with z component 1: the intersection
            // parameter then equals the camera-space depth directly.
            const Vec3 dir_cam((ix + 0.5 - K.cx) / K.fx, (iy + 0.5 - K.cy) / K.fy, 1.0);
            const Vec3 dir = c2w.rotation * dir_cam;
            const SurfaceHit hit = world.intersect(origin, dir);
            if (!hit.hit) continue; // leave depth 0, color black
            depth.at(iy, ix) = hit.t;

            const Vec3 point = origin + hit.t * dir;
            const double dir_norm = dir.norm();
            const double dist = hit.t * dir_norm;
            const double cosine = std::abs(hit.normal.dot(dir)) / dir_norm;
            const double shade = std::clamp(
                kShadeGain * cosine / (1.0 + kShadeFalloff * dist * dist), kShadeFloor, 1.0);
            for (int c = 0; c < 3; ++c) {
                const double albedo =
                    0.5 + preset.texture_amplitude *
                              (fbm(point, preset.texture_octaves, tex_salt[c]) - 0.5);
                color.at(iy, ix, c) = albedo * shade;
            }
        }
    }
}

MatchSet make_matches(const SynthPreset& preset, const World& world,
                      const CameraIntrinsics& K, const DepthMap& depth_prev,
                      const PoseSE3& c2w_prev, const PoseSE3& c2w_cur, uint64_t pair_seed) {
    std::mt19937_64 rng(pair_seed);
    const PoseSE3 w2c_prev = c2w_prev.inverse();
    const PoseSE3 w2c_cur = c2w_cur.inverse();
    MatchSet out;
    out.reserve(preset.match_count);

    const int max_attempts = 40 * preset.match_count;
    for (int attempt = 0;
         attempt < max_attempts && static_cast<int>(out.size()) < preset.match_count;
         ++attempt) {
        const int ix = bounded_draw(rng, K.width);
        const int iy = bounded_draw(rng, K.height);
        const double d = depth_prev.at(iy, ix);
        if (d <= 0.0) continue;

        const double u_prev = ix + 0.5, v_prev = iy + 0.5;
        const Vec3 point = backproject(w2c_prev, K, u_prev, v_prev, d);
        const Vec3 p_cam = w2c_cur.apply(point);
        if (p_cam.z() <= kDepthEps) continue;
        const double u = K.cx + K.fx * p_cam.x() / p_cam.z();
        const double v = K.cy + K.fy * p_cam.y() / p_cam.z();
        if (u < 0.5 || u > K.width - 0.5 || v < 0.5 || v > K.height - 0.5) continue;

        // Occlusion check: re-cast the current-frame pixel ray and require it
        // to land on the same point (first hit at the expected depth).
        const Vec3 dir_cam((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
        const SurfaceHit hit = world.intersect(c2w_cur.translation, c2w_cur.rotation * dir_cam);
        if (!hit.hit || std::abs(hit.t - p_cam.z()) > kOcclusionTol * (1.0 + p_cam.z()))
            continue;

        out.push_back({u_prev, v_prev, u, v, 1.0});
    }

    // Outliers: displace the tail of the (randomly ordered) list by 5-20 px
    // and mark them with low confidence so filters can reject them.
    const int n_out = static_cast<int>(
        std::llround(preset.outlier_fraction * static_cast<double>(out.size())));
    for (int i = static_cast<int>(out.size()) - n_out; i < static_cast<int>(out.size()); ++i) {
        Match& m = out[static_cast<size_t>(i)];
        const double angle = 2.0 * M_PI * u01(rng);
        const double radius = kOutlierMinPx + (kOutlierMaxPx - kOutlierMinPx) * u01(rng);
        double du = radius * std::cos(angle), dv = radius * std::sin(angle);
        if (m.u_cur + du < 0.5 || m.u_cur + du > K.width - 0.5) du = -du;
        if (m.v_cur + dv < 0.5 || m.v_cur + dv > K.height - 0.5) dv = -dv;
        m.u_cur = std::clamp(m.u_cur + du, 0.5, K.width - 0.5);
        m.v_cur = std::clamp(m.v_cur + dv, 0.5, K.height - 0.5);
        m.confidence = preset.outlier_confidence;
    }
    return out;
}

std::string index_name(int index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d%s", index, ext);
    return buf;
}

std::string pair_name(int prev, int cur) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d_%06d.csv", prev, cur);
    return buf;
}

} // namespace

CameraIntrinsics SynthPreset::intrinsics() const {
    CameraIntrinsics K;
    K.width = width;
    K.height = height;
    K.fx = K.fy = 0.85 * width;
    K.cx = width / 2.0;
    K.cy = height / 2.0;
    return K;
}

void SynthPreset::validate() const {
    if (frames < 1) raise(Err::InvalidPreset, "frames must be >= 1");
    if (width < 8 || height < 8) raise(Err::InvalidPreset, "image size must be >= 8x8");
    if (!(extent >= 0.0) || !std::isfinite(extent))
        raise(Err::InvalidPreset, "extent must be finite and >= 0");
    if (texture_octaves < 1) raise(Err::InvalidPreset, "texture_octaves must be >= 1");
    if (texture_amplitude < 0.0 || texture_amplitude > 1.0)
        raise(Err::InvalidPreset, "texture_amplitude must be in [0,1]");
    if (match_count < 0) raise(Err::InvalidPreset, "match_count must be >= 0");
    if (outlier_fraction < 0.0 || outlier_fraction > 1.0)
        raise(Err::InvalidPreset, "outlier_fraction must be in [0,1]");
    if (outlier_confidence < 0.0 || outlier_confidence > 1.0)
        raise(Err::InvalidPreset, "outlier_confidence must be in [0,1]");
}

SynthPreset preset_by_name(const std::string& name) {
    SynthPreset p;
    if (name == "plane") {
        p.surface = SurfaceKind::Plane;
        p.path = PathKind::Dolly;
        p.extent = 0.3;
    } else if (name == "cavity") {
        p.surface = SurfaceKind::Cavity;
        p.path = PathKind::Orbit;
        p.extent = 0.12; // radians swept around the cavity center
    } else if (name == "corridor") {
        p.surface = SurfaceKind::Corridor;
        p.path = PathKind::Arc;
        p.extent = 0.55;
    } else if (name == "lowtex") {
        p.surface = SurfaceKind::Plane;
        p.path = PathKind::Dolly;
        p.extent = 0.3;
        p.texture_octaves = 1;
        p.texture_amplitude = 0.25;
    } else {
        raise(Err::InvalidPreset, "unknown preset: " + name);
    }
    return p;
}

SynthBundle generate(const SynthPreset& preset) {
    preset.validate();
    SynthBundle bundle;
    bundle.K = preset.intrinsics();
    bundle.K.validate();

    const World world = build_world(preset);
    bundle.frames.reserve(preset.frames);
    bundle.depths.reserve(preset.frames);
    for (int i = 0; i < preset.frames; ++i) {
        const PoseSE3 c2w = path_pose(preset, i);
        bundle.poses_c2w.push_back({static_cast<double>(i), c2w});
        Image color(preset.height, preset.width, 3);
        DepthMap depth(preset.height, preset.width);
        render_frame(world, preset, bundle.K, c2w, color, depth);
        bundle.frames.push_back(std::move(color));
        bundle.depths.push_back(std::move(depth));
    }

    for (int i = 0; i + 1 < preset.frames; ++i) {
        MatchEntry entry;
        entry.prev = i;
        entry.cur = i + 1;
        entry.set = make_matches(
            preset, world, bundle.K, bundle.depths[i], bundle.poses_c2w[i].pose,
            bundle.poses_c2w[i + 1].pose,
            mix2(mix2(preset.seed ^ 0x6d61746368ULL, static_cast<uint64_t>(i)),
                 static_cast<uint64_t>(i + 1)));
        bundle.matches.push_back(std::move(entry));
    }
    return bundle;
}

void write_bundle(const SynthBundle& bundle, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "frames");
    fs::create_directories(fs::path(dir) / "depth");
    fs::create_directories(fs::path(dir) / "matches");

    for (size_t i = 0; i < bundle.frames.size(); ++i) {
        const int idx = static_cast<int>(i);
        write_png_linear((fs::path(dir) / "frames" / index_name(idx, ".png")).string(),
                         bundle.frames[i]);
        write_pfm((fs::path(dir) / "depth" / index_name(idx, ".pfm")).string(),
                  bundle.depths[i]);
    }
    for (const MatchEntry& entry : bundle.matches)
        write_matches_csv((fs::path(dir) / "matches" / pair_name(entry.prev, entry.cur)).string(),
                          entry.set);
    write_tum((fs::path(dir) / "groundtruth.tum").string(), bundle.poses_c2w);

    nlohmann::ordered_json j;
    j["fx"] = bundle.K.fx;
    j["fy"] = bundle.K.fy;
    j["cx"] = bundle.K.cx;
    j["cy"] = bundle.K.cy;
    j["width"] = bundle.K.width;
    j["height"] = bundle.K.height;
    AtomicFileWriter writer(fs::path(dir) / "intrinsics.json");
    writer.stream() << j.dump(2) << "\n";
    writer.commit();
}

} // namespace splatrec
