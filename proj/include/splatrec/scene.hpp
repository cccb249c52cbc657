// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "splatrec/geometry.hpp"
#include "splatrec/image.hpp"

namespace splatrec {

struct DensifyConfig {
    double grad_threshold = 2e-4;         // mean screen-space gradient norm
    double split_scale_threshold = 0.01;  // scene units; above this, split instead of clone
    double split_factor = 1.6;            // child scale = parent scale / split_factor
    double prune_opacity = 5e-3;
    double clone_jitter_sigma = 1e-3;     // scene units, offset of the cloned copy
};

// Structure-of-arrays store of gaussian parameters. Scales and opacities are
// kept unconstrained (log / logit) so plain gradient steps cannot leave the
// valid domain. Optimizer moments and densification statistics live alongside
// the parameters so lifecycle edits (append / remove) keep them aligned.
class GaussianScene {
  public:
    std::vector<Vec3> positions;
    std::vector<Vec3> colors;            // linear RGB in [0,1]
    std::vector<Vec4> rotations;         // quaternion, w first; unit after every step
    std::vector<Vec3> log_scales;
    std::vector<double> logit_opacities;

    // Densification statistics: sum of per-render screen-space positional
    // gradient norms, and how many renders the gaussian contributed to.
    std::vector<double> grad_accum;
    std::vector<int32_t> grad_count;

    struct Moments {
        std::vector<double> m, v;
        void resize(size_t n) {
            m.resize(n, 0.0);
            v.resize(n, 0.0);
        }
        void clear_at(size_t i) { m[i] = 0.0; v[i] = 0.0; }
    };
    Moments mom_position, mom_color, mom_rotation, mom_scale, mom_opacity;
    int64_t adam_steps = 0;

    size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }

    Vec3 scale(size_t i) const { return log_scales[i].array().exp(); }
    double opacity(size_t i) const { return 1.0 / (1.0 + std::exp(-logit_opacities[i])); }
    Quat rot(size_t i) const {
        const Vec4& q = rotations[i];
        return Quat(q[0], q[1], q[2], q[3]);
    }

    void append(const Vec3& position, const Vec3& color, const Vec4& rotation,
                const Vec3& log_scale, double logit_opacity);

    // Keeps gaussians where keep[i] != 0; parameters, statistics and moments
    // stay row-aligned.
    void remove_by_mask(const std::vector<uint8_t>& keep);

    // Grows statistics and moment arrays to the parameter count, zero-filling
    // new rows. Called after appends.
    void sync_state();

    void check_consistent() const;
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// One gaussian per valid depth pixel on a stride grid: position from
// back-projection, color from the image, identity rotation, isotropic scale
// stride * depth / fx, opacity init_opacity.
GaussianScene init_from_depth(const Image& image, const DepthMap& depth,
                              const CameraIntrinsics& K, const PoseSE3& T, int stride,
                              double init_opacity = 0.1);

// mu' = A mu, r' = rot(A) * r; colors, scales, opacities and optimizer state
// carried over unchanged.
GaussianScene transform_scene(const GaussianScene& scene, const PoseSE3& A);

struct DensifyStats {
    int cloned = 0;
    int split = 0;
};

// Clones small / splits large gaussians whose mean accumulated screen gradient
// exceeds cfg.grad_threshold, then resets the statistics. Split children are
// sampled from the parent's own distribution.
DensifyStats densify(GaussianScene& scene, const DensifyConfig& cfg, std::mt19937_64& rng);

// Removes gaussians with opacity < min_opacity or max decoded scale > max_scale.
// Returns the number removed.
int prune(GaussianScene& scene, double min_opacity, double max_scale);

// Caps opacities at `cap` (logit space), leaving smaller values untouched.
void reset_opacity(GaussianScene& scene, double cap);

// Indices of gaussians whose center projects inside the image expanded by
// margin_px, with positive camera-space depth.
std::vector<int32_t> visible_indices(const GaussianScene& scene, const PoseSE3& T,
                                     const CameraIntrinsics& K, double margin_px);

GaussianScene select(const GaussianScene& scene, const std::vector<int32_t>& indices);

} // namespace splatrec
