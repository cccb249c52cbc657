// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "splatrec/scene.hpp"

namespace splatrec {

// Binary little-endian PLY with one vertex per gaussian and double-typed
// properties x,y,z, red,green,blue, opacity (logit), scale_0..2 (log),
// rot_0..3 (quaternion, w first). Doubles keep the round trip bitwise exact.
void write_ply(const std::string& path, const GaussianScene& scene);
GaussianScene read_ply(const std::string& path);

} // namespace splatrec
