// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "splatrec/image.hpp"

namespace splatrec {

// Grayscale PFM ("Pf"), 32-bit floats, negative scale marking little-endian,
// rows stored bottom-to-top per the format. Non-positive values mean invalid
// depth. Values pass through a float32 round trip on write.
DepthMap read_pfm(const std::string& path);
void write_pfm(const std::string& path, const DepthMap& depth);

} // namespace splatrec
