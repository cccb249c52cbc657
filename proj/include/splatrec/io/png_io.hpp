// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "splatrec/image.hpp"

namespace splatrec {

// 8-bit RGB PNG. Files hold sRGB-encoded bytes; the in-memory Image is linear
// [0,1], so load decodes and save encodes the transfer function.
Image read_png_linear(const std::string& path);
void write_png_linear(const std::string& path, const Image& image);

} // namespace splatrec
