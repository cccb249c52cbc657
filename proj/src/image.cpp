// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/image.hpp"

#include <cmath>

namespace splatrec {

double DepthMap::median_valid() const {
    std::vector<double> valid;
    valid.reserve(data_.size());
    for (double d : data_)
        if (d > 0.0) valid.push_back(d);
    if (valid.empty())
        raise(Err::EmptyDepth, "no valid depth values");
    size_t mid = valid.size() / 2;
    std::nth_element(valid.begin(), valid.begin() + mid, valid.end());
    double hi = valid[mid];
    if (valid.size() % 2 == 1) return hi;
    std::nth_element(valid.begin(), valid.begin() + mid - 1, valid.begin() + mid);
    return 0.5 * (valid[mid - 1] + hi);
}

double srgb_to_linear(double v) {
    v = clamp01(v);
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    v = clamp01(v);
    return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

uint8_t quantize8(double v) {
    double scaled = clamp01(v) * 255.0;
    return static_cast<uint8_t>(std::lround(scaled));
}

} // namespace splatrec
