// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "splatrec/errors.hpp"

namespace splatrec {

// Dense H x W x C raster, row-major, channel-interleaved, double precision.
// Values are linear in [0,1] for color images unless stated otherwise.
class Image {
  public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels) {
        if (height <= 0 || width <= 0 || channels <= 0)
            raise(Err::InvalidArgument, "image dimensions must be positive");
        data_.assign(static_cast<size_t>(height) * width * channels, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    size_t size() const { return data_.size(); }

    double& at(int y, int x, int c) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int y, int x, int c) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool same_shape(const Image& o) const {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

  private:
    int height_ = 0, width_ = 0, channels_ = 0;
    std::vector<double> data_;
};

// Single-channel depth raster; <= 0 marks invalid pixels.
class DepthMap {
  public:
    DepthMap() = default;
    DepthMap(int height, int width, double fill = 0.0) : height_(height), width_(width) {
        if (height <= 0 || width <= 0)
            raise(Err::InvalidArgument, "depth dimensions must be positive");
        data_.assign(static_cast<size_t>(height) * width, fill);
    }

    int height() const { return height_; }
    int width() const { return width_; }
    bool empty() const { return data_.empty(); }
    size_t size() const { return data_.size(); }

    double& at(int y, int x) { return data_[static_cast<size_t>(y) * width_ + x]; }
    double at(int y, int x) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    // Median over valid (> 0) entries. Throws EmptyDepth if none.
    double median_valid() const;

  private:
    int height_ = 0, width_ = 0;
    std::vector<double> data_;
};

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// sRGB transfer functions, operating on [0,1] values per channel.
double srgb_to_linear(double v);
double linear_to_srgb(double v);

// 8-bit quantization with round-half-away-from-zero after clamping.
uint8_t quantize8(double v);

} // namespace splatrec
