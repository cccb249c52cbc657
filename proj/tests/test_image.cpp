// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "splatrec/image.hpp"

using namespace splatrec;

TEST_CASE("image indexing is row-major channel-interleaved") {
    Image img(2, 3, 3);
    img.at(1, 2, 1) = 0.5;
    CHECK(img.raw()[(1 * 3 + 2) * 3 + 1] == 0.5);
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.size() == 18);
    CHECK_THROWS_AS(Image(0, 3, 3), SplatError);
}

TEST_CASE("depth median ignores invalid pixels") {
    DepthMap d(2, 3);
    d.at(0, 0) = 1.0;
    d.at(0, 1) = 3.0;
    d.at(0, 2) = 2.0;
    // remaining three pixels stay 0 (invalid)
    CHECK(d.median_valid() == 2.0);
    d.at(1, 0) = 10.0;
    CHECK(d.median_valid() == 2.5);

    DepthMap empty(2, 2);
    CHECK_THROWS_AS(empty.median_valid(), SplatError);
}

TEST_CASE("srgb transfer round-trips and hits anchor points") {
    CHECK(srgb_to_linear(0.0) == 0.0);
    CHECK(srgb_to_linear(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(linear_to_srgb(0.0) == 0.0);
    CHECK(linear_to_srgb(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(srgb_to_linear(0.5) == doctest::Approx(0.21404114048).epsilon(1e-9));
    for (double v = 0.0; v <= 1.0; v += 0.01)
        CHECK(linear_to_srgb(srgb_to_linear(v)) == doctest::Approx(v).epsilon(1e-10));
}

TEST_CASE("quantize8 clamps and rounds") {
    CHECK(quantize8(-0.2) == 0);
    CHECK(quantize8(0.0) == 0);
    CHECK(quantize8(1.0) == 255);
    CHECK(quantize8(1.7) == 255);
    CHECK(quantize8(0.5) == 128);
    CHECK(quantize8(10.0 / 255.0) == 10);
}
