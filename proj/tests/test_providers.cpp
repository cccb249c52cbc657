// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "splatrec/io/pfm.hpp"
#include "splatrec/providers.hpp"
#include "test_util.hpp"

using namespace splatrec;

namespace {

template <typename Fn>
Err thrown_code(Fn&& fn) {
    try {
        fn();
    } catch (const SplatError& e) {
        return e.code();
    }
    REQUIRE(false);
    return Err::IoError;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const char* name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("template expansion") {
    CHECK(expand_template("depth/{index:06}.pfm", "index", 7) == "depth/000007.pfm");
    CHECK(expand_template("{index}.png", "index", 42) == "42.png");
    CHECK(expand_template("m/{prev:06}_{cur:06}.csv", "prev", 1, "cur", 23) ==
          "m/000001_000023.csv");
    CHECK(expand_template("plain.txt", "index", 0) == "plain.txt");

    CHECK(thrown_code([] { expand_template("{frame:06}.pfm", "index", 0); }) ==
          Err::InvalidArgument);
    CHECK(thrown_code([] { expand_template("{index:6d}.pfm", "index", 0); }) ==
          Err::InvalidArgument);
    CHECK(thrown_code([] { expand_template("{index.pfm", "index", 0); }) ==
          Err::InvalidArgument);
}

TEST_CASE("file depth provider round-trips PFM floats bitwise") {
    TempDir dir("splatrec_prov_depth");
    std::filesystem::create_directories(dir.path / "depth");

    std::mt19937_64 rng(11);
    DepthMap depth(10, 14);
    for (double& v : depth.raw())
        v = 0.1 + 5.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53;
    depth.at(3, 4) = -1.0; // invalid marker must survive the round trip
    write_pfm((dir.path / "depth" / "000003.pfm").string(), depth);

    FileDepthProvider provider(dir.path.string(), 14, 10);
    const DepthMap loaded = provider.get_depth(3);
    REQUIRE(loaded.width() == 14);
    REQUIRE(loaded.height() == 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 14; ++x)
            CHECK(loaded.at(y, x) ==
                  static_cast<double>(static_cast<float>(depth.at(y, x))));

    const DepthMap again = provider.get_depth(3);
    CHECK(again.raw() == loaded.raw());

    CHECK(thrown_code([&] { provider.get_depth(4); }) == Err::MissingResource);

    FileDepthProvider wrong_size(dir.path.string(), 15, 10);
    CHECK(thrown_code([&] { wrong_size.get_depth(3); }) == Err::MalformedDepth);

    std::ofstream bad(dir.path / "depth" / "000005.pfm");
    bad << "not a pfm at all";
    bad.close();
    CHECK(thrown_code([&] { provider.get_depth(5); }) == Err::MalformedDepth);

    DepthMap with_nan(10, 14, 1.0);
    with_nan.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    write_pfm((dir.path / "depth" / "000006.pfm").string(), with_nan);
    CHECK(thrown_code([&] { provider.get_depth(6); }) == Err::MalformedDepth);
}

TEST_CASE("file match provider reads, probes and validates") {
    TempDir dir("splatrec_prov_match");
    std::filesystem::create_directories(dir.path / "matches");

    MatchSet set = {{1.5, 2.5, 3.25, 4.75, 1.0}, {10.0, 11.0, 9.5, 10.5, 0.25}};
    write_matches_csv((dir.path / "matches" / "000000_000001.csv").string(), set);

    FileMatchProvider provider(dir.path.string());
    CHECK(provider.has_matches(0, 1));
    CHECK_FALSE(provider.has_matches(1, 2));
    CHECK_FALSE(provider.has_matches(0, 2));

    const MatchSet loaded = provider.get_matches(0, 1);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].u_prev == 1.5);
    CHECK(loaded[0].v_cur == 4.75);
    CHECK(loaded[1].confidence == 0.25);

    CHECK(thrown_code([&] { provider.get_matches(1, 2); }) == Err::MissingResource);

    std::ofstream bad(dir.path / "matches" / "000002_000003.csv");
    bad << "u_prev,v_prev,u_cur,v_cur,confidence\n1,2,3,4,1.5\n";
    bad.close();
    CHECK(thrown_code([&] { provider.get_matches(2, 3); }) == Err::MalformedMatches);
}

TEST_CASE("synthetic providers serve the bundle exactly") {
    SynthPreset preset = preset_by_name("plane");
    preset.frames = 3;
    preset.width = 48;
    preset.height = 32;
    preset.match_count = 60;
    auto bundle = std::make_shared<const SynthBundle>(generate(preset));

    SyntheticDepthProvider depths(bundle);
    SyntheticMatchProvider matches(bundle);

    for (int f = 0; f < 3; ++f)
        CHECK(depths.get_depth(f).raw() == bundle->depths[f].raw());
    CHECK(thrown_code([&] { depths.get_depth(3); }) == Err::MissingResource);
    CHECK(thrown_code([&] { depths.get_depth(-1); }) == Err::MissingResource);

    CHECK(matches.has_matches(0, 1));
    CHECK(matches.has_matches(1, 2));
    CHECK_FALSE(matches.has_matches(0, 2));
    CHECK_FALSE(matches.has_matches(1, 0));
    CHECK(thrown_code([&] { matches.get_matches(0, 2); }) == Err::MissingResource);

    const MatchSet set = matches.get_matches(0, 1);
    REQUIRE(set.size() == bundle->matches[0].set.size());
    for (size_t i = 0; i < set.size(); ++i) {
        CHECK(set[i].u_prev == bundle->matches[0].set[i].u_prev);
        CHECK(set[i].u_cur == bundle->matches[0].set[i].u_cur);
        CHECK(set[i].confidence == 1.0);
    }

    // Dolly is a pure translation: provider displacements must equal the
    // ground-truth flow of the lifted pixel.
    const PoseSE3 w2c_prev = bundle->poses_c2w[0].pose.inverse();
    const PoseSE3 w2c_cur = bundle->poses_c2w[1].pose.inverse();
    for (const Match& m : set) {
        const int ix = static_cast<int>(m.u_prev), iy = static_cast<int>(m.v_prev);
        const Vec3 point = backproject(w2c_prev, bundle->K, m.u_prev, m.v_prev,
                                       bundle->depths[0].at(iy, ix));
        const Projected proj = project(w2c_cur, bundle->K, point);
        CHECK(std::abs(proj.u - m.u_cur) < 1e-6);
        CHECK(std::abs(proj.v - m.v_cur) < 1e-6);
    }
}

TEST_CASE("injected outliers sit below the downstream confidence filter") {
    SynthPreset preset = preset_by_name("plane");
    preset.frames = 2;
    preset.width = 48;
    preset.height = 32;
    preset.match_count = 100;
    preset.outlier_fraction = 0.1;
    auto bundle = std::make_shared<const SynthBundle>(generate(preset));

    SyntheticMatchProvider matches(bundle);
    const MatchSet set = matches.get_matches(0, 1);
    int inliers = 0, outliers = 0;
    for (const Match& m : set) {
        if (m.confidence >= 0.2)
            ++inliers;
        else
            ++outliers;
    }
    CHECK(outliers == static_cast<int>(std::llround(0.1 * set.size())));
    CHECK(inliers + outliers == static_cast<int>(set.size()));
}
