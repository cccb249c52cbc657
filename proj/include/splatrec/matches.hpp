// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace splatrec {

// One correspondence between the previous and current frame, in continuous
// pixel coordinates (pixel center = index + 0.5), confidence in [0,1].
struct Match {
    double u_prev = 0.0, v_prev = 0.0;
    double u_cur = 0.0, v_cur = 0.0;
    double confidence = 1.0;
};

using MatchSet = std::vector<Match>;

// CSV with exact header `u_prev,v_prev,u_cur,v_cur,confidence`.
MatchSet read_matches_csv(const std::string& path);
void write_matches_csv(const std::string& path, const MatchSet& matches);

} // namespace splatrec
