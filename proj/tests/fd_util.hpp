// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>

namespace splatrec::testutil {

// Central finite difference of a scalar function along one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x0,
                           double h = 1e-4) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

// True when analytic and finite-difference values agree to rel_tol, with an
// absolute floor soaking up FD truncation noise near zero gradients.
inline bool grad_close(double analytic, double fd, double rel_tol = 1e-3,
                       double abs_floor = 1e-7) {
    double scale = std::max(std::abs(analytic), std::abs(fd));
    return std::abs(analytic - fd) <= std::max(rel_tol * scale, abs_floor);
}

} // namespace splatrec::testutil
