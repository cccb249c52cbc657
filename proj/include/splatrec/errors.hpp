// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace splatrec {

enum class Err {
    NonPositiveDepth,
    NonPositiveScale,
    ShapeMismatch,
    EmptyDepth,
    ReplayMismatch,
    NoValidMatches,
    NoValidPatches,
    NonFiniteLoss,
    NonFiniteGradient,
    DivergedPose,
    MissingResource,
    MalformedDepth,
    MalformedMatches,
    MalformedScene,
    MalformedTrajectory,
    MalformedConfig,
    InvalidPreset,
    DegenerateAlignment,
    TooShort,
    InvalidArgument,
    IoError,
};

const char* err_name(Err code);

class SplatError : public std::runtime_error {
  public:
    SplatError(Err code, const std::string& message)
        : std::runtime_error(std::string(err_name(code)) + ": " + message), code_(code) {}

    Err code() const { return code_; }

  private:
    Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& message) {
    throw SplatError(code, message);
}

} // namespace splatrec
