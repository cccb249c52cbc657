// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/errors.hpp"

namespace splatrec {

const char* err_name(Err code) {
    switch (code) {
    case Err::NonPositiveDepth: return "NonPositiveDepth";
    case Err::NonPositiveScale: return "NonPositiveScale";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::EmptyDepth: return "EmptyDepth";
    case Err::ReplayMismatch: return "ReplayMismatch";
    case Err::NoValidMatches: return "NoValidMatches";
    case Err::NoValidPatches: return "NoValidPatches";
    case Err::NonFiniteLoss: return "NonFiniteLoss";
    case Err::NonFiniteGradient: return "NonFiniteGradient";
    case Err::DivergedPose: return "DivergedPose";
    case Err::MissingResource: return "MissingResource";
    case Err::MalformedDepth: return "MalformedDepth";
    case Err::MalformedMatches: return "MalformedMatches";
    case Err::MalformedScene: return "MalformedScene";
    case Err::MalformedTrajectory: return "MalformedTrajectory";
    case Err::MalformedConfig: return "MalformedConfig";
    case Err::InvalidPreset: return "InvalidPreset";
    case Err::DegenerateAlignment: return "DegenerateAlignment";
    case Err::TooShort: return "TooShort";
    case Err::InvalidArgument: return "InvalidArgument";
    case Err::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace splatrec
