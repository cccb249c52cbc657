// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "splatrec/image.hpp"
#include "splatrec/matches.hpp"
#include "splatrec/synthetic.hpp"

namespace splatrec {

// Expands `{index:06}`-style placeholders: `{name}` inserts the value,
// `{name:0N}` zero-pads it to N digits. Unknown names raise InvalidArgument.
std::string expand_template(const std::string& tmpl, const std::string& name, int value);
std::string expand_template(const std::string& tmpl, const std::string& name_a, int value_a,
                            const std::string& name_b, int value_b);

// Per-frame depth source. Implementations are read-only after construction
// and therefore idempotent and safe to share across threads.
class DepthProvider {
  public:
    virtual ~DepthProvider() = default;
    virtual DepthMap get_depth(int frame_index) const = 0;
};

// Inter-frame correspondence source. has_matches lets callers probe a pair
// without treating its absence as an error (pairs may simply not exist, e.g.
// across a held-out frame).
class MatchProvider {
  public:
    virtual ~MatchProvider() = default;
    virtual bool has_matches(int frame_prev, int frame_cur) const = 0;
    virtual MatchSet get_matches(int frame_prev, int frame_cur) const = 0;
};

inline constexpr const char* kDepthTemplate = "depth/{index:06}.pfm";
inline constexpr const char* kMatchesTemplate = "matches/{prev:06}_{cur:06}.csv";
inline constexpr const char* kFrameTemplate = "frames/{index:06}.png";

// PFM files under a root directory. Expected dimensions are validated on
// every read; a mismatch is MalformedDepth, a missing file MissingResource.
class FileDepthProvider : public DepthProvider {
  public:
    FileDepthProvider(std::string root, int expected_width, int expected_height,
                      std::string name_template = kDepthTemplate);
    DepthMap get_depth(int frame_index) const override;

  private:
    std::string root_, template_;
    int width_, height_;
};

// CSV match files under a root directory. Confidences outside [0,1] and
// coordinates that are not finite are MalformedMatches.
class FileMatchProvider : public MatchProvider {
  public:
    FileMatchProvider(std::string root, std::string name_template = kMatchesTemplate);
    bool has_matches(int frame_prev, int frame_cur) const override;
    MatchSet get_matches(int frame_prev, int frame_cur) const override;

  private:
    std::string path_for(int frame_prev, int frame_cur) const;
    std::string root_, template_;
};

// Oracle providers serving an in-memory bundle; both views share it.
class SyntheticDepthProvider : public DepthProvider {
  public:
    explicit SyntheticDepthProvider(std::shared_ptr<const SynthBundle> bundle);
    DepthMap get_depth(int frame_index) const override;

  private:
    std::shared_ptr<const SynthBundle> bundle_;
};

class SyntheticMatchProvider : public MatchProvider {
  public:
    explicit SyntheticMatchProvider(std::shared_ptr<const SynthBundle> bundle);
    bool has_matches(int frame_prev, int frame_cur) const override;
    MatchSet get_matches(int frame_prev, int frame_cur) const override;

  private:
    const MatchEntry* find(int frame_prev, int frame_cur) const;
    std::shared_ptr<const SynthBundle> bundle_;
};

} // namespace splatrec
