// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "splatrec/errors.hpp"

namespace splatrec {

// Writes to `<path>.tmp` and renames into place on commit, so readers never
// observe a half-written file. Destruction without commit removes the temp.
class AtomicFileWriter {
  public:
    explicit AtomicFileWriter(const std::filesystem::path& path, bool binary = false)
        : path_(path), tmp_(path.string() + ".tmp") {
        auto dir = path.parent_path();
        if (!dir.empty()) std::filesystem::create_directories(dir);
        stream_.open(tmp_, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
        if (!stream_)
            raise(Err::IoError, "cannot open for writing: " + tmp_.string());
    }

    ~AtomicFileWriter() {
        if (!committed_) {
            stream_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    std::ofstream& stream() { return stream_; }

    void commit() {
        stream_.flush();
        if (!stream_)
            raise(Err::IoError, "write failed: " + tmp_.string());
        stream_.close();
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
        if (ec)
            raise(Err::IoError, "rename failed: " + path_.string() + ": " + ec.message());
        committed_ = true;
    }

  private:
    std::filesystem::path path_, tmp_;
    std::ofstream stream_;
    bool committed_ = false;
};

} // namespace splatrec
