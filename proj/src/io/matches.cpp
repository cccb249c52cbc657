// Copyright Contributors to the splatrec Project
// SPDX-License-Identifier: Apache-2.0

#include "splatrec/matches.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "splatrec/io/atomic_file.hpp"

namespace splatrec {

namespace {

constexpr const char* kHeader = "u_prev,v_prev,u_cur,v_cur,confidence";

[[noreturn]] void bad_line(const std::string& path, int line, const std::string& what) {
    raise(Err::MalformedMatches, path + ":" + std::to_string(line) + ": " + what);
}

} // namespace

MatchSet read_matches_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        raise(Err::MissingResource, "cannot open matches: " + path);

    std::string line;
    if (!std::getline(in, line))
        raise(Err::MalformedMatches, path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        raise(Err::MalformedMatches, path + ":1: expected header '" + kHeader + "'");

    MatchSet out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double fields[5];
        const char* p = line.data();
        const char* end = p + line.size();
        for (int f = 0; f < 5; ++f) {
            auto [next, ec] = std::from_chars(p, end, fields[f]);
            if (ec != std::errc())
                bad_line(path, lineno, "unparsable number in field " + std::to_string(f + 1));
            p = next;
            if (f < 4) {
                if (p >= end || *p != ',')
                    bad_line(path, lineno, "expected 5 comma-separated fields");
                ++p;
            }
        }
        if (p != end)
            bad_line(path, lineno, "trailing characters");
        for (double v : fields)
            if (!std::isfinite(v))
                bad_line(path, lineno, "non-finite value");
        if (fields[4] < 0.0 || fields[4] > 1.0)
            bad_line(path, lineno, "confidence outside [0,1]");
        out.push_back(Match{fields[0], fields[1], fields[2], fields[3], fields[4]});
    }
    return out;
}

void write_matches_csv(const std::string& path, const MatchSet& matches) {
    AtomicFileWriter writer(path);
    auto& out = writer.stream();
    out << kHeader << "\n";
    char buf[160];
    for (const Match& m : matches) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", m.u_prev, m.v_prev,
                      m.u_cur, m.v_cur, m.confidence);
        out << buf;
    }
    writer.commit();
}

} // namespace splatrec
