#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "hess/core/errors.hpp"
#include "hess/core/time_series.hpp"

namespace hess {

inline constexpr std::string_view kPowerHeader = "epoch_s,power_mw";

namespace detail {

inline double parse_number(std::string_view s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(line, "not a number: '" + std::string(s) + "'");
    if (!std::isfinite(v)) throw ParseError(line, "non-finite value");
    return v;
}

inline std::int64_t parse_epoch(std::string_view s, std::size_t line) {
    double v = parse_number(s, line);
    if (v != std::floor(v)) throw ParseError(line, "timestamps must be whole seconds");
    return static_cast<std::int64_t>(v);
}

}  // namespace detail

inline TimeSeries parse_csv(std::istream& in, std::string_view header = kPowerHeader) {
    std::size_t lineno = 0;
    TimeSeries ts;
    std::int64_t prev = 0;
    bool have_dt = false;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') throw ParseError(lineno, "CRLF line endings are not accepted");
        if (lineno == 1) {
            std::string_view h(line);
            if (h.substr(0, 3) == "\xEF\xBB\xBF") h.remove_prefix(3);
            if (h != header) throw ParseError(lineno, "expected header '" + std::string(header) + "'");
            continue;
        }
        if (line.empty()) {
            // tolerate a trailing newline only
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw ParseError(lineno, "empty row");
        }
        auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError(lineno, "expected two columns");
        std::string_view sv(line);
        std::int64_t t = detail::parse_epoch(sv.substr(0, comma), lineno);
        double v = detail::parse_number(sv.substr(comma + 1), lineno);
        if (ts.values.empty()) {
            ts.start_epoch = t;
        } else {
            if (t <= prev) throw ParseError(lineno, "timestamps must be strictly increasing");
            if (!have_dt) {
                ts.dt = t - prev;
                have_dt = true;
            } else if (t - prev != ts.dt) {
                throw GapError(prev + ts.dt);
            }
        }
        prev = t;
        ts.values.push_back(v);
    }
    if (lineno == 0) throw ParseError(1, "missing header");
    if (ts.values.empty()) throw ParseError(lineno, "series has no samples");
    return ts;
}

inline TimeSeries ingest_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError(0, "cannot open " + path);
    return parse_csv(f);
}

inline void write_csv(std::ostream& out, const TimeSeries& ts, std::string_view header = kPowerHeader) {
    out << header << '\n';
    char buf[64];
    for (std::size_t i = 0; i < ts.size(); ++i) {
        auto r = std::to_chars(buf, buf + sizeof buf, ts.values[i]);
        out << ts.epoch_at(i) << ',' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf)) << '\n';
    }
}

inline void write_csv(const std::string& path, const TimeSeries& ts, std::string_view header = kPowerHeader) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    write_csv(f, ts, header);
}

}  // namespace hess
