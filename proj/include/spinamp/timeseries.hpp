#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spinamp/errors.hpp"

namespace spinamp {

/// Uniformly sampled detector-axis magnetic field.
struct TimeSeries {
    std::vector<double> samples;       // tesla
    double rate = 0.0;                 // samples per second
    double t0 = 0.0;                   // start time, s
    std::optional<std::uint64_t> seed; // noise seed, when noise was added

    double dt() const { return 1.0 / rate; }
    double time_at(std::size_t i) const { return t0 + static_cast<double>(i) / rate; }
    double duration() const { return static_cast<double>(samples.size()) / rate; }

    void validate() const {
        if (!std::isfinite(rate) || rate <= 0.0)
            throw config_error("TimeSeries: rate must be positive");
        if (samples.size() < 2)
            throw config_error("TimeSeries: need at least 2 samples");
    }
};

/// Formats a double with 17 significant digits (bit-exact round trip).
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Writes `header` + rows of (t, value) with LF line endings.
inline void write_timeseries_csv(const TimeSeries& ts, const std::string& path,
                                 const std::string& header = "t_s,value_T") {
    ts.validate();
    std::ofstream out(path, std::ios::binary);  // binary: keep LF on all platforms
    if (!out) throw io_error("cannot open for writing: " + path);
    out << header << "\n";
    for (std::size_t i = 0; i < ts.samples.size(); ++i)
        out << format_g17(ts.time_at(i)) << "," << format_g17(ts.samples[i]) << "\n";
    if (!out) throw io_error("write failed: " + path);
}

inline TimeSeries read_timeseries_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty file: " + path);
    TimeSeries ts;
    std::vector<double> times;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw io_error(path + ": malformed row '" + line + "'");
        times.push_back(std::stod(line.substr(0, comma)));
        ts.samples.push_back(std::stod(line.substr(comma + 1)));
    }
    if (times.size() < 2) throw io_error(path + ": need at least 2 rows");
    ts.t0 = times.front();
    ts.rate = static_cast<double>(times.size() - 1) / (times.back() - times.front());
    return ts;
}

}  // namespace spinamp
