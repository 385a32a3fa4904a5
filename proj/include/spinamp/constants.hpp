#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "spinamp/errors.hpp"
#include "spinamp/units.hpp"

namespace spinamp {

inline constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

/// CODATA values plus a nuclide -> gyromagnetic-ratio table (rad s^-1 T^-1).
struct PhysicalConstants {
    double mu0 = 1.25663706212e-6;    // vacuum permeability, T m / A
    double hbar = 1.054571817e-34;    // reduced Planck constant, J s
    std::map<std::string, double> gamma_table;

    double gamma(const std::string& nuclide) const {
        auto it = gamma_table.find(nuclide);
        if (it == gamma_table.end())
            throw config_error("unknown nuclide: " + nuclide);
        return it->second;
    }

    si::Permeability mu0_q() const { return si::Permeability{mu0}; }
    si::PlanckAction hbar_q() const { return si::PlanckAction{hbar}; }
};

inline PhysicalConstants default_constants() {
    PhysicalConstants c;
    c.gamma_table["1H"] = kTwoPi * 42.576e6;
    c.gamma_table["15N"] = -kTwoPi * 4.3156e6;
    return c;
}

/// Loads extra nuclides from a key-value text file and merges them over the
/// built-in table. Format, one entry per line:
///
///     # comment
///     <label>  <gamma/2pi in MHz/T, signed>
///
/// e.g. "15N  -4.3156". Values are converted to rad s^-1 T^-1.
inline PhysicalConstants load_nuclide_table(const std::string& path,
                                            PhysicalConstants base = default_constants()) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open nuclide table: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string label;
        if (!(ss >> label)) continue;  // blank line
        double mhz_per_t = 0.0;
        if (!(ss >> mhz_per_t) || !std::isfinite(mhz_per_t))
            throw io_error(path + ":" + std::to_string(lineno) +
                           ": expected '<label> <MHz/T>'");
        std::string extra;
        if (ss >> extra)
            throw io_error(path + ":" + std::to_string(lineno) +
                           ": trailing content '" + extra + "'");
        base.gamma_table[label] = si::rad_s_t_from_mhz_t(mhz_per_t);
    }
    return base;
}

}  // namespace spinamp
