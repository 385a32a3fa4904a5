#pragma once

#include <cmath>
#include <string>

#include "spinamp/constants.hpp"
#include "spinamp/errors.hpp"
#include "spinamp/units.hpp"

// Closed-form amplification factors for a polarized nuclear-spin ensemble.
//
// A sample of polarized spins exposed to a weak oscillating field radiates a
// dipolar field; the ratio G of radiated to applied amplitude has a
// steady-state bound
//
//     G = xi * mu0 * T2 * gamma^2 * hbar * (n V P0)  =  2 xi mu0 T2 gamma V M0
//
// and, for an ensemble prepared at t = 0 and decohering afterwards, the
// transient, detuning-dependent form
//
//     G(t, d) = xi * mu0 * gamma^2 * hbar * (n V P0) * t e^{-t/T2} sinc(d t / 2)
//
// with sinc(x) = sin(x)/x (unnormalized; sinc(0) = 1) and d the angular
// detuning between drive and resonance. Formulas are evaluated through the
// si:: dimension layer, so dimensional closure is checked at compile time.

namespace spinamp {

/// A sensing ensemble.
struct SampleSpec {
    double gamma = 0.0;  // gyromagnetic ratio, rad s^-1 T^-1
    double n = 0.0;      // spin number density, m^-3
    double volume = 0.0; // sample volume, m^3
    double p0 = 0.0;     // polarization, dimensionless in [0, 1]
    double t1 = 0.0;     // longitudinal relaxation time, s (+inf allowed)
    double t2 = 0.0;     // transverse relaxation time, s (+inf allowed)
    double xi = 0.0;     // geometry/detection factor, m^-3

    /// Total number of polarized spins, n * V * P0.
    double nvp0() const { return n * volume * p0; }

    void validate() const {
        if (!std::isfinite(gamma) || gamma == 0.0)
            throw config_error("SampleSpec: gamma must be finite and nonzero");
        if (!std::isfinite(n) || n <= 0.0)
            throw config_error("SampleSpec: n must be positive");
        if (!std::isfinite(volume) || volume <= 0.0)
            throw config_error("SampleSpec: volume must be positive");
        if (std::isnan(p0) || p0 < 0.0 || p0 > 1.0)
            throw config_error("SampleSpec: p0 must lie in [0, 1]");
        if (std::isnan(t1) || t1 <= 0.0)
            throw config_error("SampleSpec: t1 must be positive");
        if (std::isnan(t2) || t2 <= 0.0)
            throw config_error("SampleSpec: t2 must be positive");
        if (!std::isfinite(xi) || xi <= 0.0)
            throw config_error("SampleSpec: xi must be positive");
    }
};

/// Applied oscillating field.
struct DriveField {
    double amplitude = 0.0;  // B_a, tesla
    double frequency = 0.0;  // nu_a, Hz
    double phase = 0.0;      // initial phase, rad
    std::string axis = "y";  // detector/drive axis label

    void validate() const {
        if (!std::isfinite(amplitude) || amplitude < 0.0)
            throw config_error("DriveField: amplitude must be >= 0");
        if (!std::isfinite(frequency) || frequency < 0.0)
            throw config_error("DriveField: frequency must be >= 0");
        if (!std::isfinite(phase))
            throw config_error("DriveField: phase must be finite");
    }
};

/// Angular detuning between a drive and a resonance, delta = 2 pi (nu_a - nu0).
struct Detuning {
    double delta = 0.0;  // rad/s
    double nu0 = 0.0;    // resonance frequency, Hz

    static Detuning from_frequencies(double nu_a_hz, double nu0_hz) {
        return Detuning{kTwoPi * (nu_a_hz - nu0_hz), nu0_hz};
    }
    /// Drive frequency implied by this detuning, nu_a = nu0 + delta / 2 pi.
    double nu_a() const { return nu0 + delta / kTwoPi; }
};

/// Unnormalized sinc: sin(x)/x with sinc(0) = 1.
inline double sinc(double x) {
    if (std::abs(x) < 1e-6) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

/// Initial magnetization M0 = (1/2) hbar gamma n P0, in A/m.
inline double magnetization(const SampleSpec& sample,
                            const PhysicalConstants& c = default_constants()) {
    sample.validate();
    const si::AmperePerMeter m0 = 0.5 * c.hbar_q() *
                                  si::GyromagneticRatio{sample.gamma} *
                                  si::PerCubicMeter{sample.n} * sample.p0;
    return m0.value();
}

/// Steady-state amplification factor, Eq. form
/// G = xi mu0 T2 gamma^2 hbar (n V P0). Dimensionless.
inline double amplification_steady(const SampleSpec& sample,
                                   const PhysicalConstants& c = default_constants()) {
    sample.validate();
    if (!std::isfinite(sample.t2))
        throw config_error("amplification_steady: t2 must be finite");
    const si::GyromagneticRatio gamma{sample.gamma};
    const si::Scalar g = si::PerCubicMeter{sample.xi} * c.mu0_q() *
                         si::Seconds{sample.t2} * gamma * gamma * c.hbar_q() *
                         sample.nvp0();
    return g.value();
}

/// Same factor through the magnetization route, G = 2 xi mu0 T2 gamma V M0.
/// Algebraically identical to amplification_steady; kept as the second leg of
/// the dual-route consistency check.
inline double amplification_steady_via_m0(const SampleSpec& sample,
                                          const PhysicalConstants& c = default_constants()) {
    sample.validate();
    if (!std::isfinite(sample.t2))
        throw config_error("amplification_steady: t2 must be finite");
    const si::AmperePerMeter m0{magnetization(sample, c)};
    const si::Scalar g = 2.0 * si::PerCubicMeter{sample.xi} * c.mu0_q() *
                         si::Seconds{sample.t2} *
                         si::GyromagneticRatio{sample.gamma} *
                         si::CubicMeters{sample.volume} * m0;
    return g.value();
}

/// Transient amplification factor
/// G(t, delta) = xi mu0 gamma^2 hbar (n V P0) * t e^{-t/T2} sinc(delta t / 2).
inline double amplification_transient(const SampleSpec& sample, double t,
                                      const Detuning& detuning,
                                      const PhysicalConstants& c = default_constants()) {
    sample.validate();
    if (!std::isfinite(t) || t < 0.0)
        throw config_error("amplification_transient: t must be >= 0");
    if (!std::isfinite(detuning.delta))
        throw config_error("amplification_transient: detuning must be finite");
    const si::GyromagneticRatio gamma{sample.gamma};
    const si::Scalar prefactor = si::PerCubicMeter{sample.xi} * c.mu0_q() *
                                 gamma * gamma * c.hbar_q() *
                                 si::Seconds{1.0} * sample.nvp0();
    const double envelope = t * std::exp(-t / sample.t2);
    return prefactor.value() * envelope * sinc(0.5 * detuning.delta * t);
}

/// Drive amplitude scale at which the ensemble saturates: the field that
/// accumulates a unit tip angle over one T2, B_sat = 2 / (gamma T2) for a
/// linearly polarized drive. Calibration and scans express "deep linear
/// regime" relative to this.
inline double saturation_scale(const SampleSpec& sample) {
    sample.validate();
    if (!std::isfinite(sample.t2))
        throw config_error("saturation_scale: t2 must be finite");
    return 2.0 / (std::abs(sample.gamma) * sample.t2);
}

}  // namespace spinamp
