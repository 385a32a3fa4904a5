#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "spinamp/core.hpp"
#include "spinamp/errors.hpp"
#include "spinamp/noise.hpp"
#include "spinamp/timeseries.hpp"

// Detector-signal layer: time-series synthesis, single-bin discrete Fourier
// extraction, the with/without-spins amplitude ratio R, and the interference
// model R = |1 + G e^{i phi}| that explains its dispersive frequency
// dependence.

namespace spinamp {

/// Samples a drive field as a cosine series on a uniform grid.
inline TimeSeries sample_drive(const DriveField& drive, double rate, std::size_t n,
                               double t0 = 0.0) {
    drive.validate();
    if (rate <= 2.0 * drive.frequency)
        throw config_error("sample_drive: rate must exceed 2x drive frequency");
    TimeSeries ts;
    ts.rate = rate;
    ts.t0 = t0;
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        ts.samples[i] = drive.amplitude *
                        std::cos(kTwoPi * drive.frequency * ts.time_at(i) + drive.phase);
    return ts;
}

/// Pointwise sum drive + dipolar + white Gaussian noise of the given RMS.
/// Deterministic per seed; sample i of the noise depends only on (seed, i).
inline TimeSeries synthesize(const TimeSeries& drive_ts, const TimeSeries& dipolar,
                             double noise_rms, std::uint64_t seed) {
    drive_ts.validate();
    dipolar.validate();
    if (drive_ts.rate != dipolar.rate || drive_ts.samples.size() != dipolar.samples.size())
        throw config_error("synthesize: drive and dipolar series must share rate and length");
    if (!std::isfinite(noise_rms) || noise_rms < 0.0)
        throw config_error("synthesize: noise_rms must be >= 0");
    TimeSeries out = dipolar;
    out.seed = seed;
    const GaussianStream noise(seed);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] += drive_ts.samples[i];
        if (noise_rms > 0.0) out.samples[i] += noise_rms * noise.at(i);
    }
    return out;
}

inline TimeSeries synthesize(const DriveField& drive, const TimeSeries& dipolar,
                             double noise_rms, std::uint64_t seed) {
    return synthesize(sample_drive(drive, dipolar.rate, dipolar.samples.size(), dipolar.t0),
                      dipolar, noise_rms, seed);
}

struct Phasor {
    double amplitude = 0.0;        // tesla
    double phase = 0.0;            // rad, relative to cos(2 pi f (t - t0))
    std::complex<double> c{0.0, 0.0};
};

/// Single-bin discrete Fourier projection at exactly `freq` (not gridded):
/// amplitude 2|sum s_n e^{-i 2 pi f (t_n - t0)}|/N, rectangular window.
/// Requires a record of at least 10 periods.
inline Phasor extract(const TimeSeries& ts, double freq) {
    ts.validate();
    if (!std::isfinite(freq) || freq <= 0.0)
        throw config_error("extract: freq must be positive");
    const double n_periods = ts.duration() * freq;
    if (n_periods < 10.0)
        throw config_error("extract: record must span >= 10 periods of freq");
    std::complex<double> acc{0.0, 0.0};
    const std::size_t n = ts.samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double theta = kTwoPi * freq * (static_cast<double>(i) / ts.rate);
        acc += ts.samples[i] * std::complex<double>(std::cos(theta), -std::sin(theta));
    }
    acc *= 2.0 / static_cast<double>(n);
    return Phasor{std::abs(acc), std::arg(acc), acc};
}

/// R = extracted amplitude of `with_spins` over that of `without_spins`
/// at the drive frequency.
inline double ratio(const TimeSeries& with_spins, const TimeSeries& without_spins,
                    double freq) {
    if (with_spins.rate != without_spins.rate ||
        with_spins.samples.size() != without_spins.samples.size())
        throw config_error("ratio: records must share rate and length");
    const Phasor a = extract(with_spins, freq);
    const Phasor b = extract(without_spins, freq);
    if (b.amplitude == 0.0) throw numeric_error("ratio: zero reference amplitude");
    return a.amplitude / b.amplitude;
}

/// Wraps a phase difference into [0, pi] (reflection preserves cos).
inline double wrap_phase_0_pi(double phi) {
    phi = std::fmod(phi, kTwoPi);
    if (phi < 0.0) phi += kTwoPi;
    if (phi > 3.14159265358979323846) phi = kTwoPi - phi;
    return phi;
}

/// Drive amplitude, dipolar amplitude and their phase difference.
struct PhasorPair {
    double amp_a = 0.0;  // drive amplitude at nu_a, T
    double amp_s = 0.0;  // dipolar amplitude, T
    double phi = 0.0;    // phase difference in [0, pi]
};

/// Decomposes a with/without record pair into (B_a, B_s, phi): the dipolar
/// phasor is the difference of the two extracted phasors.
inline PhasorPair phasor_pair(const TimeSeries& with_spins,
                              const TimeSeries& without_spins, double freq) {
    if (with_spins.rate != without_spins.rate ||
        with_spins.samples.size() != without_spins.samples.size())
        throw config_error("phasor_pair: records must share rate and length");
    const Phasor w = extract(with_spins, freq);
    const Phasor a = extract(without_spins, freq);
    if (a.amplitude == 0.0) throw numeric_error("phasor_pair: zero drive amplitude");
    const std::complex<double> s = w.c - a.c;
    return PhasorPair{a.amplitude, std::abs(s),
                      wrap_phase_0_pi(std::arg(s) - std::arg(a.c))};
}

/// Exact vector-sum ratio R = sqrt(1 + 2 g cos(phi) + g^2).
inline double interference_ratio(double g, double phi) {
    if (!std::isfinite(g) || g < 0.0)
        throw config_error("interference_ratio: g must be >= 0");
    return std::sqrt(1.0 + 2.0 * g * std::cos(phi) + g * g);
}

/// First-order form R ~= 1 + g cos(phi), valid for g << 1.
inline double interference_ratio_first_order(double g, double phi) {
    if (!std::isfinite(g) || g < 0.0)
        throw config_error("interference_ratio: g must be >= 0");
    return 1.0 + g * std::cos(phi);
}

/// Steady-state linear-response phase of the dipolar field relative to the
/// drive: phi(delta) = pi/2 - arctan(delta T2). Runs from pi (delta -> -inf)
/// through pi/2 on resonance to 0 (delta -> +inf).
inline double phase_model(const Detuning& detuning, double t2) {
    if (!std::isfinite(t2) || t2 <= 0.0)
        throw config_error("phase_model: t2 must be positive");
    return 0.5 * 3.14159265358979323846 - std::atan(detuning.delta * t2);
}

enum class GainModel { steady, transient };
enum class RatioForm { first_order, exact };

/// Protocol for a dispersive frequency scan.
struct DispersiveProtocol {
    double sense_time = 0.0;                   // t for the transient gain model, s
    GainModel gain = GainModel::steady;        // |G|(delta) model
    RatioForm form = RatioForm::first_order;   // how R is assembled from (G, phi)
    std::function<double(double)> gain_fn;     // optional override, e.g. simulation-backed
};

struct DispersivePoint {
    double delta = 0.0;  // rad/s
    double r = 1.0;
    double phi = 0.0;    // rad
};

/// Amplitude of the steady-state linear response vs detuning:
/// |G|(delta) = G_ss / sqrt(1 + (delta T2)^2), the magnitude partner of
/// phase_model. Together they give R - 1 = G_ss * delta T2 / (1 + (delta T2)^2)
/// in the first-order form.
inline double gain_steady(const SampleSpec& sample, double delta,
                          const PhysicalConstants& c = default_constants()) {
    const double g0 = amplification_steady(sample, c);
    const double dt2 = delta * sample.t2;
    return g0 / std::sqrt(1.0 + dt2 * dt2);
}

/// R(delta), phi(delta) over a detuning list. Points are emitted in input
/// order; each point is a pure function of its inputs.
inline std::vector<DispersivePoint> dispersive_scan(const SampleSpec& sample,
                                                    const DriveField& drive,
                                                    const std::vector<double>& deltas,
                                                    const DispersiveProtocol& protocol,
                                                    const PhysicalConstants& c = default_constants()) {
    sample.validate();
    drive.validate();
    std::vector<DispersivePoint> out;
    out.reserve(deltas.size());
    for (const double delta : deltas) {
        if (!std::isfinite(delta))
            throw config_error("dispersive_scan: detunings must be finite");
        double g = 0.0;
        if (protocol.gain_fn) {
            g = protocol.gain_fn(delta);
        } else if (protocol.gain == GainModel::steady) {
            g = gain_steady(sample, delta, c);
        } else {
            if (protocol.sense_time <= 0.0)
                throw config_error("dispersive_scan: transient gain needs sense_time > 0");
            g = std::abs(amplification_transient(sample, protocol.sense_time,
                                                 Detuning{delta, 0.0}, c));
        }
        const double phi = phase_model(Detuning{delta, 0.0}, sample.t2);
        const double r = protocol.form == RatioForm::exact
                             ? interference_ratio(g, phi)
                             : interference_ratio_first_order(g, phi);
        out.push_back(DispersivePoint{delta, r, phi});
    }
    return out;
}

}  // namespace spinamp
