#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "spinamp/core.hpp"
#include "spinamp/errors.hpp"
#include "spinamp/signal.hpp"
#include "spinamp/timeseries.hpp"

// Time-domain dynamics of a driven, relaxing two-level nuclear ensemble.
//
// The lab-frame Bloch equations are integrated with a fixed-step classical
// Runge-Kutta scheme (no rotating-wave approximation; the counter-rotating
// term is kept):
//
//     dM/dt = gamma M x B  -  relaxation,
//     B = (0, B_a cos(2 pi nu_a t + phi0), B0).
//
// Transverse components relax to zero with rate 1/T2; the longitudinal
// component relaxes toward `longitudinal_target` with rate 1/T1. For a
// hyperpolarized ensemble the target is 0 (the initial order decays toward a
// negligible thermal value); setting it to M0 instead gives a continuously
// repumped equilibrium. With target 0 and T1 = T2 the linear-regime envelope
// is proportional to t e^{-t/T2} sinc(delta t / 2), the transient closed form
// in core.hpp.

namespace spinamp {

struct BlochState {
    double mx = 0.0, my = 0.0, mz = 0.0;  // A/m
    double t = 0.0;                       // s
};

struct BlochParams {
    SampleSpec sample;
    double b0 = 0.0;                   // bias field along z, T
    DriveField drive;                  // linearly polarized along y
    double kappa = 2.0;                // dipolar readout calibration; 2 is the
                                       // rotating-wave value, refined by calibrate_kappa
    double longitudinal_target = 0.0;  // relaxation target for mz, A/m

    double nu0() const { return sample.gamma * b0 / kTwoPi; }

    void validate() const {
        sample.validate();
        drive.validate();
        if (sample.gamma <= 0.0)
            throw config_error("BlochParams: gamma must be positive");
        if (!std::isfinite(b0) || b0 < 0.0)
            throw config_error("BlochParams: b0 must be >= 0");
        if (b0 > 0.0 && !(nu0() > 0.0 && std::isfinite(nu0())))
            throw config_error("BlochParams: nu0 must be finite and positive");
        if (!std::isfinite(longitudinal_target))
            throw config_error("BlochParams: longitudinal_target must be finite");
    }
};

/// Uniformly sampled magnetization history, states[k].t = k dt.
struct Trajectory {
    std::vector<BlochState> states;
    double dt = 0.0;
};

/// Default integration step: 256 samples per period of the fastest frequency.
inline double default_dt(const BlochParams& params) {
    const double fmax = std::max({params.nu0(), params.drive.frequency, 1.0});
    return 1.0 / (256.0 * fmax);
}

namespace detail {

struct BlochRates {
    double gamma, b0, ba, omega_a, phi0, inv_t1, inv_t2, mz_eq;

    void eval(double t, const double m[3], double out[3]) const {
        const double by = ba * std::cos(omega_a * t + phi0);
        out[0] = gamma * (m[1] * b0 - m[2] * by) - m[0] * inv_t2;
        out[1] = -gamma * m[0] * b0 - m[1] * inv_t2;
        out[2] = gamma * m[0] * by - (m[2] - mz_eq) * inv_t1;
    }
};

}  // namespace detail

/// Integrates the Bloch equations from an explicit initial state.
/// Fixed-step RK4; deterministic. Requires dt <= 1/(50 max(nu0, nu_a)).
inline Trajectory evolve_from(const BlochParams& params, const BlochState& initial,
                              double duration, double dt) {
    params.validate();
    if (!std::isfinite(duration) || duration <= 0.0)
        throw config_error("evolve: duration must be positive");
    if (!std::isfinite(dt) || dt <= 0.0)
        throw config_error("evolve: dt must be positive");
    const double fmax = std::max(params.nu0(), params.drive.frequency);
    if (fmax > 0.0 && dt > 1.0 / (50.0 * fmax))
        throw config_error("evolve: dt too large; need dt <= 1/(50 max(nu0, nu_a))");

    const auto n_steps = static_cast<std::size_t>(std::llround(duration / dt));
    if (n_steps == 0) throw config_error("evolve: duration shorter than dt");

    const detail::BlochRates rates{
        params.sample.gamma,
        params.b0,
        params.drive.amplitude,
        kTwoPi * params.drive.frequency,
        params.drive.phase,
        std::isfinite(params.sample.t1) ? 1.0 / params.sample.t1 : 0.0,
        std::isfinite(params.sample.t2) ? 1.0 / params.sample.t2 : 0.0,
        params.longitudinal_target};

    Trajectory traj;
    traj.dt = dt;
    traj.states.reserve(n_steps + 1);
    double m[3] = {initial.mx, initial.my, initial.mz};
    traj.states.push_back(BlochState{m[0], m[1], m[2], 0.0});

    double k1[3], k2[3], k3[3], k4[3], tmp[3];
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(step) * dt;
        rates.eval(t, m, k1);
        for (int i = 0; i < 3; ++i) tmp[i] = m[i] + 0.5 * dt * k1[i];
        rates.eval(t + 0.5 * dt, tmp, k2);
        for (int i = 0; i < 3; ++i) tmp[i] = m[i] + 0.5 * dt * k2[i];
        rates.eval(t + 0.5 * dt, tmp, k3);
        for (int i = 0; i < 3; ++i) tmp[i] = m[i] + dt * k3[i];
        rates.eval(t + dt, tmp, k4);
        for (int i = 0; i < 3; ++i)
            m[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        traj.states.push_back(
            BlochState{m[0], m[1], m[2], static_cast<double>(step + 1) * dt});
        if ((step & 0xFFu) == 0xFFu && !(std::isfinite(m[0]) && std::isfinite(m[1]) &&
                                         std::isfinite(m[2])))
            throw numeric_error("evolve: non-finite magnetization at t = " +
                                std::to_string(t));
    }
    if (!(std::isfinite(m[0]) && std::isfinite(m[1]) && std::isfinite(m[2])))
        throw numeric_error("evolve: non-finite magnetization at end of run");
    return traj;
}

/// Integrates starting from the prepared state (0, 0, M0).
inline Trajectory evolve(const BlochParams& params, double duration, double dt,
                         const PhysicalConstants& c = default_constants()) {
    const double m0 = magnetization(params.sample, c);
    return evolve_from(params, BlochState{0.0, 0.0, m0, 0.0}, duration, dt);
}

/// Transverse envelope |m+| at time t_center, demodulated against omega_ref:
/// the complex mean of (mx + i my) e^{+i omega_ref t} over a centered window
/// of `periods` reference periods. Averaging over whole periods cancels the
/// counter-rotating component.
inline double envelope_at(const Trajectory& traj, double omega_ref, double t_center,
                          int periods = 1) {
    if (traj.states.size() < 2) throw config_error("envelope_at: empty trajectory");
    if (!(omega_ref > 0.0)) throw config_error("envelope_at: omega_ref must be positive");
    const double period = kTwoPi / omega_ref;
    const auto n_window =
        static_cast<std::ptrdiff_t>(std::llround(periods * period / traj.dt));
    if (n_window < 4)
        throw config_error("envelope_at: window under-resolved; decrease dt");
    const auto center = static_cast<std::ptrdiff_t>(std::llround(t_center / traj.dt));
    const std::ptrdiff_t lo = center - n_window / 2;
    const std::ptrdiff_t hi = lo + n_window;  // exclusive
    if (lo < 0 || hi > static_cast<std::ptrdiff_t>(traj.states.size()))
        throw config_error("envelope_at: window extends outside trajectory");
    std::complex<double> acc{0.0, 0.0};
    for (std::ptrdiff_t k = lo; k < hi; ++k) {
        const BlochState& s = traj.states[static_cast<std::size_t>(k)];
        const double theta = omega_ref * s.t;
        acc += std::complex<double>(s.mx, s.my) *
               std::complex<double>(std::cos(theta), std::sin(theta));
    }
    return std::abs(acc) / static_cast<double>(n_window);
}

/// Dipolar field radiated along the detector (drive) axis:
/// B_s(t) = kappa * 2 xi mu0 V * m_det(t) with m_det = -m_y. The detector sits
/// on the bias axis, where the transverse dipolar return flux is antiparallel
/// to the transverse magnetization; this sign makes positive detuning
/// constructive, consistent with the steady-state phase model in signal.hpp.
inline TimeSeries dipolar_field(const Trajectory& traj, const BlochParams& params,
                                const PhysicalConstants& c = default_constants()) {
    if (traj.states.size() < 2) throw config_error("dipolar_field: empty trajectory");
    if (!std::isfinite(params.kappa) || params.kappa <= 0.0)
        throw config_error("dipolar_field: kappa must be positive");
    const double scale =
        -params.kappa * 2.0 * params.sample.xi * c.mu0 * params.sample.volume;
    TimeSeries ts;
    ts.rate = 1.0 / traj.dt;
    ts.t0 = 0.0;
    ts.samples.reserve(traj.states.size());
    for (const BlochState& s : traj.states) ts.samples.push_back(scale * s.my);
    return ts;
}

/// Simulated gain G(t) = envelope(B_s)(t) / B_a for an existing trajectory.
inline double simulated_gain(const Trajectory& traj, const BlochParams& params,
                             double t, int periods = 1,
                             const PhysicalConstants& c = default_constants()) {
    if (params.drive.amplitude <= 0.0)
        throw config_error("simulated_gain: drive amplitude must be positive");
    const double env =
        envelope_at(traj, kTwoPi * params.drive.frequency, t, periods);
    return params.kappa * 2.0 * params.sample.xi * c.mu0 * params.sample.volume * env /
           params.drive.amplitude;
}

/// Calibrates the dipolar readout factor kappa so that the simulated B_s/B_a
/// at (delta = 0, t = T2) equals the transient closed form exactly at that
/// point. Runs in the deep linear regime (B_a = 1e-3 of the saturation
/// scale). A result outside [0.25, 4] signals a broken drive convention and
/// raises numeric_error.
inline double calibrate_kappa(const SampleSpec& sample, double b0,
                              const PhysicalConstants& c = default_constants()) {
    sample.validate();
    if (!std::isfinite(sample.t2))
        throw config_error("calibrate_kappa: t2 must be finite");
    BlochParams params;
    params.sample = sample;
    params.b0 = b0;
    params.kappa = 1.0;
    params.longitudinal_target = 0.0;
    const double nu0 = params.nu0();
    if (!(nu0 > 0.0) || !std::isfinite(nu0))
        throw config_error("calibrate_kappa: need positive resonance frequency");
    params.drive.amplitude = 1e-3 * saturation_scale(sample);
    params.drive.frequency = nu0;

    const double dt = default_dt(params);
    const double duration = sample.t2 + 2.0 / nu0;
    const Trajectory traj = evolve(params, duration, dt, c);
    const double bs_over_ba = simulated_gain(traj, params, sample.t2, 1, c);
    if (bs_over_ba <= 0.0)
        throw numeric_error("calibrate_kappa: vanishing simulated response");
    const double g_closed =
        amplification_transient(sample, sample.t2, Detuning{0.0, nu0}, c);
    const double kappa = g_closed / bs_over_ba;
    if (kappa < 0.25 || kappa > 4.0)
        throw numeric_error("calibrate_kappa: kappa = " + std::to_string(kappa) +
                            " outside [0.25, 4]; drive convention broken");
    return kappa;
}

/// Fixed sensing protocol for amplitude/detuning scans.
struct SenseProtocol {
    double record_seconds = 0.0;   // snapped to an integer number of drive periods
    double detuning = 0.0;         // rad/s, relative to nu0
    int samples_per_period = 64;   // drive-period sampling of the record
    double noise_rms = 0.0;        // T
    std::uint64_t seed = 0;        // required when noise_rms > 0
};

/// One full nonlinear measurement: evolve, radiate, synthesize the
/// with/without records, extract R at the drive frequency.
inline double measure_ratio(const BlochParams& params, const SenseProtocol& protocol,
                            std::uint64_t noise_seed_with, std::uint64_t noise_seed_without,
                            const PhysicalConstants& c = default_constants()) {
    params.validate();
    const double nu_a = params.drive.frequency;
    if (!(nu_a > 0.0)) throw config_error("measure_ratio: drive frequency must be positive");
    const auto periods =
        static_cast<std::size_t>(std::llround(protocol.record_seconds * nu_a));
    if (periods < 10) throw config_error("measure_ratio: record must span >= 10 periods");
    const std::size_t n = periods * static_cast<std::size_t>(protocol.samples_per_period);
    const double dt = 1.0 / (static_cast<double>(protocol.samples_per_period) * nu_a);

    const Trajectory traj = evolve(params, static_cast<double>(n) * dt, dt, c);
    TimeSeries dipolar = dipolar_field(traj, params, c);
    dipolar.samples.resize(n);

    const TimeSeries drive_ts = sample_drive(params.drive, dipolar.rate, n);
    TimeSeries zeros = drive_ts;
    std::fill(zeros.samples.begin(), zeros.samples.end(), 0.0);

    const TimeSeries with_spins =
        synthesize(drive_ts, dipolar, protocol.noise_rms, noise_seed_with);
    const TimeSeries without_spins =
        synthesize(drive_ts, zeros, protocol.noise_rms, noise_seed_without);
    return ratio(with_spins, without_spins, nu_a);
}

/// R(B_a) over an ascending amplitude list at the protocol's fixed (t, delta).
/// Results are ordered by input index.
inline std::vector<std::pair<double, double>> saturation_scan(
    const BlochParams& base, const std::vector<double>& amplitudes,
    const SenseProtocol& protocol, const PhysicalConstants& c = default_constants()) {
    base.validate();
    if (protocol.noise_rms > 0.0 && protocol.seed == 0)
        throw config_error("saturation_scan: seed required when noise_rms > 0");
    for (std::size_t i = 0; i + 1 < amplitudes.size(); ++i)
        if (!(amplitudes[i] < amplitudes[i + 1]))
            throw config_error("saturation_scan: amplitudes must be sorted ascending");
    std::vector<std::pair<double, double>> out;
    out.reserve(amplitudes.size());
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        if (!(amplitudes[i] > 0.0))
            throw config_error("saturation_scan: amplitudes must be positive");
        BlochParams params = base;
        params.drive.amplitude = amplitudes[i];
        params.drive.frequency = base.nu0() + protocol.detuning / kTwoPi;
        const double r = measure_ratio(params, protocol,
                                       splitmix64(protocol.seed ^ (2 * i)),
                                       splitmix64(protocol.seed ^ (2 * i + 1)), c);
        out.emplace_back(amplitudes[i], r);
    }
    return out;
}

}  // namespace spinamp
