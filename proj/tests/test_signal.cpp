#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "spinamp/noise.hpp"
#include "spinamp/signal.hpp"
#include "spinamp/timeseries.hpp"

using namespace spinamp;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

TimeSeries tone(double amp, double freq, double phase, double rate, std::size_t n) {
    TimeSeries ts;
    ts.rate = rate;
    ts.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        ts.samples[i] = amp * std::cos(kTwoPi * freq * ts.time_at(i) + phase);
    return ts;
}

TimeSeries zeros(double rate, std::size_t n) {
    TimeSeries ts;
    ts.rate = rate;
    ts.samples.assign(n, 0.0);
    return ts;
}

}  // namespace

TEST_CASE("timeseries csv round trip", "[timeseries]") {
    TimeSeries ts;
    ts.rate = 1000.0;
    ts.samples = {1.0, -0.25, 3.0e-9, 0.7071067811865476, 2.0};
    const std::string path = "ts_test.csv";
    write_timeseries_csv(ts, path);

    SECTION("header, LF endings, 17 significant digits") {
        std::ifstream in(path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        CHECK(content.rfind("t_s,value_T\n", 0) == 0);
        CHECK(content.find('\r') == std::string::npos);
        CHECK(content.find("0.70710678118654757") != std::string::npos);
    }
    SECTION("parse recovers samples and rate exactly") {
        const TimeSeries back = read_timeseries_csv(path);
        REQUIRE(back.samples.size() == ts.samples.size());
        for (std::size_t i = 0; i < ts.samples.size(); ++i)
            CHECK(back.samples[i] == ts.samples[i]);
        CHECK(back.rate == Approx(ts.rate).epsilon(1e-12));
    }
    std::remove(path.c_str());
}

TEST_CASE("gaussian stream is a pure function of (seed, index)", "[noise]") {
    const GaussianStream a(1234), b(1234), c(99);
    CHECK(a.at(0) == b.at(0));
    CHECK(a.at(1 << 20) == b.at(1 << 20));
    CHECK(a.at(7) != c.at(7));

    SECTION("unit variance, zero mean") {
        const std::size_t n = 100000;
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = a.at(i);
            sum += v;
            sq += v * v;
        }
        const double mean = sum / n;
        const double var = sq / n - mean * mean;
        CHECK(std::abs(mean) < 0.02);
        CHECK(var == Approx(1.0).epsilon(0.05));
    }
}

TEST_CASE("synthesize", "[signal]") {
    const double rate = 4000.0;
    const std::size_t n = 4000;
    DriveField drive;
    drive.amplitude = 2.5e-10;
    drive.frequency = 250.0;

    SECTION("no noise, no dipolar: pure drive sinusoid") {
        const TimeSeries out = synthesize(drive, zeros(rate, n), 0.0, 1);
        for (std::size_t i = 0; i < 16; ++i)
            CHECK(out.samples[i] ==
                  Approx(drive.amplitude * std::cos(kTwoPi * 250.0 * i / rate))
                      .margin(1e-24));
    }
    SECTION("same seed, bit-identical output") {
        const TimeSeries a = synthesize(drive, zeros(rate, n), 1e-11, 77);
        const TimeSeries b = synthesize(drive, zeros(rate, n), 1e-11, 77);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < n; ++i) REQUIRE(a.samples[i] == b.samples[i]);
    }
    SECTION("noise RMS within 5% over 1e5 samples") {
        const std::size_t big = 100000;
        const double target = 3e-12;
        const TimeSeries noisy = synthesize(drive, zeros(rate, big), target, 5);
        const TimeSeries clean = synthesize(drive, zeros(rate, big), 0.0, 5);
        double sq = 0.0;
        for (std::size_t i = 0; i < big; ++i) {
            const double d = noisy.samples[i] - clean.samples[i];
            sq += d * d;
        }
        CHECK(std::sqrt(sq / big) == Approx(target).epsilon(0.05));
    }
    SECTION("rate mismatch rejected") {
        TimeSeries dip = zeros(rate / 2, n);
        CHECK_THROWS_AS(synthesize(tone(1e-10, 250, 0, rate, n), dip, 0.0, 1),
                        config_error);
    }
}

TEST_CASE("single-bin extraction", "[signal]") {
    const double rate = 5000.0;
    const double freq = 250.0;
    const std::size_t n = 5000;  // 1 s, 250 periods

    SECTION("pure cosine: amplitude and zero phase to 1e-6") {
        const TimeSeries ts = tone(4.2e-10, freq, 0.0, rate, n);
        const Phasor p = extract(ts, freq);
        CHECK(p.amplitude == Approx(4.2e-10).epsilon(1e-6));
        CHECK(std::abs(p.phase) < 1e-6);
    }
    SECTION("phase recovered for a shifted tone") {
        const TimeSeries ts = tone(1e-10, freq, 0.77, rate, n);
        const Phasor p = extract(ts, freq);
        CHECK(p.phase == Approx(0.77).epsilon(1e-6));
    }
    SECTION("two integer-period tones extract independently") {
        TimeSeries ts = tone(2e-10, 200.0, 0.3, rate, n);
        const TimeSeries other = tone(5e-10, 215.0, 1.1, rate, n);  // 15 Hz = 15/T apart
        for (std::size_t i = 0; i < n; ++i) ts.samples[i] += other.samples[i];
        CHECK(extract(ts, 200.0).amplitude == Approx(2e-10).epsilon(1e-3));
        CHECK(extract(ts, 215.0).amplitude == Approx(5e-10).epsilon(1e-3));
    }
    SECTION("time shift leaves amplitude, moves phase by 2 pi f dt") {
        // identical absolute signal, window started delta_t later
        const double delta_t = 3.0 / rate;
        TimeSeries shifted;
        shifted.rate = rate;
        shifted.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            shifted.samples[i] = 1e-10 * std::cos(kTwoPi * freq * (i / rate + delta_t));
        const Phasor p0 = extract(tone(1e-10, freq, 0.0, rate, n), freq);
        const Phasor p1 = extract(shifted, freq);
        CHECK(p1.amplitude == Approx(p0.amplitude).epsilon(1e-9));
        CHECK(p1.phase == Approx(kTwoPi * freq * delta_t).epsilon(1e-6));
    }
    SECTION("extraction is linear in the record") {
        const TimeSeries x = tone(3e-10, freq, 0.2, rate, n);
        const TimeSeries y = tone(1e-10, freq, 1.9, rate, n);
        TimeSeries mix = x;
        for (std::size_t i = 0; i < n; ++i)
            mix.samples[i] = 2.0 * x.samples[i] + 0.5 * y.samples[i];
        const auto px = extract(x, freq).c;
        const auto py = extract(y, freq).c;
        const auto pm = extract(mix, freq).c;
        CHECK(std::abs(pm - (2.0 * px + 0.5 * py)) < 1e-9 * std::abs(pm));
    }
    SECTION("short record rejected") {
        CHECK_THROWS_AS(extract(tone(1e-10, freq, 0.0, rate, 100), freq), config_error);
    }
}

TEST_CASE("amplitude ratio", "[signal]") {
    const double rate = 5000.0;
    const std::size_t n = 5000;
    const TimeSeries a = tone(1e-10, 250.0, 0.0, rate, n);

    SECTION("identical inputs give exactly 1") {
        CHECK(ratio(a, a, 250.0) == Approx(1.0).epsilon(1e-15));
    }
    SECTION("zero reference rejected") {
        CHECK_THROWS_AS(ratio(a, zeros(rate, n), 250.0), numeric_error);
    }
    SECTION("acetonitrile-like numbers: R tracks 1 + G cos(phi)") {
        // dipolar tone with G = 0.031, cos(phi) = 0.509 riding on the drive
        const double g = 0.031;
        const double phi = std::acos(0.509);
        TimeSeries with = a;
        for (std::size_t i = 0; i < n; ++i)
            with.samples[i] += g * 1e-10 * std::cos(kTwoPi * 250.0 * i / rate + phi);
        const double r = ratio(with, a, 250.0);
        CHECK(r == Approx(std::sqrt(1.0 + 2.0 * g * 0.509 + g * g)).epsilon(1e-9));
        CHECK(r == Approx(1.016).margin(5e-4));
    }
    SECTION("pyridine-like numbers") {
        const double g = 0.024;
        const double phi = std::acos(0.509);
        TimeSeries with = a;
        for (std::size_t i = 0; i < n; ++i)
            with.samples[i] += g * 1e-10 * std::cos(kTwoPi * 250.0 * i / rate + phi);
        CHECK(ratio(with, a, 250.0) == Approx(1.012).margin(5e-4));
    }
}

TEST_CASE("phasor pair decomposition", "[signal]") {
    const double rate = 5000.0;
    const std::size_t n = 5000;
    const TimeSeries drive = tone(2e-10, 250.0, 0.4, rate, n);
    TimeSeries with = drive;
    const double phi = 1.1;
    for (std::size_t i = 0; i < n; ++i)
        with.samples[i] += 6e-12 * std::cos(kTwoPi * 250.0 * i / rate + 0.4 + phi);
    const PhasorPair p = phasor_pair(with, drive, 250.0);
    CHECK(p.amp_a == Approx(2e-10).epsilon(1e-9));
    CHECK(p.amp_s == Approx(6e-12).epsilon(1e-6));
    CHECK(p.phi == Approx(phi).epsilon(1e-6));
}

TEST_CASE("interference ratio", "[signal]") {
    SECTION("g = 0 gives 1") {
        CHECK(interference_ratio(0.0, 1.3) == 1.0);
        CHECK(interference_ratio_first_order(0.0, 1.3) == 1.0);
    }
    SECTION("phi = pi/4 first order: 1 + sqrt(2) g / 2") {
        const double g = 0.027;
        CHECK(interference_ratio_first_order(g, kPi / 4.0) ==
              Approx(1.0 + std::sqrt(2.0) * g / 2.0).epsilon(1e-12));
    }
    SECTION("documented gap between exact and first order at phi = pi/2") {
        CHECK(interference_ratio(0.05, kPi / 2.0) ==
              Approx(std::sqrt(1.0025)).epsilon(1e-12));
        CHECK(interference_ratio_first_order(0.05, kPi / 2.0) == Approx(1.0).margin(1e-12));
    }
    SECTION("triangle inequality |1 - g| <= R <= 1 + g") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 2000; ++i) {
            const double g = 2.0 * u(rng);
            const double phi = kTwoPi * u(rng) - kPi;
            const double r = interference_ratio(g, phi);
            REQUIRE(r >= std::abs(1.0 - g) - 1e-12);
            REQUIRE(r <= 1.0 + g + 1e-12);
        }
    }
    SECTION("negative g rejected") {
        CHECK_THROWS_AS(interference_ratio(-0.1, 0.0), config_error);
    }
}

TEST_CASE("phase model", "[signal]") {
    const double t2 = 0.8;
    CHECK(phase_model(Detuning{0.0, 0.0}, t2) == Approx(kPi / 2.0).epsilon(1e-15));
    CHECK(phase_model(Detuning{1e9, 0.0}, t2) == Approx(0.0).margin(1e-8));
    CHECK(phase_model(Detuning{-1e9, 0.0}, t2) == Approx(kPi).margin(1e-8));
    CHECK(phase_model(Detuning{1.0 / t2, 0.0}, t2) == Approx(kPi / 4.0).epsilon(1e-12));
    CHECK_THROWS_AS(phase_model(Detuning{0.0, 0.0}, 0.0), config_error);
}

TEST_CASE("dispersive scan", "[signal]") {
    SampleSpec s;
    s.gamma = default_constants().gamma("1H");
    s.n = 1e28;
    s.volume = 5e-7;
    s.p0 = 2e-4 * 0.25043102886846077;  // nVP0 = 2.5043e17 -> G_ss = 0.038
    s.t1 = 0.8;
    s.t2 = 0.8;
    s.xi = 2e4;
    DriveField drive;
    drive.amplitude = 6e-10;
    drive.frequency = 250.0;

    std::vector<double> deltas;
    for (int i = -100; i <= 100; ++i) deltas.push_back(0.05 * i / s.t2);

    DispersiveProtocol protocol;  // steady gain, first-order ratio
    const auto scan = dispersive_scan(s, drive, deltas, protocol);
    REQUIRE(scan.size() == deltas.size());

    SECTION("R - 1 is antisymmetric to 1e-6") {
        for (std::size_t i = 0; i < scan.size(); ++i) {
            const auto& plus = scan[i];
            const auto& minus = scan[scan.size() - 1 - i];
            REQUIRE(plus.delta == Approx(-minus.delta).margin(1e-12));
            REQUIRE(plus.r - 1.0 == Approx(-(minus.r - 1.0)).margin(1e-6));
        }
    }
    SECTION("maximum at phi = pi/4 with R = 1 + sqrt(2) G(delta*) / 2") {
        std::size_t imax = 0;
        for (std::size_t i = 0; i < scan.size(); ++i)
            if (scan[i].r > scan[imax].r) imax = i;
        CHECK(scan[imax].delta == Approx(1.0 / s.t2).epsilon(1e-12));
        CHECK(scan[imax].phi == Approx(kPi / 4.0).epsilon(1e-9));
        const double g_at_peak = gain_steady(s, scan[imax].delta);
        CHECK(scan[imax].r ==
              Approx(1.0 + std::sqrt(2.0) * g_at_peak / 2.0).margin(1e-6));
    }
    SECTION("extremes land on the measured curve") {
        double rmax = 0.0, rmin = 2.0;
        for (const auto& p : scan) {
            rmax = std::max(rmax, p.r);
            rmin = std::min(rmin, p.r);
        }
        CHECK(rmax == Approx(1.019).margin(0.005));
        CHECK(rmin == Approx(0.979).margin(0.005));
    }
}

TEST_CASE("end-to-end ratio equals the vector-sum model", "[signal]") {
    const double rate = 8000.0;
    const std::size_t n = 8000;
    DriveField drive;
    drive.amplitude = 6e-10;
    drive.frequency = 250.0;

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double g = 0.005 + 0.045 * u(rng);
        const double phi = kPi * u(rng);
        const double noise = drive.amplitude / (100.0 + 900.0 * u(rng));  // SNR 100..1000
        TimeSeries dipolar;
        dipolar.rate = rate;
        dipolar.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            dipolar.samples[i] =
                g * drive.amplitude * std::cos(kTwoPi * 250.0 * i / rate + phi);
        const TimeSeries with = synthesize(drive, dipolar, noise, 1000 + trial);
        TimeSeries clean_dip = dipolar;
        std::fill(clean_dip.samples.begin(), clean_dip.samples.end(), 0.0);
        const TimeSeries without = synthesize(drive, clean_dip, noise, 5000 + trial);
        const double r = ratio(with, without, 250.0);
        REQUIRE(r == Approx(interference_ratio(g, phi)).epsilon(0.01));
    }
}

TEST_CASE("repeated-seed R spread stays below 1e-3 at SNR 1e3", "[signal]") {
    const double rate = 8000.0;
    const std::size_t n = 8000;
    DriveField drive;
    drive.amplitude = 6e-10;
    drive.frequency = 250.0;
    TimeSeries dipolar = zeros(rate, n);
    for (std::size_t i = 0; i < n; ++i)
        dipolar.samples[i] = 0.02 * drive.amplitude * std::cos(kTwoPi * 250.0 * i / rate + 0.9);
    const double noise = drive.amplitude / 1000.0;
    std::vector<double> rs;
    for (int seed = 0; seed < 100; ++seed) {
        const TimeSeries with = synthesize(drive, dipolar, noise, 2 * seed + 1);
        TimeSeries zero_dip = dipolar;
        std::fill(zero_dip.samples.begin(), zero_dip.samples.end(), 0.0);
        const TimeSeries without = synthesize(drive, zero_dip, noise, 2 * seed + 2);
        rs.push_back(ratio(with, without, 250.0));
    }
    const double mean = std::accumulate(rs.begin(), rs.end(), 0.0) / rs.size();
    double var = 0.0;
    for (const double r : rs) var += (r - mean) * (r - mean);
    var /= rs.size();
    CHECK(std::sqrt(var) < 1e-3);
}
