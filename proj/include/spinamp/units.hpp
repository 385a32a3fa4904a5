#pragma once

#include <cmath>

// Compile-time SI dimension bookkeeping.
//
// Every physical quantity used by the closed-form amplification layer is a
// Quantity<M,K,S,A> carrying exponents of meter, kilogram, second, ampere.
// Products and quotients combine the exponents in the type, so a formula
// only compiles if it is dimensionally closed; assigning a result to
// si::Scalar is a static proof that the expression is dimensionless.
// Angles (rad) are treated as dimensionless.

namespace spinamp::si {

template <int M, int K, int S, int A>
struct Quantity {
    double v;

    constexpr explicit Quantity(double value) : v(value) {}
    constexpr double value() const { return v; }

    constexpr Quantity operator-() const { return Quantity{-v}; }
    constexpr Quantity operator+(Quantity o) const { return Quantity{v + o.v}; }
    constexpr Quantity operator-(Quantity o) const { return Quantity{v - o.v}; }
    constexpr Quantity operator*(double s) const { return Quantity{v * s}; }
    constexpr Quantity operator/(double s) const { return Quantity{v / s}; }

    constexpr bool operator<(Quantity o) const { return v < o.v; }
    constexpr bool operator>(Quantity o) const { return v > o.v; }
    constexpr bool operator==(Quantity o) const { return v == o.v; }
};

template <int M1, int K1, int S1, int A1, int M2, int K2, int S2, int A2>
constexpr Quantity<M1 + M2, K1 + K2, S1 + S2, A1 + A2> operator*(
    Quantity<M1, K1, S1, A1> a, Quantity<M2, K2, S2, A2> b) {
    return Quantity<M1 + M2, K1 + K2, S1 + S2, A1 + A2>{a.v * b.v};
}

template <int M1, int K1, int S1, int A1, int M2, int K2, int S2, int A2>
constexpr Quantity<M1 - M2, K1 - K2, S1 - S2, A1 - A2> operator/(
    Quantity<M1, K1, S1, A1> a, Quantity<M2, K2, S2, A2> b) {
    return Quantity<M1 - M2, K1 - K2, S1 - S2, A1 - A2>{a.v / b.v};
}

template <int M, int K, int S, int A>
constexpr Quantity<M, K, S, A> operator*(double s, Quantity<M, K, S, A> q) {
    return Quantity<M, K, S, A>{s * q.v};
}

using Scalar = Quantity<0, 0, 0, 0>;            // dimensionless
using Meters = Quantity<1, 0, 0, 0>;
using Seconds = Quantity<0, 0, 1, 0>;
using PerSecond = Quantity<0, 0, -1, 0>;        // rad/s or Hz
using CubicMeters = Quantity<3, 0, 0, 0>;
using PerCubicMeter = Quantity<-3, 0, 0, 0>;
using Tesla = Quantity<0, 1, -2, -1>;           // kg s^-2 A^-1
using AmperePerMeter = Quantity<-1, 0, 0, 1>;   // magnetization
using GyromagneticRatio = Quantity<0, -1, 1, 1>;  // rad s^-1 T^-1
using Permeability = Quantity<1, 1, -2, -2>;      // T m / A
using PlanckAction = Quantity<2, 1, -1, 0>;       // J s

// Boundary conversions. Internally everything is SI (T, s, m, rad/s);
// config files and CLI flags use the lab-friendly units below.
constexpr double tesla_from_nanotesla(double nt) { return nt * 1e-9; }
constexpr double nanotesla_from_tesla(double t) { return t * 1e9; }
constexpr double per_m3_from_per_cm3(double per_cm3) { return per_cm3 * 1e6; }
constexpr double m3_from_ml(double ml) { return ml * 1e-6; }
constexpr double rad_s_t_from_mhz_t(double mhz_per_t) {
    return 2.0 * 3.14159265358979323846 * mhz_per_t * 1e6;
}
constexpr double mhz_t_from_rad_s_t(double gamma) {
    return gamma / (2.0 * 3.14159265358979323846 * 1e6);
}

}  // namespace spinamp::si
