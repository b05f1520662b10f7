#pragma once

// Truncated Taylor numbers carrying a value with its first and second
// derivatives along one independent variable (forward mode).

#include <cmath>

namespace evimacs {

struct Jet2 {
    double v = 0.0;   // value
    double d = 0.0;   // first derivative
    double dd = 0.0;  // second derivative

    static Jet2 constant(double x) { return {x, 0.0, 0.0}; }
    static Jet2 variable(double x) { return {x, 1.0, 0.0}; }
};

inline Jet2 operator+(Jet2 a, Jet2 b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
inline Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
inline Jet2 operator-(Jet2 a) { return {-a.v, -a.d, -a.dd}; }
inline Jet2 operator*(Jet2 a, Jet2 b) { return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd}; }
inline Jet2 operator+(Jet2 a, double b) { return {a.v + b, a.d, a.dd}; }
inline Jet2 operator+(double a, Jet2 b) { return b + a; }
inline Jet2 operator-(Jet2 a, double b) { return {a.v - b, a.d, a.dd}; }
inline Jet2 operator-(double a, Jet2 b) { return {a - b.v, -b.d, -b.dd}; }
inline Jet2 operator*(Jet2 a, double b) { return {a.v * b, a.d * b, a.dd * b}; }
inline Jet2 operator*(double a, Jet2 b) { return b * a; }

// Composition with a scalar function given f, f', f'' at a.v.
inline Jet2 chain(Jet2 a, double f, double f1, double f2) { return {f, f1 * a.d, f2 * a.d * a.d + f1 * a.dd}; }

inline Jet2 reciprocal(Jet2 a) {
    const double r = 1.0 / a.v;
    return chain(a, r, -r * r, 2.0 * r * r * r);
}
inline Jet2 operator/(Jet2 a, Jet2 b) { return a * reciprocal(b); }
inline Jet2 operator/(Jet2 a, double b) { return a * (1.0 / b); }
inline Jet2 operator/(double a, Jet2 b) { return a * reciprocal(b); }

inline Jet2 sqrt(Jet2 a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet2 exp(Jet2 a) {
    const double e = std::exp(a.v);
    return chain(a, e, e, e);
}
inline Jet2 sin(Jet2 a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, s, c, -s);
}
inline Jet2 cos(Jet2 a) {
    const double s = std::sin(a.v), c = std::cos(a.v);
    return chain(a, c, -s, -c);
}
// Real power with constant exponent.
inline Jet2 pow(Jet2 a, double p) {
    const double f = std::pow(a.v, p);
    return chain(a, f, p * f / a.v, p * (p - 1.0) * f / (a.v * a.v));
}

}  // namespace evimacs
