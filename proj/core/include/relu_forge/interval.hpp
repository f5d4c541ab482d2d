#pragma once

#include <cmath>

#include "relu_forge/errors.hpp"

namespace relu_forge {

// Closed interval [lo, hi] with outward-rounded arithmetic: every operation
// widens its result by a couple of ulps, so computed intervals always enclose
// the exact ones even though libm functions are only faithfully rounded.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {}
    static Interval point(double v) { return {v, v}; }

    double width() const { return hi - lo; }
    double mag() const { return std::fmax(std::fabs(lo), std::fabs(hi)); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

Interval widen(double lo, double hi, int ulps = 2);
Interval hull(const Interval& a, const Interval& b);

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
// Throws DomainError if b straddles zero.
Interval operator/(const Interval& a, const Interval& b);

Interval iexp(const Interval& a);
// Throws DomainError unless a.lo > 0.
Interval iln(const Interval& a);
Interval icos(const Interval& a);
Interval iabs(const Interval& a);
// Integer exponents accept any base; fractional exponents require a.lo > 0.
Interval ipow(const Interval& a, double expnt);

} // namespace relu_forge
