#include "relu_forge/interval.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <string>

namespace relu_forge {

namespace {

double step_down(double v, int n) {
    for (int i = 0; i < n; ++i) v = std::nextafter(v, -std::numeric_limits<double>::infinity());
    return v;
}

double step_up(double v, int n) {
    for (int i = 0; i < n; ++i) v = std::nextafter(v, std::numeric_limits<double>::infinity());
    return v;
}

} // namespace

Interval widen(double lo, double hi, int ulps) {
    return {step_down(lo, ulps), step_up(hi, ulps)};
}

Interval hull(const Interval& a, const Interval& b) {
    return {std::fmin(a.lo, b.lo), std::fmax(a.hi, b.hi)};
}

Interval operator+(const Interval& a, const Interval& b) {
    return widen(a.lo + b.lo, a.hi + b.hi);
}

Interval operator-(const Interval& a, const Interval& b) {
    return widen(a.lo - b.hi, a.hi - b.lo);
}

Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

Interval operator*(const Interval& a, const Interval& b) {
    const double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return widen(std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]}));
}

Interval operator/(const Interval& a, const Interval& b) {
    if (b.lo <= 0.0 && b.hi >= 0.0) {
        throw DomainError("division by an interval containing zero: [" +
                          std::to_string(b.lo) + ", " + std::to_string(b.hi) + "]");
    }
    const double c[4] = {a.lo / b.lo, a.lo / b.hi, a.hi / b.lo, a.hi / b.hi};
    return widen(std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]}));
}

Interval iexp(const Interval& a) {
    Interval r = widen(std::exp(a.lo), std::exp(a.hi));
    r.lo = std::fmax(r.lo, 0.0);
    return r;
}

Interval iln(const Interval& a) {
    if (a.lo <= 0.0) {
        throw DomainError("ln of a range reaching " + std::to_string(a.lo) + " <= 0");
    }
    return widen(std::log(a.lo), std::log(a.hi));
}

Interval icos(const Interval& a) {
    const double pi = std::numbers::pi;
    if (a.width() >= 2.0 * pi) return {-1.0, 1.0};
    double lo = std::min(std::cos(a.lo), std::cos(a.hi));
    double hi = std::max(std::cos(a.lo), std::cos(a.hi));
    // Critical points k*pi inside [a.lo, a.hi] pin the range to +-1.
    const double k_lo = std::ceil(a.lo / pi);
    const double k_hi = std::floor(a.hi / pi);
    for (double k = k_lo; k <= k_hi; k += 1.0) {
        const bool even = std::fabs(std::remainder(k, 2.0)) < 0.5;
        if (even) hi = 1.0; else lo = -1.0;
    }
    Interval r = widen(lo, hi);
    r.lo = std::fmax(r.lo, -1.0);
    r.hi = std::fmin(r.hi, 1.0);
    return r;
}

Interval iabs(const Interval& a) {
    if (a.lo >= 0.0) return a;
    if (a.hi <= 0.0) return -a;
    return {0.0, a.mag()};
}

Interval ipow(const Interval& a, double expnt) {
    if (expnt == 0.0) return Interval::point(1.0);
    if (expnt == 1.0) return a;
    const bool integral = std::rint(expnt) == expnt && std::fabs(expnt) < 1e15;
    if (!integral) {
        if (a.lo <= 0.0) {
            throw DomainError("non-integer power of a range reaching " +
                              std::to_string(a.lo) + " <= 0");
        }
        return widen(std::pow(a.lo, expnt), std::pow(a.hi, expnt));
    }
    const auto n = static_cast<long long>(std::rint(expnt));
    if (n < 0) return Interval::point(1.0) / ipow(a, static_cast<double>(-n));
    const bool even = n % 2 == 0;
    if (even) {
        const Interval m = iabs(a);
        return widen(std::pow(m.lo, expnt), std::pow(m.hi, expnt));
    }
    return widen(std::pow(a.lo, expnt), std::pow(a.hi, expnt));
}

} // namespace relu_forge
