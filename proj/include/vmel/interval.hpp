#pragma once

// Rigorous interval arithmetic over IEEE doubles.
//
// All operations use round-to-nearest hardware arithmetic and widen the
// result by one ulp on each side, which encloses the 1/2 ulp rounding
// error of every primitive.  No rounding-mode switching is involved, so
// every operation is safe under concurrent use.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>

namespace vmel {

class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class DivisionByZeroInterval : public error {
public:
    DivisionByZeroInterval() : error("interval division by an interval containing zero") {}
};

class DomainError : public error {
public:
    explicit DomainError(const std::string& what) : error(what) {}
};

inline double next_up(double x) {
    return std::nextafter(x, std::numeric_limits<double>::infinity());
}

inline double next_down(double x) {
    return std::nextafter(x, -std::numeric_limits<double>::infinity());
}

struct Interval {
    double lo;
    double hi;

    Interval() : lo(0.0), hi(0.0) {}
    explicit Interval(double v) : lo(v), hi(v) {}
    Interval(double a, double b) : lo(a), hi(b) {
        if (!(lo <= hi)) throw error("malformed interval [" + std::to_string(a) + "," + std::to_string(b) + "]");
    }

    static Interval hull(double a, double b) { return a <= b ? Interval(a, b) : Interval(b, a); }
    static Interval entire() {
        return Interval(-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
    }

    double mid() const {
        double m = 0.5 * (lo + hi);
        if (!std::isfinite(m)) m = 0.5 * lo + 0.5 * hi;
        return std::clamp(m, lo, hi);
    }
    double rad() const { return std::max(next_up(hi - mid()), next_up(mid() - lo)); }
    double width() const { return next_up(hi - lo); }
    double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }   // sup |x|
    double mig() const {                                                    // inf |x|
        if (lo > 0.0) return lo;
        if (hi < 0.0) return -hi;
        return 0.0;
    }

    bool contains(double x) const { return lo <= x && x <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
    bool subset_of(const Interval& o) const { return o.lo <= lo && hi <= o.hi; }
    bool strictly_inside(const Interval& o) const { return o.lo < lo && hi < o.hi; }
    bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
    bool is_point() const { return lo == hi; }

    Interval hull_with(const Interval& o) const { return Interval(std::min(lo, o.lo), std::max(hi, o.hi)); }
    Interval intersect(const Interval& o) const {
        double a = std::max(lo, o.lo), b = std::min(hi, o.hi);
        if (a > b) throw error("empty interval intersection");
        return Interval(a, b);
    }
};

inline Interval widened(double lo, double hi) { return Interval(next_down(lo), next_up(hi)); }

namespace detail {
inline bool is_zero(const Interval& a) { return a.lo == 0.0 && a.hi == 0.0; }
inline bool is_one(const Interval& a) { return a.lo == 1.0 && a.hi == 1.0; }
}  // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
    if (detail::is_zero(a)) return b;
    if (detail::is_zero(b)) return a;
    return widened(a.lo + b.lo, a.hi + b.hi);
}
inline Interval operator-(const Interval& a, const Interval& b) {
    if (detail::is_zero(b)) return a;
    if (detail::is_zero(a)) return Interval(-b.hi, -b.lo);
    return widened(a.lo - b.hi, a.hi - b.lo);
}
inline Interval operator-(const Interval& a) { return Interval(-a.hi, -a.lo); }

inline Interval operator*(const Interval& a, const Interval& b) {
    if (detail::is_zero(a) || detail::is_zero(b)) return Interval(0.0);
    if (detail::is_one(a)) return b;
    if (detail::is_one(b)) return a;
    const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    double lo = std::min(std::min(p1, p2), std::min(p3, p4));
    double hi = std::max(std::max(p1, p2), std::max(p3, p4));
    if (std::isnan(lo) || std::isnan(hi)) {
        // 0 * inf; resolve conservatively unless both operands are the exact zero interval
        if ((a.lo == 0 && a.hi == 0) || (b.lo == 0 && b.hi == 0)) return Interval(0.0);
        return Interval::entire();
    }
    return widened(lo, hi);
}

inline Interval operator/(const Interval& a, const Interval& b) {
    if (b.contains_zero()) throw DivisionByZeroInterval();
    if (detail::is_zero(a)) return Interval(0.0);
    if (detail::is_one(b)) return a;
    const double q1 = a.lo / b.lo, q2 = a.lo / b.hi, q3 = a.hi / b.lo, q4 = a.hi / b.hi;
    return widened(std::min(std::min(q1, q2), std::min(q3, q4)),
                   std::max(std::max(q1, q2), std::max(q3, q4)));
}

inline Interval& operator+=(Interval& a, const Interval& b) { a = a + b; return a; }
inline Interval& operator-=(Interval& a, const Interval& b) { a = a - b; return a; }
inline Interval& operator*=(Interval& a, const Interval& b) { a = a * b; return a; }

inline Interval operator+(const Interval& a, double b) { return a + Interval(b); }
inline Interval operator+(double a, const Interval& b) { return Interval(a) + b; }
inline Interval operator-(const Interval& a, double b) { return a - Interval(b); }
inline Interval operator-(double a, const Interval& b) { return Interval(a) - b; }
inline Interval operator*(const Interval& a, double b) { return a * Interval(b); }
inline Interval operator*(double a, const Interval& b) { return Interval(a) * b; }
inline Interval operator/(const Interval& a, double b) { return a / Interval(b); }
inline Interval operator/(double a, const Interval& b) { return Interval(a) / b; }

inline Interval sqr(const Interval& a) {
    if (detail::is_zero(a)) return Interval(0.0);
    const double l = a.mig(), m = a.mag();
    Interval r = widened(l * l, m * m);
    if (r.lo < 0.0) r.lo = 0.0;
    return r;
}

inline Interval sqrt(const Interval& a) {
    if (a.lo < 0.0) throw DomainError("sqrt of an interval reaching below zero");
    double lo = next_down(std::sqrt(a.lo));
    double hi = next_up(std::sqrt(a.hi));
    return Interval(std::max(0.0, lo), hi);
}

inline Interval pow_int(const Interval& a, int n) {
    if (n == 0) return Interval(1.0);
    if (n < 0) return Interval(1.0) / pow_int(a, -n);
    Interval acc(1.0);
    Interval base = a;
    int k = n;
    bool first = true;
    while (k > 0) {
        if (k & 1) { acc = first ? base : acc * base; first = false; }
        k >>= 1;
        if (k) base = sqr(base);
    }
    return acc;
}

inline Interval abs(const Interval& a) { return Interval(a.mig(), a.mag()); }

// ---------------------------------------------------------------------------
// Transcendentals.  Argument reduction with a two-double enclosure of the
// reduction constant, then an alternating Taylor tail bound; widened by the
// usual one-ulp nudges at every step.  Tightness is a handful of ulps, which
// is far below every tolerance used downstream.
// ---------------------------------------------------------------------------

namespace detail {

// pi/2 and ln 2: the nearest double lies below the true value in both cases,
// so one ulp of headroom encloses them.
inline Interval half_pi() {
    const double h = 0x1.921fb54442d18p+0;
    return Interval(h, next_up(h));
}
inline Interval ln2() {
    const double h = 0x1.62e42fefa39efp-1;
    return Interval(h, next_up(h));
}

// cos on |r| <= 0.9, alternating series with tail bound
inline Interval cos_small(const Interval& r) {
    const Interval r2 = sqr(r);
    Interval term(1.0);
    Interval sum(1.0);
    // term_k = (-1)^k r^{2k} / (2k)!
    for (int k = 1; k <= 9; ++k) {
        term = term * r2 / Interval(double(2 * k - 1)) / Interval(double(2 * k));
        sum = (k & 1) ? sum - term : sum + term;
    }
    Interval tail = term * r2 / Interval(19.0) / Interval(20.0);
    double t = tail.mag();
    Interval out = sum + Interval(-t, t);
    return out.intersect(Interval(-1.0, 1.0));
}

inline Interval sin_small(const Interval& r) {
    const Interval r2 = sqr(r);
    Interval term = r;
    Interval sum = r;
    for (int k = 1; k <= 9; ++k) {
        term = term * r2 / Interval(double(2 * k)) / Interval(double(2 * k + 1));
        sum = (k & 1) ? sum - term : sum + term;
    }
    Interval tail = term * r2 / Interval(20.0) / Interval(21.0);
    double t = tail.mag();
    Interval out = sum + Interval(-t, t);
    return out.intersect(Interval(-1.0, 1.0));
}

// enclosure of cos(x) for a point argument
inline Interval cos_point(double x) {
    if (!std::isfinite(x)) return Interval(-1.0, 1.0);
    if (std::fabs(x) > 1e12) return Interval(-1.0, 1.0);
    const Interval hp = half_pi();
    double k = std::nearbyint(x / hp.mid());
    Interval r = Interval(x) - Interval(k) * hp;
    if (r.mag() > 0.9) return Interval(-1.0, 1.0);  // reduction failed, should not happen
    long long q = static_cast<long long>(k) % 4;
    if (q < 0) q += 4;
    switch (q) {
        case 0: return cos_small(r);
        case 1: return -sin_small(r);
        case 2: return -cos_small(r);
        default: return sin_small(r);
    }
}

inline Interval sin_point(double x) {
    if (!std::isfinite(x)) return Interval(-1.0, 1.0);
    if (std::fabs(x) > 1e12) return Interval(-1.0, 1.0);
    const Interval hp = half_pi();
    double k = std::nearbyint(x / hp.mid());
    Interval r = Interval(x) - Interval(k) * hp;
    if (r.mag() > 0.9) return Interval(-1.0, 1.0);
    long long q = static_cast<long long>(k) % 4;
    if (q < 0) q += 4;
    switch (q) {
        case 0: return sin_small(r);
        case 1: return cos_small(r);
        case 2: return -sin_small(r);
        default: return -cos_small(r);
    }
}

inline Interval exp_point(double x) {
    if (x > 709.0) return Interval(next_down(std::exp(709.0)), std::numeric_limits<double>::infinity());
    if (x < -745.0) return Interval(0.0, next_up(std::exp(-745.0)));
    const Interval l2 = ln2();
    double k = std::nearbyint(x / l2.mid());
    Interval r = Interval(x) - Interval(k) * l2;
    // |r| <= 0.35 + reduction slack
    Interval term(1.0), sum(1.0);
    for (int j = 1; j <= 13; ++j) {
        term = term * r / Interval(double(j));
        sum += term;
    }
    double t = next_up((term * r).mag() * 2.0 / 14.0);  // geometric tail, ratio < 1/2
    sum += Interval(-t, t);
    int ki = static_cast<int>(k);
    Interval out = widened(std::ldexp(sum.lo, ki), std::ldexp(sum.hi, ki));
    if (out.lo < 0.0) out.lo = 0.0;
    return out;
}

}  // namespace detail

inline Interval exp(const Interval& a) {
    return Interval(detail::exp_point(a.lo).lo, detail::exp_point(a.hi).hi);
}

namespace detail {

inline Interval pi() { return half_pi() * 2.0; }

// range of cos over [a,b]: endpoint enclosures plus any interior extremum k*pi
inline Interval cos_range(const Interval& x) {
    if (x.width() >= 6.2831854) return Interval(-1.0, 1.0);
    Interval out = cos_point(x.lo).hull_with(cos_point(x.hi));
    const Interval p = pi();
    double klo = std::floor(x.lo / p.hi) - 1.0;
    double khi = std::ceil(x.hi / p.lo) + 1.0;
    for (double k = klo; k <= khi; k += 1.0) {
        Interval crit = Interval(k) * p;
        if (crit.intersects(x)) {
            long long ki = static_cast<long long>(k);
            out = out.hull_with(Interval((ki % 2 == 0) ? 1.0 : -1.0));
        }
    }
    return out.intersect(Interval(-1.0, 1.0));
}

}  // namespace detail

inline Interval cos(const Interval& a) {
    if (a.is_point()) return detail::cos_point(a.lo);
    return detail::cos_range(a);
}

inline Interval sin(const Interval& a) {
    if (a.is_point()) return detail::sin_point(a.lo);
    // sin(x) = cos(x - pi/2)
    return detail::cos_range(a - detail::half_pi());
}

inline Interval pi_interval() { return detail::pi(); }
inline Interval two_pi_interval() { return detail::pi() * 2.0; }

// ---------------------------------------------------------------------------
// Bit-exact text round trip (hex floats), used by every on-disk format.
// ---------------------------------------------------------------------------

inline std::string hex_double(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", x);
    return std::string(buf);
}

inline double parse_hex_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw error("cannot parse float literal: " + s);
    return v;
}

inline std::string to_string(const Interval& a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", a.lo, a.hi);
    return std::string(buf);
}

}  // namespace vmel
