#include <doctest.h>

#include <vmel/interval.hpp>

#include <cmath>
#include <random>

using vmel::Interval;

namespace {

std::mt19937_64 rng(20240811);

double rand_double(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

Interval rand_interval(double lo, double hi) {
    double a = rand_double(lo, hi), b = rand_double(lo, hi);
    return Interval::hull(a, b);
}

}  // namespace

TEST_CASE("endpoint arithmetic") {
    Interval a(1, 2), b(3, 4);
    Interval s = a + b;
    CHECK(s.lo <= 4.0);
    CHECK(s.hi >= 6.0);
    CHECK(s.width() < 6.0 + 1e-14);

    Interval p = Interval(1, 2) * Interval(-1, 1);
    CHECK(p.contains(-2.0));
    CHECK(p.contains(2.0));
    CHECK(p.width() <= 4.0 + 1e-14);
}

TEST_CASE("cos at zero is one within 2 ulp") {
    Interval c = cos(Interval(0.0));
    CHECK(c.contains(1.0));
    CHECK(c.width() <= 2 * std::nextafter(1.0, 2.0) - 2.0);
}

TEST_CASE("division by interval containing zero is a hard error") {
    CHECK_THROWS_AS(Interval(1.0) / Interval(-1, 1), vmel::DivisionByZeroInterval);
    CHECK_THROWS_AS(vmel::sqrt(Interval(-1, 1)), vmel::DomainError);
}

TEST_CASE("containment fuzz: exact double results lie inside interval results") {
    for (int i = 0; i < 100000; ++i) {
        double x = rand_double(-10, 10), y = rand_double(-10, 10);
        Interval ix(x), iy(y);
        CHECK((ix + iy).contains(x + y));
        CHECK((ix - iy).contains(x - y));
        CHECK((ix * iy).contains(x * y));
        if (std::fabs(y) > 1e-6) CHECK((ix / iy).contains(x / y));
        CHECK(sqr(ix).contains(x * x));
        CHECK(cos(ix).contains(std::cos(x)));
        CHECK(sin(ix).contains(std::sin(x)));
        CHECK(exp(ix).contains(std::exp(x)));
        if (x > 0) CHECK(sqrt(ix).contains(std::sqrt(x)));
    }
}

TEST_CASE("monotonicity of enclosure for primitive ops") {
    for (int i = 0; i < 2000; ++i) {
        Interval a = rand_interval(-5, 5);
        Interval b = rand_interval(-5, 5);
        Interval a2(a.lo - rand_double(0, 1), a.hi + rand_double(0, 1));
        Interval b2(b.lo - rand_double(0, 1), b.hi + rand_double(0, 1));
        CHECK((a + b).subset_of(a2 + b2));
        CHECK((a - b).subset_of(a2 - b2));
        CHECK((a * b).subset_of(a2 * b2));
        CHECK(sqr(a).subset_of(sqr(a2)));
        CHECK(cos(a).subset_of(cos(a2)));
        CHECK(sin(a).subset_of(sin(a2)));
        CHECK(exp(a).subset_of(exp(a2)));
    }
}

TEST_CASE("cos range over wide intervals hits the extrema") {
    Interval c = cos(Interval(0.0, 3.2));
    CHECK(c.contains(-1.0));
    CHECK(c.contains(1.0));
    Interval s = sin(Interval(1.4, 1.8));
    CHECK(s.contains(1.0));
    CHECK(s.lo > 0.9);
}

TEST_CASE("pow_int via repeated squaring") {
    Interval p = vmel::pow_int(Interval(-2, 3), 2);
    CHECK(p.contains(0.0));
    CHECK(p.contains(9.0));
    CHECK(p.lo >= -1e-14);
    CHECK(vmel::pow_int(Interval(2.0), 10).contains(1024.0));
}

TEST_CASE("hex float round trip is bit exact") {
    for (int i = 0; i < 1000; ++i) {
        double x = rand_double(-1e8, 1e8) * std::pow(10.0, rand_double(-12, 12));
        CHECK(vmel::parse_hex_double(vmel::hex_double(x)) == x);
    }
}
