#include <doctest.h>

#include <vmel/newton.hpp>

using namespace vmel;

TEST_CASE("interval newton encloses sqrt roots") {
    for (double c : {2.0, 3.0, 5.0}) {
        auto f = [c](const Interval& y) { return sqr(y) - c; };
        auto df = [](const Interval& y) { return 2.0 * y; };
        auto r = interval_newton_1d(f, df, Interval(1, 3));
        REQUIRE(r.has_value());
        CHECK(r->contains(std::sqrt(c)));
        CHECK(r->width() < 1e-10);
        CHECK(r->strictly_inside(Interval(1, 3)));
    }
}

TEST_CASE("linear identity contracts to zero") {
    auto f = [](const Interval& y) { return y; };
    auto df = [](const Interval&) { return Interval(1.0); };
    auto r = interval_newton_1d(f, df, Interval(-1, 1));
    REQUIRE(r.has_value());
    CHECK(r->contains(0.0));
    CHECK(r->width() < 1e-14);
}

TEST_CASE("no real root gives no contraction") {
    auto f = [](const Interval& y) { return sqr(y) + 1.0; };
    auto df = [](const Interval& y) { return 2.0 * y; };
    auto r = interval_newton_1d(f, df, Interval(-1, 1));
    CHECK(!r.has_value());
}

TEST_CASE("two dimensional newton") {
    // solve x^2 + y^2 = 4, x = y  ->  (sqrt 2, sqrt 2)
    auto f = [](const IVector& v) {
        return IVector{sqr(v[0]) + sqr(v[1]) - 4.0, v[0] - v[1]};
    };
    auto dfy = [](const IVector& v) {
        IMatrix m(2, 2);
        m(0, 0) = 2.0 * v[0];
        m(0, 1) = 2.0 * v[1];
        m(1, 0) = Interval(1.0);
        m(1, 1) = Interval(-1.0);
        return m;
    };
    IVector Y{Interval(1, 2), Interval(1, 2)};
    auto r = interval_newton(f, dfy, Y.mid(), Y);
    REQUIRE(r.has_value());
    CHECK((*r)[0].contains(std::sqrt(2.0)));
    CHECK((*r)[1].contains(std::sqrt(2.0)));
    CHECK((*r)[0].width() < 1e-9);
}
