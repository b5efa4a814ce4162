#include <doctest.h>

#include <vmel/lognorm.hpp>

#include <random>

#include "support/oracles.hpp"

using namespace vmel;

namespace {
std::mt19937_64 rng(31337);
double rnd(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

IMatrix from_dense(const oracles::DMat& a) {
    IMatrix m(a.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j) m(i, j) = Interval(a[i][j]);
    return m;
}
}  // namespace

TEST_CASE("sym_eig_bounds on simple matrices") {
    IMatrix d(2, 2);
    d(0, 0) = Interval(-1);
    d(1, 1) = Interval(4);
    auto b = sym_eig_bounds(d);
    CHECK(b.lambda_min_lower <= -1.0);
    CHECK(b.lambda_min_lower > -1.0 - 1e-9);
    CHECK(b.lambda_max_upper >= 4.0);
    CHECK(b.lambda_max_upper < 4.0 + 1e-9);

    IMatrix j(2, 2);
    j(0, 1) = Interval(0.5);
    j(1, 0) = Interval(0.5);
    auto bj = sym_eig_bounds(j);
    CHECK(bj.lambda_min_lower <= -0.5);
    CHECK(bj.lambda_max_upper >= 0.5);
    CHECK(bj.lambda_max_upper < 0.5 + 1e-9);

    auto bz = sym_eig_bounds(IMatrix(3, 3));
    CHECK(bz.lambda_min_lower >= -1e-300);
    CHECK(bz.lambda_max_upper <= 1e-300);
}

TEST_CASE("lognorm_upper and ml_lower basics") {
    IMatrix negid = -IMatrix::identity(2);
    double l = lognorm_upper(negid);
    CHECK(l >= -1.0);
    CHECK(l < -1.0 + 1e-9);

    IMatrix nil(2, 2);
    nil(0, 1) = Interval(1.0);
    CHECK(lognorm_upper(nil) >= 0.5);
    CHECK(ml_lower(nil) <= -0.5);

    IMatrix d(2, 2);
    d(0, 0) = Interval(2);
    d(1, 1) = Interval(-3);
    CHECK(lognorm_upper(d) >= 2.0);
    CHECK(lognorm_upper(d) < 2.0 + 1e-9);
    CHECK(ml_lower(d) <= -3.0);
    CHECK(ml_lower(d) > -3.0 - 1e-9);

    CHECK(ml_lower(IMatrix::identity(4)) > 1.0 - 1e-9);
}

TEST_CASE("growth envelope") {
    Interval one(1.0);
    CHECK(growth_envelope(0.0, Interval(0, 5), one).contains(1.0));
    CHECK(growth_envelope(0.0, Interval(0, 5), one).width() < 1e-12);
    CHECK(growth_envelope(1.0, Interval(1), one).contains(std::exp(1.0)));
    CHECK(growth_envelope(-1.0, Interval(2), one).contains(std::exp(-2.0)));
}

TEST_CASE("log norm envelope property against matrix exponential") {
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 2 + rng() % 3;  // 2..4
        oracles::DMat a = oracles::dmat(n);
        for (auto& row : a)
            for (auto& x : row) x = rnd(-2, 2);
        IMatrix ia = from_dense(a);
        double l = lognorm_upper(ia);
        double m = ml_lower(ia);
        CHECK(m <= l);
        for (double h : {0.01, 0.1}) {
            oracles::DMat e = oracles::expm(a, h);
            CHECK(oracles::opnorm(e) <= std::exp(l * h) + 1e-9);
            CHECK(oracles::smallest_sv(e) >= std::exp(m * h) - 1e-9);
        }
    }
}

TEST_CASE("subadditivity of the log norm") {
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 2 + rng() % 3;
        IMatrix a(n, n), b(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                a(i, j) = Interval(rnd(-3, 3));
                b(i, j) = Interval(rnd(-3, 3));
            }
        // convexity gives l(A+B) <= l(A) + l(B) for the exact quantities;
        // our one-sided bounds keep it up to enclosure slack
        CHECK(lognorm_upper(a + b) <= lognorm_upper(a) + lognorm_upper(b) + 1e-7);
    }
}

TEST_CASE("ml equals minus lognorm of negation to the ulp") {
    for (int trial = 0; trial < 200; ++trial) {
        IMatrix a(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) a(i, j) = Interval(rnd(-5, 5));
        CHECK(ml_lower(a) == -lognorm_upper(-a));
    }
}
