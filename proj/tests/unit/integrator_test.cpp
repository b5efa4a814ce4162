#include <doctest.h>

#include <vmel/integrator.hpp>
#include <vmel/problem.hpp>

#include <random>

#include "support/oracles.hpp"

using namespace vmel;

namespace {
std::mt19937_64 rng(4242);
double rnd(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

ExprDag linear_field(const oracles::DMat& a) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < a.size(); ++i) names.push_back("x" + std::to_string(i));
    ExprDag f(names);
    for (std::size_t i = 0; i < a.size(); ++i) {
        NodeId acc = f.constant(0.0);
        for (std::size_t j = 0; j < a.size(); ++j)
            acc = f.add(acc, f.mul(f.constant(a[i][j]), f.var(static_cast<std::uint32_t>(j))));
        f.push_output(acc);
    }
    return f;
}
}  // namespace

TEST_CASE("rough enclosure basics") {
    ExprDag zero = parse_field({"x", "y"}, {"0", "0"});
    IVector b{Interval(1, 2), Interval(-1, 1)};
    IVector y = rough_enclosure(zero, b, 1.0);
    CHECK(y[0].subset_of(Interval(1 - 1e-9, 2 + 1e-9)));

    ExprDag expg = parse_field({"x"}, {"x"});
    IVector y2 = rough_enclosure(expg, IVector{Interval(1.0)}, 0.1);
    CHECK(y2[0].lo >= 0.9);
    CHECK(y2[0].hi <= 1.2);

    ExprDag blow = parse_field({"x"}, {"sqr(x)"});
    CHECK_THROWS_AS(rough_enclosure(blow, IVector{Interval(100.0)}, 1.0), TooLarge);
}

TEST_CASE("exponential growth to e") {
    ExprDag f = parse_field({"x"}, {"x"});
    StepControl ctrl;
    ctrl.order = 10;
    FlowJet fj = seed_flow_jet(Box(IVector{Interval(1.0)}), VariationalOrder::second);
    FlowJet end = integrate(f, fj, 1.0, ctrl);
    IVector x = end.state_hull();
    CHECK(x[0].contains(std::exp(1.0)));
    CHECK(x[0].width() < 1e-8);
    CHECK(end.time.contains(1.0));
    CHECK(end.deriv_hull()(0, 0).contains(std::exp(1.0)));
    CHECK(end.hess_slice_hull(0, 0)[0].mag() < 1e-10);
}

TEST_CASE("harmonic oscillator over a full period") {
    ExprDag f = parse_field({"x", "y"}, {"y", "-x"});
    StepControl ctrl;
    ctrl.order = 12;
    FlowJet fj = seed_flow_jet(Box(IVector{Interval(1.0), Interval(0.0)}), VariationalOrder::second);
    double period = 2.0 * vmel::pi_interval().mid();
    FlowJet end = integrate(f, fj, period, ctrl);
    IVector x = end.state_hull();
    CHECK(x[0].contains(1.0 - 1e-9) == false);  // tight enclosure near 1
    CHECK(std::fabs(x[0].mid() - 1.0) < 1e-7);
    CHECK(x[1].mag() < 1e-7);
    IMatrix d = end.deriv_hull();
    CHECK(std::fabs(d(0, 0).mid() - 1.0) < 1e-6);
    CHECK(d(0, 1).mag() < 1e-6);
}

TEST_CASE("linear systems against the matrix exponential oracle") {
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 2 + rng() % 3;
        oracles::DMat a = oracles::dmat(n);
        for (auto& row : a)
            for (auto& x : row) x = rnd(-1.0, 1.0);
        ExprDag f = linear_field(a);
        oracles::DMat e = oracles::expm(a, 1.0);
        oracles::DVec x0(n);
        for (auto& v : x0) v = rnd(-1, 1);

        Box b{IVector(n)};
        for (std::size_t i = 0; i < n; ++i) b[i] = Interval(x0[i]);
        StepControl ctrl;
        FlowJet end = integrate(f, seed_flow_jet(b, VariationalOrder::second), 1.0, ctrl);

        oracles::DVec xT = oracles::matvec(e, x0);
        IVector xh = end.state_hull();
        IMatrix dh = end.deriv_hull();
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(xh[i].contains(xT[i]));
            for (std::size_t j = 0; j < n; ++j) CHECK(dh(i, j).contains(e[i][j]));
        }
        for (std::size_t a2 = 0; a2 < n; ++a2)
            for (std::size_t b2 = a2; b2 < n; ++b2)
                CHECK(end.hess_slice_hull(a2, b2).max_width() < 1e-8);
    }
}

TEST_CASE("containment regression on the forced example system") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    Box b{IVector{Interval(1.49, 1.51), Interval(0.0, 1e-3), Interval(0.2, 0.21), Interval(0.3, 0.31)}};
    b.topo[2] = CoordTopology{true, 6.283185307179586};
    StepControl ctrl;
    FlowJet end = integrate(p.ambient, seed_flow_jet(b, VariationalOrder::second), 2.0, ctrl);

    auto rhs = [&](const oracles::DVec& v) {
        return oracles::DVec{v[3] - v[1] * std::cos(v[2]) * v[3] * v[3], 0.0, 1.0, v[0] - v[0] * v[0]};
    };
    for (int s = 0; s < 60; ++s) {
        oracles::DVec x0{rnd(1.49, 1.51), rnd(0.0, 1e-3), rnd(0.2, 0.21), rnd(0.3, 0.31)};
        oracles::DVec xT = oracles::rk4(rhs, x0, 2.0, 4000);
        IVector xh = end.state_hull();
        for (std::size_t i = 0; i < 4; ++i) CHECK(xh[i].contains(xT[i]));
    }
    IMatrix dh = end.deriv_hull();
    const double step = 1e-6;
    oracles::DVec base{1.5, 5e-4, 0.205, 0.305};
    oracles::DVec fT = oracles::rk4(rhs, base, 2.0, 4000);
    for (std::size_t j = 0; j < 4; ++j) {
        oracles::DVec pert = base;
        pert[j] += step;
        oracles::DVec gT = oracles::rk4(rhs, pert, 2.0, 4000);
        for (std::size_t i = 0; i < 4; ++i) {
            double fd = (gT[i] - fT[i]) / step;
            CHECK(dh(i, j).lo - 1e-3 <= fd);
            CHECK(fd <= dh(i, j).hi + 1e-3);
        }
    }
    // second derivative sample: d2(x)/d(eps d t) by central differences
    auto flow_x = [&](double eps, double t0) {
        oracles::DVec x0{1.5, eps, t0, 0.305};
        return oracles::rk4(rhs, x0, 2.0, 4000)[0];
    };
    double fd2 = (flow_x(5e-4 + step, 0.205 + step) - flow_x(5e-4 + step, 0.205 - step) -
                  flow_x(5e-4 - step, 0.205 + step) + flow_x(5e-4 - step, 0.205 - step)) /
                 (4 * step * step);
    // the hull here is over a box, widen the comparison accordingly
    Interval h12 = end.hess_slice_hull(1, 2)[0];
    CHECK(h12.lo - 2e-2 <= fd2);
    CHECK(fd2 <= h12.hi + 2e-2);
}

TEST_CASE("semigroup containment") {
    ExprDag f = parse_field({"x", "y"}, {"y", "x - sqr(x)"});
    Box b{IVector{Interval(0.35, 0.351), Interval(0.0, 0.001)}};
    StepControl ctrl;
    FlowJet whole = integrate(f, seed_flow_jet(b, VariationalOrder::first), 1.5, ctrl);
    FlowJet part = integrate(f, seed_flow_jet(b, VariationalOrder::first), 0.7, ctrl);
    FlowJet rest = integrate(f, seed_flow_jet(Box(part.state_hull()), VariationalOrder::first), 0.8, ctrl);
    IVector xw = whole.state_hull();
    IVector xr = rest.state_hull();
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(xw[i].intersects(xr[i]));
        CHECK(xw[i].width() <= xr[i].width() * 1.5 + 1e-12);
    }
}

TEST_CASE("energy stays on the homoclinic level set") {
    ExprDag planar = parse_field({"x", "y"}, {"y", "x - sqr(x)"});
    Box b{IVector{Interval(1.5 - 1e-6, 1.5 + 1e-6), Interval(0.0)}};
    StepControl ctrl;
    FlowJet fj = seed_flow_jet(b, VariationalOrder::none);
    FlowJet end = integrate(planar, fj, 8.0, ctrl);
    IVector x = end.state_hull();
    Interval H = example_energy(x[0], x[1]);
    CHECK(H.mag() <= 1e-4);
    CHECK(H.contains(0.0));
}

TEST_CASE("step floor is reported when no step can be verified") {
    ExprDag blow = parse_field({"x"}, {"sqr(x)"});
    StepControl ctrl;
    ctrl.h_min = 1e-3;
    FlowJet fj = seed_flow_jet(Box(IVector{Interval(1e8)}), VariationalOrder::none);
    CHECK_THROWS_AS(integrate(blow, fj, 1.0, ctrl), StepFloor);
}
