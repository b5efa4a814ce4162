#include <doctest.h>

#include <vmel/problem.hpp>
#include <vmel/problem_io.hpp>

#include <random>

using namespace vmel;

namespace {
std::mt19937_64 rng(60902);
double rnd(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}
}  // namespace

TEST_CASE("power matching reproduces the published seed coefficients") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    REQUIRE(p.seed.k2.size() == 4);
    CHECK(p.seed.k2[2].contains(-1.0 / 6.0));
    CHECK(p.seed.k2[2].width() < 1e-14);
    CHECK(p.seed.k2[3].contains(-1.0 / 12.0));
    CHECK(p.seed.r[1].contains(1.0));
    CHECK(p.seed.r[2].contains(-0.5));
    CHECK(p.seed.r[3].contains(-1.0 / 6.0));
}

TEST_CASE("power matching on a purely linear field gives the identity embedding") {
    ExprDag lin = parse_field({"u", "v"}, {"2*u", "-3*v"});
    ParamSeed seed = param_method_seed(lin, 5);
    for (std::size_t i = 2; i < seed.k2.size(); ++i) CHECK(seed.k2[i].mag() < 1e-14);
    CHECK(seed.r[1].contains(2.0));
    for (std::size_t i = 2; i < seed.r.size(); ++i) CHECK(seed.r[i].mag() < 1e-14);
}

TEST_CASE("seed residual is high order in the fiber coordinate") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    for (double r : {1e-2, 1e-3}) {
        for (double s : {-r, -0.5 * r, 0.5 * r, r}) {
            IVector res = param_seed_residual(p.diag2d, p.seed, Interval(s));
            // order 3 seed: residual O(r^4) at sampled points
            CHECK(res[0].mag() <= 10.0 * r * r * r * r);
            CHECK(res[1].mag() <= 10.0 * r * r * r * r);
        }
        // containment form over the whole interval still encloses zero
        IVector span = param_seed_residual(p.diag2d, p.seed, Interval(-r, r));
        CHECK(span[0].contains(0.0));
        CHECK(span[1].contains(0.0));
    }
}

TEST_CASE("resonance obstruction") {
    // unstable eigenvalue 1, stable eigenvalue 2: divisor d*1-2 vanishes at d=2
    ExprDag bad = parse_field({"u", "v"}, {"u + sqr(u)", "2*v + sqr(u)"});
    CHECK_THROWS_AS(param_method_seed(bad, 3), ResonanceObstruction);
}

TEST_CASE("local fields agree with the conjugated ambient field") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    // pushforward check: C Dpsi f_local(z) == f_ambient(C psi(z)) on samples
    auto check_branch = [&](const BranchFrame& b, bool reversed) {
        for (int trial = 0; trial < 20; ++trial) {
            IVector z{Interval(rnd(-2e-4, 2e-4)), Interval(rnd(0, 1e-3)), Interval(rnd(0, 6.28)),
                      Interval(rnd(-1e-6, 1e-6))};
            Jet2 psi = eval_jet2_seeded(b.psi, identity_jet(z));
            IVector ambient_pt = b.linear * psi.value;
            IVector f_amb = p.ambient.eval(ambient_pt);
            if (reversed)
                for (std::size_t i = 0; i < 4; ++i) f_amb[i] = -f_amb[i];
            IVector lhs = b.linear * (psi.jacobian * b.local_field.eval(z));
            for (std::size_t i = 0; i < 4; ++i) CHECK(lhs[i].intersects(f_amb[i]));
        }
    };
    check_branch(p.unstable, false);
    check_branch(p.stable, true);
}

TEST_CASE("coordinate changes invert") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    IMatrix prod = p.unstable.linear * p.unstable.linear_inv;
    CHECK(prod.contains(IMatrix::identity(4)));
    CHECK(prod.max_width() < 1e-14);
    for (int trial = 0; trial < 10; ++trial) {
        IVector z{Interval(rnd(-1e-3, 1e-3)), Interval(rnd(0, 1e-3)), Interval(rnd(0, 6.0)),
                  Interval(rnd(-1e-3, 1e-3))};
        IVector round = p.unstable.psi_inv.eval(p.unstable.psi.eval(z));
        for (std::size_t i = 0; i < 4; ++i) CHECK(round[i].contains(z[i].mid()));
    }
}

TEST_CASE("local field fixes the center circle") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    IVector at0{Interval(0.0), Interval(0.0, 1e-3), Interval(0.0, 6.29), Interval(0.0)};
    IVector f = p.unstable.local_field.eval(at0);
    CHECK(f[0].mag() < 1e-12);   // xb' = 0 on the circle
    CHECK(f[3].mag() < 1e-12);   // yb' = 0 on the circle
    CHECK(f[2].contains(1.0));
}

TEST_CASE("ambient field at eps zero is the planar system") {
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    IVector z{Interval(0.3), Interval(0.0), Interval(1.2), Interval(0.4)};
    IVector f = p.ambient.eval(z);
    CHECK(f[0].contains(0.4));
    CHECK(f[3].contains(0.3 - 0.09));
}

TEST_CASE("reversing symmetry transport") {
    // apex of the level set is fixed by S
    IVector apex{Interval(1.5), Interval(0.0)};
    IVector img = symmetry_transport(apex);
    CHECK(img[0].contains(1.5));
    CHECK(img[1].contains(0.0));
    // double transport is the identity
    IVector pt{Interval(0.3), Interval(-0.7)};
    IVector twice = symmetry_transport(symmetry_transport(pt));
    CHECK(twice[0].lo == pt[0].lo);
    CHECK(twice[1].lo == pt[1].lo);
    // stable parameterization is the S image of the unstable one
    ProblemSpec p = build_example(Interval(0.0, 1e-3), 2e-4);
    for (double xi : {-1e-4, 5e-5, 2e-4}) {
        Interval k2 = poly_eval(p.seed.k2, Interval(xi));
        // unstable curve point in ambient planar coordinates via C
        IVector wu{Interval(xi) - k2, Interval(xi) + k2};
        IVector ws = symmetry_transport(wu);
        // C-bar (xi, -K2) = (xi - K2 ... ) reversed sign pattern
        IVector expected{Interval(xi) - k2, -(Interval(xi) + k2)};
        CHECK(ws[0].intersects(expected[0]));
        CHECK(ws[1].intersects(expected[1]));
    }
}

TEST_CASE("homoclinic energy stays small along the flow") {
    Interval H = example_energy(Interval(1.5), Interval(0.0));
    CHECK(H.contains(0.0));
    CHECK(H.mag() < 5e-15);
}

TEST_CASE("fixture round trip matches the builder") {
    ProblemSpec built = build_example(Interval(0.0, 1e-2), 2e-4);
    Json j = problem_to_json(built);
    ProblemSpec loaded = problem_from_json(j);
    // identical serialized text after a round trip
    CHECK(problem_to_json(loaded).dump() == j.dump());
    // identical field evaluations
    IVector z{Interval(1e-4), Interval(5e-4), Interval(2.0), Interval(1e-6)};
    IVector a = built.unstable.local_field.eval(z);
    IVector b = loaded.unstable.local_field.eval(z);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(a[i].lo == b[i].lo);
        CHECK(a[i].hi == b[i].hi);
    }
}

TEST_CASE("shipped fixture stays in sync with the builder") {
    Json shipped = load_json_file(std::string(VMEL_SOURCE_DIR) + "/data/fish-problem.json");
    ProblemSpec built = build_example(Interval(0.0, 1e-2), 2e-4);
    CHECK(problem_to_json(built).dump() == shipped.dump());
}
