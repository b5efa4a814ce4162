// Acceptance suite: one pass/fail line per criterion, exit 0 only when all
// criteria hold.  Heavy stages run the same pipeline entry points as the
// CLI; oracle-based suites live here so they stay independent of the
// implementation paths they check.

#include <vmel/pipeline.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <cstdarg>
#include <random>

#include "support/oracles.hpp"

using namespace vmel;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int criteria_passed = 0;
int criteria_total = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
    ++criteria_total;
    if (pass) ++criteria_passed;
    std::printf("[%d/8] %-34s %s  %s\n", idx, name, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return std::string(buf);
}

Json scrub_timing(Json j) {
    j.erase("wall_ms");
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    std::string data_dir = "data";
    for (int i = 1; i + 1 < argc; ++i)
        if (std::strcmp(argv[i], "--data") == 0) data_dir = argv[i + 1];

    RunConfig base;
    try {
        base = load_config(data_dir + "/fish-run.json");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cannot load the reference run config: %s\n", e.what());
        return 1;
    }
    const std::string out_root = std::filesystem::temp_directory_path().string() + "/vmel-acceptance";
    std::filesystem::create_directories(out_root);

    // ---- criterion 1: NHIM constants reproduction --------------------------
    Json nhim1;
    try {
        Timer t;
        RunConfig cfg = base;
        cfg.threads = 1;
        nhim1 = cmd_verify_nhim(cfg);
        double L = parse_hex_double(nhim1["nhim"]["u"]["L"].get<std::string>());
        double M = parse_hex_double(nhim1["nhim"]["u"]["M"].get<std::string>());
        const double Lref = 6.278276608e-6, Mref = 1.1271e-3;
        bool pass = nhim1["pass"].get<bool>() && L <= 5 * Lref && L >= Lref / 5 && M <= 5 * Mref &&
                    M >= Mref / 5 && t.seconds() <= 120.0;
        report(1, "NHIM constants reproduction", pass,
               fmt("L=%.4e (ratio %.2f), M=%.4e (ratio %.2f), %.1f s", L, L / Lref, M, M / Mref,
                   t.seconds()));
    } catch (const std::exception& e) {
        report(1, "NHIM constants reproduction", false, e.what());
    }

    // ---- criterion 2: Melnikov-range proof ---------------------------------
    try {
        Timer t;
        RunConfig cfg = base;
        cfg.threads = 1;
        cfg.schedule.resize(1);  // the melnikov entry only
        ProveResult res = cmd_prove(cfg);
        const Json& cell = res.certificate["cells"][0];
        bool signs = cell["pass"].get<bool>() &&
                     cell["sign_pattern"].get<std::string>() == "mirrored";
        bool pass = res.pass && signs && t.seconds() <= 600.0;
        report(2, "Melnikov-range proof", pass,
               fmt("pattern=%s, clauses=%zu, %.1f s", cell["sign_pattern"].get<std::string>().c_str(),
                   cell["clauses"].size(), t.seconds()));
    } catch (const std::exception& e) {
        report(2, "Melnikov-range proof", false, e.what());
    }

    // ---- criteria 3 and 8: continuation and determinism --------------------
    Json cert_t1, cert_t8;
    try {
        Timer t;
        RunConfig cfg = base;
        cfg.threads = 1;
        cfg.out_dir = out_root + "/t1";
        ProveResult res = cmd_prove(cfg);
        write_outputs(cfg.out_dir, res.certificate, &res.rows);
        cert_t1 = res.certificate;
        int direct_pass = 0, direct_total = 0;
        for (const auto& cell : res.certificate["cells"])
            if (cell["mode"] == "direct") {
                ++direct_total;
                if (cell["pass"].get<bool>()) ++direct_pass;
            }
        bool pass = res.pass && direct_total == 90 && direct_pass == 90 && t.seconds() <= 1800.0;
        report(3, "Continuation over 90 cells", pass,
               fmt("%d/%d direct cells, %.1f s", direct_pass, direct_total, t.seconds()));
    } catch (const std::exception& e) {
        report(3, "Continuation over 90 cells", false, e.what());
    }

    // ---- criterion 4: integrator oracle equivalence ------------------------
    try {
        Timer t;
        std::mt19937_64 rng(20260808);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        int ok = 0;
        const int total = 50;
        for (int trial = 0; trial < total; ++trial) {
            std::size_t n = 2 + rng() % 3;
            oracles::DMat a = oracles::dmat(n);
            for (auto& row : a)
                for (auto& x : row) x = dist(rng);
            std::vector<std::string> names;
            for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
            ExprDag f(names);
            for (std::size_t i = 0; i < n; ++i) {
                NodeId acc = f.constant(0.0);
                for (std::size_t j = 0; j < n; ++j)
                    acc = f.add(acc, f.mul(f.constant(a[i][j]), f.var(static_cast<std::uint32_t>(j))));
                f.push_output(acc);
            }
            oracles::DVec x0(n);
            for (auto& v : x0) v = dist(rng);
            Box b{IVector(n)};
            for (std::size_t i = 0; i < n; ++i) b[i] = Interval(x0[i]);
            FlowJet end = integrate(f, seed_flow_jet(b, VariationalOrder::first), 1.0, StepControl{});
            oracles::DMat e = oracles::expm(a, 1.0);
            oracles::DVec xT = oracles::matvec(e, x0);
            bool good = true;
            IVector xh = end.state_hull();
            IMatrix dh = end.deriv_hull();
            for (std::size_t i = 0; i < n; ++i) {
                if (!xh[i].contains(xT[i])) good = false;
                for (std::size_t j = 0; j < n; ++j)
                    if (!dh(i, j).contains(e[i][j])) good = false;
            }
            if (good) ++ok;
        }
        report(4, "Integrator oracle equivalence", ok == total,
               fmt("%d/%d linear systems contained, %.1f s", ok, total, t.seconds()));
    } catch (const std::exception& e) {
        report(4, "Integrator oracle equivalence", false, e.what());
    }

    // ---- criterion 5: log-norm property suite ------------------------------
    try {
        Timer t;
        std::mt19937_64 rng(5150);
        std::uniform_real_distribution<double> dist(-2.0, 2.0);
        int ok = 0;
        const int total = 1000;
        const double h = 0.01;
        for (int trial = 0; trial < total; ++trial) {
            std::size_t n = 2 + rng() % 3;
            oracles::DMat a = oracles::dmat(n);
            IMatrix ia(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    a[i][j] = dist(rng);
                    ia(i, j) = Interval(a[i][j]);
                }
            double l = lognorm_upper(ia);
            double ml = ml_lower(ia);
            oracles::DMat e = oracles::expm(a, h);
            bool good = oracles::opnorm(e) <= std::exp(l * h) + 1e-9 &&
                        oracles::smallest_sv(e) >= std::exp(ml * h) - 1e-9 &&
                        ml == -lognorm_upper(-ia);
            if (good) ++ok;
        }
        report(5, "Log-norm property suite", ok == total,
               fmt("%d/%d matrices, h=%.2f, %.1f s", ok, total, h, t.seconds()));
    } catch (const std::exception& e) {
        report(5, "Log-norm property suite", false, e.what());
    }

    // ---- criterion 6: energy conservation ----------------------------------
    try {
        Timer t;
        ExprDag planar = parse_field({"x", "y"}, {"y", "x - sqr(x)"});
        Box b{IVector{Interval(1.5 - 1e-6, 1.5 + 1e-6), Interval(0.0)}};
        StepControl ctrl;
        FlowJet fj = seed_flow_jet(b, VariationalOrder::none);
        double worst = 0;
        for (int chunk = 1; chunk <= 80; ++chunk) {
            fj = integrate(planar, fj, 0.1 * chunk, ctrl);
            IVector x = fj.state_hull();
            worst = std::max(worst, example_energy(x[0], x[1]).mag());
        }
        report(6, "Energy conservation", worst <= 1e-4,
               fmt("sup |H| = %.3e over T=8, %.1f s", worst, t.seconds()));
    } catch (const std::exception& e) {
        report(6, "Energy conservation", false, e.what());
    }

    // ---- criterion 7: implicit-derivative residuals ------------------------
    try {
        Timer t;
        ProblemSpec p = load_problem(base.problem_path);
        RunConfig cfg = base;
        cfg.schedule.resize(1);
        ProblemSpec scoped = p;
        scoped.eps_range = cfg.schedule[0].eps;
        NhimStage su = run_nhim_branch(scoped, 'u', scoped.eps_range, cfg);
        NhimStage ss = run_nhim_branch(scoped, 's', scoped.eps_range, cfg);
        ManifoldChart cu = manifold_local_chart(scoped, 'u', su.verdict, su.m_raw);
        ManifoldChart cs = manifold_local_chart(scoped, 's', ss.verdict, ss.m_raw);
        StepControl ctrl = step_control(cfg, VariationalOrder::second);
        bool pass = true;
        std::string detail;
        for (const ManifoldChart* chart : {&cu, &cs}) {
            BranchEval be = eval_branch(*chart, scoped.eps_range, cfg.schedule[0].tau1,
                                        cfg.schedule[0].tau1, ctrl);
            // d/d eps g = g_eps + g_s kappa_eps and d/d tau g = -1 + g_s kappa_tau
            Interval res_eps = be.kd.g_eps + be.kd.g_s * be.kd.d_eps;
            Interval res_tau = Interval(-1.0) + be.kd.g_s * be.kd.d_tau;
            double in_w = std::max(be.kd.g_eps.width(), be.kd.g_s.width());
            bool good = res_eps.contains(0.0) && res_tau.contains(0.0) &&
                        res_eps.width() <= 10.0 * in_w && res_tau.width() <= 10.0 * in_w;
            pass = pass && good;
            if (chart == &cu)
                detail = fmt("res widths %.2e / %.2e vs inputs %.2e", res_eps.width(),
                             res_tau.width(), in_w);
        }
        report(7, "Implicit-derivative residuals", pass, detail + fmt(", %.1f s", t.seconds()));
    } catch (const std::exception& e) {
        report(7, "Implicit-derivative residuals", false, e.what());
    }

    // ---- criterion 8: determinism across thread counts ---------------------
    try {
        Timer t;
        RunConfig cfg = base;
        cfg.threads = 8;
        cfg.out_dir = out_root + "/t8";
        ProveResult res = cmd_prove(cfg);
        write_outputs(cfg.out_dir, res.certificate, &res.rows);
        cert_t8 = res.certificate;
        RunConfig cfg1 = base;
        cfg1.threads = 1;
        Json nhim_again = cmd_verify_nhim(cfg1);
        bool same_prove = !cert_t1.is_null() &&
                          scrub_timing(cert_t1).dump() == scrub_timing(cert_t8).dump();
        bool same_nhim = scrub_timing(nhim1).dump() == scrub_timing(nhim_again).dump();
        report(8, "Determinism across threads", same_prove && same_nhim,
               fmt("prove 1-thread vs 8-thread %s, verify-nhim rerun %s, %.1f s",
                   same_prove ? "identical" : "DIFFER", same_nhim ? "identical" : "DIFFER",
                   t.seconds()));
    } catch (const std::exception& e) {
        report(8, "Determinism across threads", false, e.what());
    }

    std::printf("acceptance: %d/%d criteria pass\n", criteria_passed, criteria_total);
    return criteria_passed == criteria_total ? 0 : 1;
}
