#pragma once

// Batch proof pipeline: domain setup, the manifold verification stage, the
// per-cell Melnikov and direct verifications, deterministic parallel cell
// execution, certificates and plot data.

#include <vmel/config.hpp>
#include <vmel/melnikov.hpp>
#include <vmel/problem_io.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

namespace vmel {

inline StepControl step_control(const RunConfig& cfg, VariationalOrder vo) {
    StepControl s;
    s.order = cfg.order;
    s.tolerance = cfg.tolerance;
    s.h_min = cfg.h_min;
    s.h_max = cfg.h_max;
    s.variational = vo;
    return s;
}

inline DomainSpec make_domain(const ProblemSpec& p, const Interval& eps_range, double L,
                              const RunConfig& cfg) {
    DomainSpec d;
    double period = 0.0;
    std::size_t angle_index = 0, param_index = 0;
    // center block: the parameter coordinate and the periodic angle
    for (std::size_t i = 0; i < p.topology.size(); ++i)
        if (p.topology[i].periodic) {
            period = p.topology[i].period;
            angle_index = i;
        }
    for (std::size_t i = 0; i < p.coords.size(); ++i)
        if (p.coords[i] == "eps") param_index = i;
    d.center = {CenterCoord{param_index, eps_range, false, 0.0},
                CenterCoord{angle_index, Interval(0.0, next_up(period)), true, period}};
    d.unstable = {0};
    d.stable = {p.section.coordinate};
    d.unstable_radius = p.fiber_radius;
    d.stable_radius = p.fiber_radius * L;
    d.chart_radius = cfg.chart_radius;
    d.slope = L;
    d.cone = cfg.cone;
    d.partition.assign(p.dim(), 1);
    d.partition[0] = cfg.subdivisions_unstable;
    d.partition[param_index] = cfg.subdivisions_param;
    d.partition[angle_index] = cfg.subdivisions_angle;
    d.partition[p.section.coordinate] = cfg.subdivisions_stable;
    return d;
}

struct NhimStage {
    char branch = 'u';
    NhimVerdict verdict;
    SecondDerivConstants sd;
    double m_raw = 0.0;
    std::vector<Clause> clauses;
    bool pass = false;
};

inline Json nhim_stage_json(const NhimStage& st, const Interval& eps_range) {
    Json j;
    j["branch"] = std::string(1, st.branch);
    j["eps_range"] = json_interval(eps_range);
    j["L"] = hex_double(st.verdict.L);
    j["M"] = hex_double(st.m_raw);
    j["rates"] = {{"mu_s1", hex_double(st.verdict.rates.mu_s1)},
                  {"mu_s2", hex_double(st.verdict.rates.mu_s2)},
                  {"xi_u1", hex_double(st.verdict.rates.xi_u1)},
                  {"xi_u1P", hex_double(st.verdict.rates.xi_u1P)},
                  {"mu_cs1", hex_double(st.verdict.rates.mu_cs1)},
                  {"mu_cs2", hex_double(st.verdict.rates.mu_cs2)},
                  {"xi_cu1", hex_double(st.verdict.rates.xi_cu1)},
                  {"xi_cu1P", hex_double(st.verdict.rates.xi_cu1P)}};
    j["second_derivative"] = {{"C_x", hex_double(st.sd.C_x)},
                              {"C_y", hex_double(st.sd.C_y)},
                              {"C_y1", hex_double(st.sd.C_y1)},
                              {"C_y2", hex_double(st.sd.C_y2)},
                              {"C_y3", hex_double(st.sd.C_y3)},
                              {"xi", hex_double(st.sd.xi)},
                              {"mu1", hex_double(st.sd.mu1)},
                              {"mu2", hex_double(st.sd.mu2)},
                              {"formula", st.sd.improved_formula ? "improved" : "general"}};
    j["clauses"] = clauses_to_json(st.clauses);
    j["frame"] = "stable block in units of R_s/R";
    j["implied"] = Json::array({"backward cone conditions follow from the rate conditions",
                                "covering conditions follow from the isolating block",
                                "parameter coordinate has boundary, invariant since eps' = 0"});
    j["pass"] = st.pass;
    return j;
}

// rate-condition and curvature stage for one branch over an eps range
inline NhimStage run_nhim_branch(const ProblemSpec& p, char branch, const Interval& eps_range,
                                 const RunConfig& cfg) {
    NhimStage st;
    st.branch = branch;
    const ExprDag& field = (branch == 'u') ? p.unstable.local_field : p.stable.local_field;
    auto factory = [&](double L) { return make_domain(p, eps_range, L, cfg); };
    st.verdict = auto_L(field, factory, cfg.L_max, cfg.rate_order);
    DomainSpec dom = factory(st.verdict.L);
    st.sd = second_deriv_bound(field, dom, dom.cone, SlopeMode::graph);
    st.m_raw = (Interval(st.verdict.L) * Interval(st.sd.M_bound)).hi;

    const RateConstants& rc = st.verdict.rates;
    st.clauses.push_back(Clause::less("mu_s1 < 0", Interval(rc.mu_s1), 0.0));
    st.clauses.push_back(Clause::greater("xi_u1P > 0", Interval(rc.xi_u1P), 0.0));
    st.clauses.push_back(Clause::less("mu_cs1 < xi_u1P", Interval(rc.mu_cs1), rc.xi_u1P));
    st.clauses.push_back(Clause::less("mu_s1 < xi_cu1P", Interval(rc.mu_s1), rc.xi_cu1P));
    for (int k = 1; k <= cfg.rate_order; ++k)
        st.clauses.push_back(Clause::less("mu_s2 < " + std::to_string(k + 1) + " xi_cu1",
                                          Interval(rc.mu_s2),
                                          (Interval(double(k + 1)) * Interval(rc.xi_cu1)).lo));
    st.clauses.push_back(Clause::less("mu_cs2 < xi_u1", Interval(rc.mu_cs2), rc.xi_u1));
    st.clauses.push_back(
        Clause::less("slope: mu1(cone) < xi(cone)", Interval(st.verdict.slope.mu1), st.verdict.slope.xi));
    st.clauses.push_back(Clause::greater("isolating block faces strict",
                                         Interval(st.verdict.block.pass ? 1.0 : -1.0), 0.0));
    st.clauses.push_back(Clause::less("curvature hypothesis mu1 < xi", Interval(st.sd.mu1), st.sd.xi));
    st.clauses.push_back(Clause::less("curvature hypothesis mu2 < 2 xi", Interval(st.sd.mu2),
                                      (Interval(2.0) * Interval(st.sd.xi)).lo));
    st.pass = st.verdict.pass && all_hold(st.clauses);
    return st;
}

struct CsvRow {
    double tau_lo = 0, tau_hi = 0;
    std::string quantity;
    Interval value;
    std::string branch;
    Interval eps;
};

struct CellOutcome {
    std::string mode;
    Interval eps;
    std::vector<Clause> clauses;
    std::vector<CsvRow> rows;
    std::string sign_pattern;
    std::string failure;  // empty unless the computation itself failed
    bool pass = false;

    Json to_json() const {
        Json j;
        j["mode"] = mode;
        j["eps"] = json_interval(eps);
        if (!sign_pattern.empty()) j["sign_pattern"] = sign_pattern;
        j["clauses"] = clauses_to_json(clauses);
        if (!failure.empty()) j["failure"] = failure;
        j["pass"] = pass;
        return j;
    }
};

namespace detail {

inline void record_bracket(std::vector<Clause>& cs, const std::string& tag, const BranchEval& be) {
    cs.push_back(Clause::greater(tag + " bracket monotone", be.kd.g_s, 0.0));
}

}  // namespace detail

// Melnikov regime over one eps cell containing zero: sign-definite
// d delta/d eps of opposite signs at tau1, tau2 and a sign-definite mixed
// partial over the whole [tau1, tau2] grid.
inline CellOutcome run_melnikov_cell(const ManifoldChart& cu, const ManifoldChart& cs,
                                     const ScheduleEntry& entry, const RunConfig& cfg) {
    CellOutcome out;
    out.mode = "melnikov";
    out.eps = entry.eps;
    if (entry.eps.lo > 0.0) {
        out.failure = "melnikov cell must contain eps = 0";
        return out;
    }
    StepControl ctrl = step_control(cfg, VariationalOrder::second);
    KappaSolveOptions opt{cfg.kappa_margin, cfg.kappa_tol, 6};

    auto both = [&](double t_lo, double t_hi) {
        BranchEval u = eval_branch(cu, entry.eps, t_lo, t_hi, ctrl, opt);
        BranchEval s = eval_branch(cs, entry.eps, t_lo, t_hi, ctrl, opt);
        return std::make_pair(u, s);
    };

    auto [u1, s1] = both(entry.tau1, entry.tau1);
    auto [u2, s2] = both(entry.tau2, entry.tau2);
    DeltaBounds at1 = delta_from_branches(u1, s1, entry.eps, entry.tau1, entry.tau1, true);
    DeltaBounds at2 = delta_from_branches(u2, s2, entry.eps, entry.tau2, entry.tau2, true);

    for (const auto* pt : {&u1, &s1})
        out.rows.push_back(CsvRow{entry.tau1, entry.tau1, "d_eps_p", pt->d_eps_x,
                                  pt == &u1 ? "u" : "s", entry.eps});
    for (const auto* pt : {&u2, &s2})
        out.rows.push_back(CsvRow{entry.tau2, entry.tau2, "d_eps_p", pt->d_eps_x,
                                  pt == &u2 ? "u" : "s", entry.eps});
    out.rows.push_back(CsvRow{entry.tau1, entry.tau1, "d_eps_delta", at1.d_eps, "delta", entry.eps});
    out.rows.push_back(CsvRow{entry.tau2, entry.tau2, "d_eps_delta", at2.d_eps, "delta", entry.eps});

    // mixed partial over the tau grid
    const int grid = std::max(1, entry.grid);
    std::vector<DeltaBounds> mixed_cells;
    std::vector<Clause> bracket_clauses;
    detail::record_bracket(bracket_clauses, "u tau1", u1);
    detail::record_bracket(bracket_clauses, "s tau1", s1);
    detail::record_bracket(bracket_clauses, "u tau2", u2);
    detail::record_bracket(bracket_clauses, "s tau2", s2);
    for (int g = 0; g < grid; ++g) {
        double ta = entry.tau1 + (entry.tau2 - entry.tau1) * g / grid;
        double tb = entry.tau1 + (entry.tau2 - entry.tau1) * (g + 1) / grid;
        auto [u, s] = both(ta, tb);
        mixed_cells.push_back(delta_from_branches(u, s, entry.eps, ta, tb, true));
        std::string tag = "mixed[" + std::to_string(g) + "]";
        detail::record_bracket(bracket_clauses, "u " + tag, u);
        detail::record_bracket(bracket_clauses, "s " + tag, s);
        out.rows.push_back(CsvRow{ta, tb, "mixed_p", u.mixed_x, "u", entry.eps});
        out.rows.push_back(CsvRow{ta, tb, "mixed_p", s.mixed_x, "s", entry.eps});
        out.rows.push_back(CsvRow{ta, tb, "mixed_delta", mixed_cells.back().d2_tau_eps, "delta", entry.eps});
    }

    TransversalityCertificate cert = verify_theorem_main(at1, at2, mixed_cells);
    out.sign_pattern = cert.sign_pattern;
    out.clauses = cert.clauses;
    out.clauses.insert(out.clauses.end(), bracket_clauses.begin(), bracket_clauses.end());
    out.pass = cert.pass && all_hold(out.clauses);
    return out;
}

// Direct regime over one eps cell away from zero: delta changes sign across
// the tau window and d delta/d tau is sign definite on it.
inline CellOutcome run_direct_cell(const ManifoldChart& cu, const ManifoldChart& cs,
                                   const Interval& eps_cell, const ScheduleEntry& entry,
                                   const RunConfig& cfg) {
    CellOutcome out;
    out.mode = "direct";
    out.eps = eps_cell;
    StepControl c1 = step_control(cfg, VariationalOrder::first);
    StepControl c0 = step_control(cfg, VariationalOrder::none);
    KappaSolveOptions opt{cfg.kappa_margin, cfg.kappa_tol, 6};

    // midpoint scan for the crossing window: sample the section traces
    // (pi_s h mod 2pi, pi_x h) of both branches over one period of s and
    // locate the zero of the interpolated gap; the branches arrive on
    // different time lifts, so the comparison happens on the circle.  The
    // proof never depends on the scan.
    Interval eps_mid(eps_cell.mid());
    const double two_pi = 6.283185307179586;
    auto curve = [&](const ManifoldChart& c) {
        std::vector<std::pair<double, double>> pts;  // (tau mod 2pi, x)
        for (int k = -4; k <= 4; ++k) {
            CrossingJet h = h_map(c, eps_mid, Interval(k * 0.9), c0);
            double tau = std::fmod(h.pi_s().mid(), two_pi);
            if (tau < 0) tau += two_pi;
            pts.emplace_back(tau, h.point[0].mid());
        }
        std::sort(pts.begin(), pts.end());
        // wrap padding so interpolation covers the whole circle
        auto first = pts.front(), last = pts.back();
        pts.insert(pts.begin(), {last.first - two_pi, last.second});
        pts.push_back({first.first + two_pi, first.second});
        return pts;
    };
    auto cu_pts = curve(cu);
    auto cs_pts = curve(cs);
    auto interp = [](const std::vector<std::pair<double, double>>& pts, double tau) {
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i - 1].first <= tau && tau <= pts[i].first) {
                double w = (tau - pts[i - 1].first) / (pts[i].first - pts[i - 1].first);
                return pts[i - 1].second * (1 - w) + pts[i].second * w;
            }
        return pts.back().second;
    };
    double tau_star = 0.5 * two_pi;
    double prev_tau = 0.0, prev_delta = interp(cu_pts, 0.0) - interp(cs_pts, 0.0);
    double best_gap = std::fabs(prev_delta);
    for (double t = 0.0; t < two_pi; t += 0.05) {
        double d = interp(cu_pts, t) - interp(cs_pts, t);
        if (d == 0.0 || (d < 0) != (prev_delta < 0)) {
            tau_star = 0.5 * (prev_tau + t);
            break;
        }
        if (std::fabs(d) < best_gap) {
            best_gap = std::fabs(d);
            tau_star = t;
        }
        prev_tau = t;
        prev_delta = d;
    }
    // secant refinement of the scanned zero
    {
        auto delta_est = [&](double tau) {
            StepControl cc = c0;
            KappaSolveOptions fast{0.3, 1e-3, 4};
            BranchEval u = eval_branch(cu, eps_mid, tau, tau, cc, fast);
            BranchEval s = eval_branch(cs, eps_mid, tau, tau, cc, fast);
            return u.H.point[0].mid() - s.H.point[0].mid();
        };
        double t1 = tau_star - 0.05, t2 = tau_star + 0.05;
        double d1 = delta_est(t1), d2 = delta_est(t2);
        if (d1 != d2) {
            double t3 = t1 - d1 * (t2 - t1) / (d2 - d1);
            if (std::fabs(t3 - tau_star) < 1.0) tau_star = t3;
        }
    }
    double tau_lo = tau_star - entry.window_halfwidth;
    double tau_hi = tau_star + entry.window_halfwidth;

    BranchEval ul = eval_branch(cu, eps_cell, tau_lo, tau_lo, c1, opt);
    BranchEval sl = eval_branch(cs, eps_cell, tau_lo, tau_lo, c1, opt);
    BranchEval uh = eval_branch(cu, eps_cell, tau_hi, tau_hi, c1, opt);
    BranchEval sh = eval_branch(cs, eps_cell, tau_hi, tau_hi, c1, opt);
    BranchEval uw = eval_branch(cu, eps_cell, tau_lo, tau_hi, c1, opt);
    BranchEval sw = eval_branch(cs, eps_cell, tau_lo, tau_hi, c1, opt);
    DeltaBounds at_lo = delta_from_branches(ul, sl, eps_cell, tau_lo, tau_lo, false);
    DeltaBounds at_hi = delta_from_branches(uh, sh, eps_cell, tau_hi, tau_hi, false);
    DeltaBounds window = delta_from_branches(uw, sw, eps_cell, tau_lo, tau_hi, false);

    TransversalityCertificate cert = verify_direct(at_lo, at_hi, window);
    out.sign_pattern = cert.sign_pattern;
    out.clauses = cert.clauses;
    detail::record_bracket(out.clauses, "u window", uw);
    detail::record_bracket(out.clauses, "s window", sw);

    out.rows.push_back(CsvRow{tau_lo, tau_lo, "p_x", ul.H.point[0], "u", eps_cell});
    out.rows.push_back(CsvRow{tau_lo, tau_lo, "p_x", sl.H.point[0], "s", eps_cell});
    out.rows.push_back(CsvRow{tau_hi, tau_hi, "p_x", uh.H.point[0], "u", eps_cell});
    out.rows.push_back(CsvRow{tau_hi, tau_hi, "p_x", sh.H.point[0], "s", eps_cell});
    out.rows.push_back(CsvRow{tau_lo, tau_lo, "delta", at_lo.delta, "delta", eps_cell});
    out.rows.push_back(CsvRow{tau_hi, tau_hi, "delta", at_hi.delta, "delta", eps_cell});
    out.rows.push_back(CsvRow{tau_lo, tau_hi, "d_tau_p", uw.d_tau_x, "u", eps_cell});
    out.rows.push_back(CsvRow{tau_lo, tau_hi, "d_tau_p", sw.d_tau_x, "s", eps_cell});
    out.rows.push_back(CsvRow{tau_lo, tau_hi, "d_tau_delta", window.d_tau, "delta", eps_cell});

    out.pass = cert.pass && all_hold(out.clauses);
    return out;
}

// deterministic parallel for: results are written into preallocated slots
template <class F>
inline void parallel_for(std::size_t n, int threads, F&& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    int nt = std::min<std::size_t>(threads, n);
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    for (auto& th : pool) th.join();
}

struct ProveResult {
    Json certificate;
    std::vector<CsvRow> rows;
    bool pass = false;
};

inline std::string csv_text(const std::vector<CsvRow>& rows) {
    std::string out = "tau_lo,tau_hi,quantity,lower,upper,branch,eps_lo,eps_hi\n";
    for (const auto& r : rows) {
        out += hex_double(r.tau_lo);
        out += ',';
        out += hex_double(r.tau_hi);
        out += ',';
        out += r.quantity;
        out += ',';
        out += hex_double(r.value.lo);
        out += ',';
        out += hex_double(r.value.hi);
        out += ',';
        out += r.branch;
        out += ',';
        out += hex_double(r.eps.lo);
        out += ',';
        out += hex_double(r.eps.hi);
        out += '\n';
    }
    return out;
}

// full pipeline: manifold stages per schedule entry, then all cells
inline ProveResult cmd_prove(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ProblemSpec prob = load_problem(cfg.problem_path);

    Json cert;
    cert["format"] = "vmel-certificate-1";
    cert["tool"] = "vmel 0.1.0";
    cert["config_hash"] = cfg.semantic_hash();
    cert["problem"] = cfg.problem_path;

    struct EntryCharts {
        NhimStage u, s;
        ManifoldChart cu, cs;
    };
    std::vector<EntryCharts> charts(cfg.schedule.size());
    Json nhim_json = Json::object();
    bool nhim_pass = true;
    for (std::size_t e = 0; e < cfg.schedule.size(); ++e) {
        const ScheduleEntry& entry = cfg.schedule[e];
        ProblemSpec scoped = prob;
        scoped.eps_range = entry.eps;
        charts[e].u = run_nhim_branch(scoped, 'u', entry.eps, cfg);
        charts[e].s = run_nhim_branch(scoped, 's', entry.eps, cfg);
        charts[e].cu = manifold_local_chart(scoped, 'u', charts[e].u.verdict, charts[e].u.m_raw);
        charts[e].cs = manifold_local_chart(scoped, 's', charts[e].s.verdict, charts[e].s.m_raw);
        nhim_json["entry_" + std::to_string(e) + "_u"] = nhim_stage_json(charts[e].u, entry.eps);
        nhim_json["entry_" + std::to_string(e) + "_s"] = nhim_stage_json(charts[e].s, entry.eps);
        nhim_pass = nhim_pass && charts[e].u.pass && charts[e].s.pass;
    }
    cert["nhim"] = nhim_json;

    // build the flat cell list
    struct CellTask {
        std::size_t entry;
        Interval eps;
    };
    std::vector<CellTask> tasks;
    for (std::size_t e = 0; e < cfg.schedule.size(); ++e) {
        const ScheduleEntry& entry = cfg.schedule[e];
        if (entry.mode == "melnikov") {
            tasks.push_back({e, entry.eps});
        } else {
            Box band{IVector{entry.eps}};
            for (const Box& cell : split(band, 0, std::max(1, entry.cells)))
                tasks.push_back({e, cell[0]});
        }
    }

    std::vector<CellOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
        const CellTask& task = tasks[i];
        const ScheduleEntry& entry = cfg.schedule[task.entry];
        const EntryCharts& ch = charts[task.entry];
        try {
            outcomes[i] = (entry.mode == "melnikov")
                              ? run_melnikov_cell(ch.cu, ch.cs, entry, cfg)
                              : run_direct_cell(ch.cu, ch.cs, task.eps, entry, cfg);
        } catch (const std::exception& ex) {
            CellOutcome bad;
            bad.mode = entry.mode;
            bad.eps = task.eps;
            bad.failure = ex.what();
            bad.pass = false;
            outcomes[i] = bad;
        }
    });

    ProveResult res;
    Json cells = Json::array();
    bool cells_pass = true;
    for (const auto& oc : outcomes) {
        cells.push_back(oc.to_json());
        cells_pass = cells_pass && oc.pass;
        res.rows.insert(res.rows.end(), oc.rows.begin(), oc.rows.end());
    }
    cert["cells"] = cells;

    // coverage of the requested band
    bool covered = true;
    for (std::size_t i = 0; i + 1 < outcomes.size(); ++i)
        if (outcomes[i].eps.hi != outcomes[i + 1].eps.lo) covered = false;
    Interval total(cfg.schedule.front().eps.lo, cfg.schedule.back().eps.hi);
    cert["coverage"] = {{"eps", json_interval(total)}, {"complete", covered}};

    res.pass = nhim_pass && cells_pass && covered;
    cert["pass"] = res.pass;
    auto t1 = std::chrono::steady_clock::now();
    cert["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    res.certificate = cert;
    return res;
}

// manifold verification only (first schedule entry's parameter range)
inline Json cmd_verify_nhim(const RunConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ProblemSpec prob = load_problem(cfg.problem_path);
    if (cfg.schedule.empty()) throw error("run config needs a schedule");
    Interval eps = cfg.schedule.front().eps;
    ProblemSpec scoped = prob;
    scoped.eps_range = eps;
    NhimStage u = run_nhim_branch(scoped, 'u', eps, cfg);
    NhimStage s = run_nhim_branch(scoped, 's', eps, cfg);
    Json j;
    j["format"] = "vmel-certificate-1";
    j["tool"] = "vmel 0.1.0";
    j["config_hash"] = cfg.semantic_hash();
    j["problem"] = cfg.problem_path;
    j["nhim"] = {{"u", nhim_stage_json(u, eps)}, {"s", nhim_stage_json(s, eps)}};
    j["pass"] = u.pass && s.pass;
    auto t1 = std::chrono::steady_clock::now();
    j["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    return j;
}

inline void write_outputs(const std::string& out_dir, const Json& certificate,
                          const std::vector<CsvRow>* rows) {
    std::filesystem::create_directories(out_dir);
    save_json_file(out_dir + "/certificate.json", certificate);
    if (rows) {
        std::ofstream csv(out_dir + "/plots.csv");
        csv << csv_text(*rows);
    }
}

}  // namespace vmel
