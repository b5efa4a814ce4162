#pragma once

// Melnikov distance machinery: conservative jet enclosures of the local
// manifold charts, their propagation to the section through the flow, the
// time alignment kappa, and the sign verifications
//     d delta / d eps   at tau_1 and tau_2        (opposite signs),
//     d^2 delta / (d tau d eps)   over [tau_1, tau_2],
// which certify a unique transversal intersection for every parameter in
// the range, plus the direct regime used away from zero.

#include <vmel/certificate.hpp>
#include <vmel/nhim.hpp>
#include <vmel/poincare.hpp>
#include <vmel/problem.hpp>

namespace vmel {

class CertificateMissing : public error {
public:
    CertificateMissing() : error("manifold chart requested without a passing verification") {}
};

class SignIndefinite : public error {
public:
    explicit SignIndefinite(const std::string& w) : error(w) {}
};

// apply a constant linear map to a jet
inline Jet2 apply_linear_map(const IMatrix& c, const Jet2& j) {
    Jet2 out(c.rows(), j.params());
    out.value = c * j.value;
    out.jacobian = c * j.jacobian;
    for (std::size_t i = 0; i < c.rows(); ++i) {
        IMatrix h(j.params(), j.params());
        for (std::size_t k = 0; k < c.cols(); ++k) {
            const Interval w = c(i, k);
            if (w.lo == 0 && w.hi == 0) continue;
            h = h + w * j.hess[k];
        }
        out.hess[i] = h;
    }
    return out;
}

struct ManifoldChart {
    char branch = 'u';
    double fiber_r = 0.0;          // unstable fiber coordinate of the chart
    Interval eps_range;            // parameter range the bounds certify
    double first_deriv_bound = 0;  // |d w / d(eps, s)| <= this
    double second_deriv_bound = 0; // |d^2 w| entries <= this (= 2M)
    double stable_bound = 0;       // |w| <= this
    ExprDag psi;                   // shear from local to sheared coordinates
    IMatrix linear;                // constant change to ambient coordinates
    ExprDag flow_field;            // ambient field to integrate (negated for s)
    Section section;
    std::size_t s_coordinate = 2;

    ManifoldChart() : psi({""}), flow_field({""}) {}
};

// chart with conservative jet enclosure of the manifold graph, expressed in
// ambient coordinates by composing the shear and linear changes
inline ManifoldChart manifold_local_chart(const ProblemSpec& prob, char branch,
                                          const NhimVerdict& verdict, double m_second_raw) {
    if (!verdict.pass) throw CertificateMissing();
    const BranchFrame& frame = (branch == 'u') ? prob.unstable : prob.stable;
    ManifoldChart c;
    c.branch = branch;
    c.fiber_r = prob.fiber_radius;
    c.eps_range = prob.eps_range;
    c.first_deriv_bound = verdict.L;
    c.second_deriv_bound = 2.0 * m_second_raw;
    c.stable_bound = prob.fiber_radius * verdict.L;
    c.psi = frame.psi;
    c.linear = frame.linear;
    c.flow_field = (branch == 'u') ? prob.ambient : prob.ambient.negated();
    c.section.coordinate = prob.section.coordinate;
    c.section.level = prob.section.level;
    c.section.direction = frame.crossing_direction;
    return c;
}

// local chart jet over (eps, s): graph enclosure in the sheared coordinates
inline Jet2 chart_local_jet(const ManifoldChart& c, const Interval& eps_box, const Interval& s_box) {
    Jet2 local(4, 2);
    local.value = IVector{Interval(c.fiber_r), eps_box, s_box,
                          Interval(-c.stable_bound, c.stable_bound)};
    local.jacobian(1, 0) = Interval(1.0);
    local.jacobian(2, 1) = Interval(1.0);
    Interval slope(-c.first_deriv_bound, c.first_deriv_bound);
    local.jacobian(3, 0) = slope;
    local.jacobian(3, 1) = slope;
    Interval curv(-c.second_deriv_bound, c.second_deriv_bound);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) local.hess[3](a, b) = curv;
    return eval_jet2_seeded(c.psi, local);
}

// hull form of the ambient chart jet (tests and diagnostics)
inline Jet2 chart_seed_jet(const ManifoldChart& c, const Interval& eps_box, const Interval& s_box) {
    return apply_linear_map(c.linear, chart_local_jet(c, eps_box, s_box));
}

// Seed the integrator with the linear change as the initial Lohner frame.
// The chart uncertainty is a box in the sheared coordinates; materializing
// the ambient hull would lose the row correlations of the linear change and
// leak the curvature bound into the expanding direction, so the deviations
// are kept in-frame instead.
inline FlowJet chart_flow_seed(const ManifoldChart& c, const Interval& eps_box,
                               const Interval& s_box, VariationalOrder vo) {
    Jet2 sheared = chart_local_jet(c, eps_box, s_box);
    const std::size_t n = 4;
    const std::size_t m = (vo == VariationalOrder::none) ? 0 : 2;

    IMatrix b0 = c.linear.mid();
    IMatrix binv = inverse(b0);
    IMatrix gauge = binv * c.linear;  // identity up to representation error

    FlowJet fj;
    fj.time = Interval(0.0);
    fj.B = b0;

    IVector vf = gauge * sheared.value;
    fj.xhat = (b0 * vf.mid()).mid();
    fj.r = vf - binv * fj.xhat;

    fj.Vhat = IMatrix(n, m);
    fj.Vdev = IMatrix(n, m);
    if (m) {
        IMatrix jf = gauge * sheared.jacobian;
        IMatrix vhat = (b0 * jf.mid()).mid();
        fj.Vhat = vhat;
        fj.Vdev = jf - binv * vhat;
    }
    if (vo == VariationalOrder::second) {
        fj.What.assign(m * (m + 1) / 2, IVector(n));
        fj.Wdev.assign(m * (m + 1) / 2, IVector(n));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) {
                std::size_t p = FlowJet::pair_index(a, b);
                IVector slice(n);
                for (std::size_t i = 0; i < n; ++i) slice[i] = sheared.hess[i](a, b);
                IVector wf = gauge * slice;
                IVector what = (b0 * wf.mid()).mid();
                fj.What[p] = what;
                fj.Wdev[p] = wf - binv * what;
            }
    }
    return fj;
}

// propagate the chart to the section: value, first and second derivative
// enclosures of h(eps, s) = P(w(r, eps, s))
inline CrossingJet h_map(const ManifoldChart& c, const Interval& eps_box, const Interval& s_box,
                         const StepControl& ctrl) {
    FlowJet fj = chart_flow_seed(c, eps_box, s_box, ctrl.variational);
    return first_crossing(c.flow_field, fj, c.section, ctrl, c.s_coordinate);
}

// s-time component of h at a point s over the full eps box (cheap probe)
inline Interval h_map_s_value(const ManifoldChart& c, const Interval& eps_box, double s,
                              const StepControl& ctrl) {
    StepControl probe = ctrl;
    probe.variational = VariationalOrder::none;
    return h_map(c, eps_box, Interval(s), probe).pi_s();
}

struct BranchEval {
    CrossingJet H;         // jet over (eps box) x (refined kappa bracket)
    KappaDerivatives kd;
    Interval kappa;        // refined bracket
    double tau_lift = 0;   // representative of tau on the lifted time axis
    KappaBracket bracket;  // verified outer bracket
    Interval d_eps_x;      // d(pi_x p)/d eps including the kappa chain
    Interval mixed_x;      // d^2(pi_x p)/(d tau d eps)
    Interval d_tau_x;      // d(pi_x p)/d tau
};

struct KappaSolveOptions {
    double margin = 0.05;      // initial bracket half width around the estimate
    double width_tol = 1e-6;   // bisection target width
    int restarts = 6;
};

namespace detail {

inline double reduce_to_pm_pi(double x) {
    const double two_pi = 6.283185307179586;
    double r = std::fmod(x, two_pi);
    if (r < -3.141592653589793) r += two_pi;
    if (r >= 3.141592653589793) r -= two_pi;
    return r;
}

}  // namespace detail

// One branch of the Melnikov assembly at s-time tau.  When tau_cell is
// wider than a point, the jets and derived quantities hold over the whole
// cell.  All inequalities are rigorous; only the bracket seeding uses
// midpoint estimates.
inline BranchEval eval_branch(const ManifoldChart& c, const Interval& eps_box, double tau_lo,
                              double tau_hi, const StepControl& ctrl,
                              const KappaSolveOptions& opt = {}) {
    BranchEval be;
    StepControl cheap = ctrl;
    cheap.variational = VariationalOrder::none;

    // flight-time estimate at the midpoint seeds the bracket
    Interval eps_mid(eps_box.mid());
    double omega = h_map_s_value(c, eps_mid, 0.0, cheap).mid();
    double kappa0_lo = detail::reduce_to_pm_pi(tau_lo - omega);
    double kappa0_hi = kappa0_lo + (tau_hi - tau_lo);
    double tlift_lo = tau_lo + 6.283185307179586 * std::round((kappa0_lo + omega - tau_lo) / 6.283185307179586);
    double tlift_hi = tlift_lo + (tau_hi - tau_lo);
    be.tau_lift = tlift_lo;

    auto h_s = [&](double s) { return h_map_s_value(c, eps_box, s, ctrl); };

    double margin = opt.margin;
    for (int attempt = 0;; ++attempt) {
        KappaBracket bracket{Interval(kappa0_lo - margin, kappa0_hi + margin), false};
        // monotonicity of s -> pi_s h over the bracket
        StepControl mono = ctrl;
        mono.variational = VariationalOrder::first;
        CrossingJet probe = h_map(c, eps_box, bracket.A, mono);
        bracket.monotone = probe.d_s(1).lo > 0.0;
        try {
            if (!bracket.monotone) throw BracketFails("pi_s h not strictly increasing on the bracket");
            Interval klo = solve_kappa(h_s, tlift_lo, bracket, opt.width_tol);
            Interval khi = (tau_hi > tau_lo)
                               ? solve_kappa(h_s, tlift_hi, bracket, opt.width_tol)
                               : klo;
            be.bracket = bracket;
            be.kappa = Interval(klo.lo, std::max(klo.lo, khi.hi));
            break;
        } catch (const BracketFails&) {
            if (attempt + 1 >= opt.restarts) throw;
            margin *= 2.0;
        }
    }

    be.H = h_map(c, eps_box, be.kappa, ctrl);
    if (ctrl.variational == VariationalOrder::second) {
        be.kd = kappa_derivatives(be.H);
        const Interval dxde = be.H.dP(0, 0), dxds = be.H.dP(0, 1);
        be.d_eps_x = dxde + dxds * be.kd.d_eps;
        be.mixed_x = be.H.d2P[0](1, 0) * be.kd.d_tau + be.H.d2P[0](1, 1) * be.kd.d_tau * be.kd.d_eps +
                     dxds * be.kd.d2_eps_tau;
        be.d_tau_x = dxds * be.kd.d_tau;
    } else if (ctrl.variational == VariationalOrder::first) {
        Interval g_s = be.H.d_s(1);
        if (g_s.contains_zero()) throw DegenerateDenominator();
        be.kd.g_eps = be.H.d_s(0);
        be.kd.g_s = g_s;
        be.kd.d_eps = -be.kd.g_eps / g_s;
        be.kd.d_tau = Interval(1.0) / g_s;
        be.d_eps_x = be.H.dP(0, 0) + be.H.dP(0, 1) * be.kd.d_eps;
        be.d_tau_x = be.H.dP(0, 1) * be.kd.d_tau;
    }
    return be;
}

struct DeltaBounds {
    Interval tau;
    Interval eps;
    Interval d_eps;
    Interval d2_tau_eps;
    Interval delta;
    Interval d_tau;
    bool has_second = false;
    bool has_value = false;
};

// Melnikov distance derivatives at tau (or over a tau cell) from the two
// branch evaluations
inline DeltaBounds delta_from_branches(const BranchEval& u, const BranchEval& s,
                                       const Interval& eps_box, double tau_lo, double tau_hi,
                                       bool second) {
    DeltaBounds d;
    d.tau = Interval(tau_lo, tau_hi);
    d.eps = eps_box;
    d.d_eps = u.d_eps_x - s.d_eps_x;
    d.d_tau = u.d_tau_x - s.d_tau_x;
    if (second) {
        d.d2_tau_eps = u.mixed_x - s.mixed_x;
        d.has_second = true;
    }
    d.delta = u.H.point[0] - s.H.point[0];
    d.has_value = true;
    return d;
}

inline DeltaBounds delta_derivatives(const ManifoldChart& cu, const ManifoldChart& cs,
                                     const Interval& eps_box, double tau_lo, double tau_hi,
                                     const StepControl& ctrl, const KappaSolveOptions& opt = {}) {
    BranchEval u = eval_branch(cu, eps_box, tau_lo, tau_hi, ctrl, opt);
    BranchEval s = eval_branch(cs, eps_box, tau_lo, tau_hi, ctrl, opt);
    return delta_from_branches(u, s, eps_box, tau_lo, tau_hi,
                               ctrl.variational == VariationalOrder::second);
}

struct TransversalityCertificate {
    Interval eps;
    double tau1 = 0, tau2 = 0;
    std::string sign_pattern;  // "paper" | "mirrored" | "decreasing" | "increasing" | "indefinite"
    std::vector<Clause> clauses;
    std::vector<std::string> implied_clauses;
    bool pass = false;
};

// The near-zero regime: d delta/d eps of opposite signs at tau1 and tau2
// and a sign-definite mixed partial over the whole range between them
// certify, for every nonzero eps in the range, a unique transversal
// intersection at some tau in (tau1, tau2).  Both the stated orientation
// and its mirror (delta replaced by -delta) are accepted.
inline TransversalityCertificate verify_theorem_main(const DeltaBounds& at1, const DeltaBounds& at2,
                                                     const std::vector<DeltaBounds>& mixed_cells) {
    if (at1.eps.lo > 0.0) throw DomainError("theorem range must contain eps = 0");
    TransversalityCertificate cert;
    cert.eps = at1.eps;
    cert.tau1 = at1.tau.lo;
    cert.tau2 = at2.tau.hi;

    const Interval& d1 = at1.d_eps;
    const Interval& d2 = at2.d_eps;
    bool paper = d1.hi < 0.0 && d2.lo > 0.0;
    bool mirrored = d1.lo > 0.0 && d2.hi < 0.0;
    cert.sign_pattern = paper ? "paper" : (mirrored ? "mirrored" : "indefinite");
    if (paper || mirrored) {
        cert.clauses.push_back(paper ? Clause::less("d_eps(tau1) < 0", d1, 0.0)
                                     : Clause::greater("d_eps(tau1) > 0", d1, 0.0));
        cert.clauses.push_back(paper ? Clause::greater("d_eps(tau2) > 0", d2, 0.0)
                                     : Clause::less("d_eps(tau2) < 0", d2, 0.0));
    } else {
        cert.clauses.push_back(Clause::greater("d_eps(tau1) sign definite", d1, 0.0));
        cert.clauses.push_back(Clause::less("d_eps(tau2) sign definite", d2, 0.0));
    }
    for (std::size_t g = 0; g < mixed_cells.size(); ++g) {
        const Interval& m = mixed_cells[g].d2_tau_eps;
        std::string tag = "mixed[" + std::to_string(g) + "]";
        cert.clauses.push_back(paper ? Clause::greater(tag + " > 0", m, 0.0)
                                     : Clause::less(tag + " < 0", m, 0.0));
    }
    cert.implied_clauses = {"backward cone conditions follow from the rate conditions",
                            "covering conditions follow from the isolating block"};
    cert.pass = (paper || mirrored) && all_hold(cert.clauses);
    return cert;
}

// The away-from-zero regime: delta changes sign across the window and
// d delta/d tau is sign definite on it, certifying a unique transversal
// intersection for every eps in the band.
inline TransversalityCertificate verify_direct(const DeltaBounds& at_lo, const DeltaBounds& at_hi,
                                               const DeltaBounds& window) {
    TransversalityCertificate cert;
    cert.eps = at_lo.eps;
    cert.tau1 = at_lo.tau.lo;
    cert.tau2 = at_hi.tau.hi;
    bool decreasing = at_lo.delta.lo > 0.0 && at_hi.delta.hi < 0.0;
    bool increasing = at_lo.delta.hi < 0.0 && at_hi.delta.lo > 0.0;
    cert.sign_pattern = decreasing ? "decreasing" : (increasing ? "increasing" : "indefinite");
    if (decreasing) {
        cert.clauses.push_back(Clause::greater("delta(tau_lo) > 0", at_lo.delta, 0.0));
        cert.clauses.push_back(Clause::less("delta(tau_hi) < 0", at_hi.delta, 0.0));
        cert.clauses.push_back(Clause::less("d_tau(window) < 0", window.d_tau, 0.0));
    } else if (increasing) {
        cert.clauses.push_back(Clause::less("delta(tau_lo) < 0", at_lo.delta, 0.0));
        cert.clauses.push_back(Clause::greater("delta(tau_hi) > 0", at_hi.delta, 0.0));
        cert.clauses.push_back(Clause::greater("d_tau(window) > 0", window.d_tau, 0.0));
    } else {
        cert.clauses.push_back(Clause::greater("delta(tau_lo) sign definite", at_lo.delta, 0.0));
        cert.clauses.push_back(Clause::less("delta(tau_hi) sign definite", at_hi.delta, 0.0));
        cert.clauses.push_back(Clause::less("d_tau(window) sign definite", window.d_tau, 0.0));
    }
    cert.pass = (decreasing || increasing) && all_hold(cert.clauses);
    return cert;
}

}  // namespace vmel
