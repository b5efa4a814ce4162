#pragma once

// First crossing of a coordinate section, with rigorous jets of the
// crossing map.  The crossing time bracket is found by marching past the
// section and contracting an interval Newton iteration on
//     t  ->  sigma(Phi(t, set)),
// then the jets of P(z) = Phi(theta(z), z) follow from the implicit
// corrections
//     DP u     = f(P) (Dtheta u) + DPhi u,
//     D2P(u,v) = Df(P)(DP u)(Dtheta v) + Df(P)(DPhi v)(Dtheta u)
//                + f(P) D2theta(u,v) + D2Phi(u,v),
// with Dtheta and D2theta solved from sigma(P) = const.

#include <vmel/integrator.hpp>

namespace vmel {

class NoCrossing : public error {
public:
    explicit NoCrossing(const std::string& w) : error(w) {}
};

class NotTransversal : public error {
public:
    explicit NotTransversal(const std::string& w) : error(w) {}
};

class DegenerateDenominator : public error {
public:
    DegenerateDenominator() : error("implicit derivative denominator reaches zero") {}
};

class BracketFails : public error {
public:
    explicit BracketFails(const std::string& w) : error(w) {}
};

struct Section {
    std::size_t coordinate = 0;
    double level = 0.0;
    int direction = -1;  // required sign of f_sigma at the crossing
};

struct CrossingJet {
    Interval tau;                // s-time coordinate of the crossing points
    Interval flight;             // t-time from the seed set to the section
    IVector point;               // crossing set, section coordinate pinned
    IMatrix dP;                  // n x m derivative of the crossing map
    std::vector<IMatrix> d2P;    // per output, m x m
    bool transversal = false;
    std::size_t s_coordinate = 0;  // index of the s-time coordinate

    Interval pi_s() const { return point[s_coordinate]; }
    Interval d_s(std::size_t param) const { return dP(s_coordinate, param); }
};

namespace detail {

inline Interval section_gap(const IVector& state, const Section& sec) {
    return state[sec.coordinate] - sec.level;
}

}  // namespace detail

// March the flow until the section coordinate is strictly past the level in
// the crossing direction, then localize and build the crossing jet.
// s_coordinate names the coordinate that carries the s-time.
inline CrossingJet first_crossing(const ExprDag& f, FlowJet fj, const Section& sec,
                                  const StepControl& ctrl, std::size_t s_coordinate,
                                  double t_budget = 50.0) {
    const std::size_t n = fj.dim();
    const std::size_t m = fj.params();
    const double dir = static_cast<double>(sec.direction);

    {
        Interval g0 = detail::section_gap(fj.state_hull(), sec);
        if (!((g0 * dir).hi < 0.0))
            throw NoCrossing("seed set does not start strictly on the approach side");
    }

    // march: remember the last state strictly on the approach side
    FlowJet pre = fj;
    double marched = 0.0;
    double h_cap = ctrl.h_max;
    bool past = false;
    while (marched < t_budget) {
        double h = std::min(h_cap, select_step(f, fj, ctrl, t_budget));
        detail::OneStepJet s;
        for (;;) {
            try {
                s = one_step_jet(f, fj, ctrl, h, Interval(h));
                break;
            } catch (const TooLarge&) {
                if (h <= ctrl.h_min * (1 + 1e-12)) throw StepFloor();
                h = std::max(ctrl.h_min, h / 2);
            }
        }
        apply_step(fj, s);
        marched += h;
        h_cap = std::min(ctrl.h_max, h * 1.5);
        Interval gap = detail::section_gap(fj.state_hull(), sec) * dir;
        if (gap.lo > 0.0) { past = true; break; }
        if (gap.hi < 0.0) pre = fj;  // still strictly on the approach side
    }
    if (!past) throw NoCrossing("time budget exhausted before the section");

    // bracket of crossing times relative to `pre`
    Interval theta(0.0, (fj.time - pre.time).hi);

    // tube over the bracket and transversality of the normal velocity
    IVector tube = rough_enclosure(f, pre.state_hull(), theta.hi);
    Interval fsig_tube = f.eval(tube)[sec.coordinate];
    if ((fsig_tube * dir).lo <= 0.0)
        throw NotTransversal("normal velocity not sign definite over the crossing tube");

    // contract theta by interval Newton on the section gap
    StepControl probe = ctrl;
    probe.variational = VariationalOrder::none;
    for (int it = 0; it < 10; ++it) {
        double tc = theta.mid();
        FlowJet mid_fj = pre;
        if (tc > 0) {
            auto s = one_step_jet(f, pre, probe, theta.hi, Interval(tc));
            apply_step(mid_fj, s);
        }
        Interval gap_mid = detail::section_gap(mid_fj.state_hull(), sec);
        Interval next = (Interval(tc) - gap_mid / fsig_tube).intersect(theta);
        if (next.width() > 0.9 * theta.width()) { theta = next; break; }
        theta = next;
    }

    // final partial step over the localized bracket, with full jets
    FlowJet at;
    {
        at = pre;
        auto s = one_step_jet(f, pre, ctrl, std::max(theta.hi, ctrl.h_min * 1e-6), theta);
        apply_step(at, s);
    }

    CrossingJet out;
    out.s_coordinate = s_coordinate;
    out.flight = pre.time + theta;
    out.point = at.state_hull();
    Interval fsig_cross = f.eval(out.point)[sec.coordinate];
    out.transversal = (fsig_cross * dir).lo > 0.0;
    if (!out.transversal) throw NotTransversal("normal velocity not sign definite at the crossing");
    // crossing points sit exactly on the section
    out.point[sec.coordinate] = out.point[sec.coordinate].intersect(Interval(sec.level));
    out.tau = out.point[s_coordinate];

    if (m == 0) return out;

    IVector fP = f.eval(out.point);
    IMatrix V = at.deriv_hull();

    // Dtheta row: -V[sigma, :] / f_sigma
    std::vector<Interval> dtheta(m);
    for (std::size_t a = 0; a < m; ++a) dtheta[a] = -V(sec.coordinate, a) / fsig_cross;

    out.dP = IMatrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) out.dP(i, a) = V(i, a) + fP[i] * dtheta[a];
    // the section coordinate of P is identically the level
    for (std::size_t a = 0; a < m; ++a) out.dP(sec.coordinate, a) = Interval(0.0);

    if (at.What.empty()) return out;

    Jet2 fjet = eval_jet2(f, out.point);  // f and Df over the crossing set
    std::vector<IMatrix> W = at.hess_by_output();

    // columns DP e_a and DPhi e_a as vectors
    auto column = [&](const IMatrix& mat, std::size_t a) {
        IVector c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = mat(i, a);
        return c;
    };

    out.d2P.assign(n, IMatrix(m, m));
    for (std::size_t a = 0; a < m; ++a) {
        IVector dPa = column(out.dP, a);
        IVector df_dPa = fjet.jacobian * dPa;
        for (std::size_t b = a; b < m; ++b) {
            IVector dPhib = column(V, b);
            IVector df_dPhib = fjet.jacobian * dPhib;
            // base(u_a, v_b) = Df(DP a) Dtheta_b + Df(DPhi b) Dtheta_a + D2Phi(a, b)
            IVector base(n);
            for (std::size_t i = 0; i < n; ++i)
                base[i] = df_dPa[i] * dtheta[b] + df_dPhib[i] * dtheta[a] + W[i](a, b);
            Interval d2theta = -base[sec.coordinate] / fsig_cross;
            for (std::size_t i = 0; i < n; ++i) {
                Interval val = (i == sec.coordinate) ? Interval(0.0) : base[i] + fP[i] * d2theta;
                out.d2P[i](a, b) = val;
                out.d2P[i](b, a) = val;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Time alignment kappa: bracketing, refinement, implicit derivatives.
// ---------------------------------------------------------------------------

struct KappaBracket {
    Interval A;
    bool monotone = false;
};

// Rigorous bisection for kappa inside a verified bracket: pi_s h is
// strictly increasing on A and pi_s h(a1) < tau < pi_s h(a2).
// h_s evaluates the enclosure of pi_s h over (full parameter box) x {s}.
inline Interval solve_kappa(const std::function<Interval(double)>& h_s, double tau,
                            const KappaBracket& bracket, double width_tol = 1e-6,
                            int max_iter = 80) {
    if (!bracket.monotone) throw BracketFails("bracket monotonicity not verified");
    double a = bracket.A.lo, b = bracket.A.hi;
    Interval ha = h_s(a), hb = h_s(b);
    if (!(ha.hi < tau)) throw BracketFails("lower bracket endpoint does not verify");
    if (!(hb.lo > tau)) throw BracketFails("upper bracket endpoint does not verify");
    for (int it = 0; it < max_iter && (b - a) > width_tol; ++it) {
        double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        Interval hm = h_s(mid);
        if (hm.hi < tau) a = mid;
        else if (hm.lo > tau) b = mid;
        else break;  // enclosure straddles tau: cannot split further
    }
    return Interval(a, b);
}

// optional one-step interval Newton polish of a kappa enclosure, given an
// enclosure of d(pi_s h)/ds over the bracket
inline Interval kappa_newton_polish(const std::function<Interval(double)>& h_s,
                                    const Interval& dh_s, double tau, const Interval& bracket) {
    if (dh_s.contains_zero()) throw DegenerateDenominator();
    double mid = bracket.mid();
    Interval n = Interval(mid) - (h_s(mid) - tau) / dh_s;
    if (!n.intersects(bracket)) throw BracketFails("newton polish left the bracket");
    return n.intersect(bracket);
}

struct KappaDerivatives {
    Interval d_eps;      // d kappa / d eps
    Interval d_tau;      // d kappa / d tau
    Interval d2_eps_tau; // d^2 kappa / (d eps d tau)
    Interval g_eps, g_s, g_es, g_ss;  // ingredients, kept for residual checks
};

// Implicit derivatives of kappa from the jet of h = P(w(...)) with respect
// to the parameters (eps, s); g(eps, tau, s) = pi_s h(eps, s) - tau.
inline KappaDerivatives kappa_derivatives(const CrossingJet& h) {
    KappaDerivatives k;
    k.g_eps = h.d_s(0);
    k.g_s = h.d_s(1);
    if (k.g_s.contains_zero()) throw DegenerateDenominator();
    const IMatrix& hs = h.d2P[h.s_coordinate];
    k.g_es = hs(0, 1);
    k.g_ss = hs(1, 1);
    k.d_eps = -k.g_eps / k.g_s;
    k.d_tau = Interval(1.0) / k.g_s;
    k.d2_eps_tau = -(k.g_es * k.d_tau + k.g_ss * k.d_tau * k.d_eps) / k.g_s;
    return k;
}

}  // namespace vmel
