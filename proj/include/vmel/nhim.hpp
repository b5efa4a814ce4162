#pragma once

// Verification machinery for normally hyperbolic behavior of a vector
// field over a product domain
//     D = Lambda x B_u(R) x B_s(R_s),
// with Lambda a product of parameter intervals and circles.  The eight
// one-sided rate constants are computed cell-wise from jet enclosures of
// the field, in the frame where the stable block is measured in units of
// R_s/R so both hyperbolic blocks have common radius R.  The certificate
// records the frame; slope and curvature exports are mapped back to raw
// coordinates by the chart layer.

#include <vmel/jet.hpp>
#include <vmel/lognorm.hpp>

#include <functional>
#include <sstream>

namespace vmel {

class Infeasible : public error {
public:
    explicit Infeasible(const std::string& w) : error(w) {}
};

class RateHypothesisViolated : public error {
public:
    explicit RateHypothesisViolated(const std::string& w) : error(w) {}
};

struct CenterCoord {
    std::size_t index;
    Interval range;
    bool periodic = false;
    double period = 0.0;
};

struct DomainSpec {
    std::vector<CenterCoord> center;
    std::vector<std::size_t> unstable;  // coordinate indices
    std::vector<std::size_t> stable;
    double unstable_radius = 0.0;  // R
    double stable_radius = 0.0;    // R_s
    double chart_radius = 0.0;     // R_Lambda
    double slope = 0.0;            // L: aspect of the domain, R_s = R * L
    double cone = 0.5;             // cone constant used by the rate conditions
    std::vector<std::size_t> partition;  // per-coordinate subdivision counts

    std::size_t dim() const { return center.size() + unstable.size() + stable.size(); }

    void validate() const {
        if (unstable_radius <= 0 || stable_radius <= 0) throw DomainError("radii must be positive");
        if (chart_radius <= 0) throw DomainError("chart radius must be positive");
        if (!(unstable_radius < 0.5 * chart_radius)) throw DomainError("R < R_Lambda/2 required");
        double floor = 2.0 * unstable_radius / chart_radius;
        if (!(cone > floor && cone < 1.0))
            throw DomainError("cone constant outside (2R/R_Lambda, 1)");
        if (!(slope > 0.0)) throw DomainError("slope must be positive");
    }

    Box box() const {
        IVector v(dim());
        std::vector<CoordTopology> topo(dim());
        for (const auto& c : center) {
            v[c.index] = c.range;
            topo[c.index] = CoordTopology{c.periodic, c.period};
        }
        for (std::size_t i : unstable) v[i] = Interval(-unstable_radius, unstable_radius);
        for (std::size_t i : stable) v[i] = Interval(-stable_radius, stable_radius);
        return Box(v, topo);
    }

    // per-coordinate scale of the radius-normalized frame
    std::vector<double> frame_scale() const {
        std::vector<double> s(dim(), 1.0);
        for (std::size_t i : stable) s[i] = stable_radius / unstable_radius;
        return s;
    }

    std::vector<std::size_t> cell_counts() const {
        if (partition.empty()) return std::vector<std::size_t>(dim(), 1);
        if (partition.size() != dim()) throw DimensionMismatch();
        return partition;
    }
};

struct RateConstants {
    double mu_s1, mu_s2, xi_u1, xi_u1P, mu_cs1, mu_cs2, xi_cu1, xi_cu1P;
};

struct RateCheck {
    bool pass = false;
    std::vector<std::string> violations;
};

struct BlockPartials {
    Box cell;
    Jet2 jet;  // jacobian and hessians in the normalized frame

    IMatrix jac_block(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) const {
        IMatrix m(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = jet.jacobian(rows[i], cols[j]);
        return m;
    }
    IMatrix hess_block(std::size_t out, const std::vector<std::size_t>& rows,
                       const std::vector<std::size_t>& cols) const {
        IMatrix m(rows.size(), cols.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = jet.hess[out](rows[i], cols[j]);
        return m;
    }
};

// Evaluate the field jet over every cell of the partitioned domain, scaled
// into the normalized frame, and fold the visitor over the cells.
inline void block_partials(const ExprDag& f, const DomainSpec& d,
                           const std::function<void(const BlockPartials&)>& visit) {
    if (f.arity() != d.dim()) throw DimensionMismatch();
    const std::vector<double> scale = d.frame_scale();
    const std::size_t n = d.dim();
    for (const Box& cell : split_grid(d.box(), d.cell_counts())) {
        BlockPartials bp;
        bp.cell = cell;
        bp.jet = eval_jet2(f, cell);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double w = scale[j] / scale[i];
                if (w != 1.0) bp.jet.jacobian(i, j) = bp.jet.jacobian(i, j) * Interval(w);
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = 0; b < n; ++b) {
                    double w = scale[a] * scale[b] / scale[i];
                    if (w != 1.0) bp.jet.hess[i](a, b) = bp.jet.hess[i](a, b) * Interval(w);
                }
        visit(bp);
    }
}

namespace detail {

inline std::vector<std::size_t> concat(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

inline std::vector<std::size_t> center_indices(const DomainSpec& d) {
    std::vector<std::size_t> r;
    for (const auto& c : d.center) r.push_back(c.index);
    return r;
}

}  // namespace detail

// the eight arrow constants over D, one-sided rigorous bounds
inline RateConstants rate_constants(const ExprDag& f, const DomainSpec& d) {
    d.validate();
    const double C = d.cone;
    const auto lam = detail::center_indices(d);
    const auto lx = detail::concat(lam, d.unstable);
    const auto ly = detail::concat(lam, d.stable);
    const auto& xs = d.unstable;
    const auto& ys = d.stable;

    const double inf0 = std::numeric_limits<double>::infinity();
    double mu_s1 = -inf0, mu_s2 = -inf0, mu_cs1 = -inf0, mu_cs2 = -inf0;
    double xi_u1 = inf0, xi_cu1 = inf0;
    double ml_xx = inf0, ml_lxlx = inf0;      // P-restricted pieces (global fallback)
    double n_x_ly = -inf0, n_lx_y = -inf0;

    block_partials(f, d, [&](const BlockPartials& bp) {
        const double l_yy = lognorm_upper(bp.jac_block(ys, ys));
        const double l_lyly = lognorm_upper(bp.jac_block(ly, ly));
        const double m_xx = ml_lower(bp.jac_block(xs, xs));
        const double m_lxlx = ml_lower(bp.jac_block(lx, lx));
        const double ny_lx = mat_opnorm_sup(bp.jac_block(ys, lx));
        const double nx_ly = mat_opnorm_sup(bp.jac_block(xs, ly));
        const double nly_x = mat_opnorm_sup(bp.jac_block(ly, xs));
        const double nlx_y = mat_opnorm_sup(bp.jac_block(lx, ys));

        mu_s1 = std::max(mu_s1, (Interval(l_yy) + Interval(ny_lx) / Interval(C)).hi);
        mu_s2 = std::max(mu_s2, (Interval(l_yy) + Interval(C) * Interval(nlx_y)).hi);
        xi_u1 = std::min(xi_u1, (Interval(m_xx) - Interval(nx_ly) / Interval(C)).lo);
        mu_cs1 = std::max(mu_cs1, (Interval(l_lyly) + Interval(C) * Interval(nly_x)).hi);
        mu_cs2 = std::max(mu_cs2, (Interval(l_lyly) + Interval(nx_ly) / Interval(C)).hi);
        xi_cu1 = std::min(xi_cu1, (Interval(m_lxlx) - Interval(C) * Interval(nlx_y)).lo);

        ml_xx = std::min(ml_xx, m_xx);
        ml_lxlx = std::min(ml_lxlx, m_lxlx);
        n_x_ly = std::max(n_x_ly, nx_ly);
        n_lx_y = std::max(n_lx_y, nlx_y);
    });

    RateConstants rc;
    rc.mu_s1 = mu_s1;
    rc.mu_s2 = mu_s2;
    rc.xi_u1 = xi_u1;
    rc.mu_cs1 = mu_cs1;
    rc.mu_cs2 = mu_cs2;
    rc.xi_cu1 = xi_cu1;
    rc.xi_u1P = (Interval(ml_xx) - Interval(n_x_ly) / Interval(C)).lo;
    rc.xi_cu1P = (Interval(ml_lxlx) - Interval(C) * Interval(n_lx_y)).lo;
    return rc;
}

inline RateCheck check_rate_conditions(const RateConstants& rc, int order_k) {
    if (order_k < 1) throw DomainError("rate condition order must be >= 1");
    RateCheck r;
    auto require = [&](bool ok, const std::string& what, double lhs, double rhs) {
        if (!ok) {
            std::ostringstream os;
            os << what << " violated: " << lhs << " !< " << rhs;
            r.violations.push_back(os.str());
        }
    };
    require(rc.mu_s1 < 0.0, "mu_s1 < 0", rc.mu_s1, 0.0);
    require(rc.xi_u1P > 0.0, "0 < xi_u1P", 0.0, rc.xi_u1P);
    require(rc.mu_cs1 < rc.xi_u1P, "mu_cs1 < xi_u1P", rc.mu_cs1, rc.xi_u1P);
    require(rc.mu_s1 < rc.xi_cu1P, "mu_s1 < xi_cu1P", rc.mu_s1, rc.xi_cu1P);
    for (int j = 1; j <= order_k; ++j) {
        double rhs = (Interval(double(j + 1)) * Interval(rc.xi_cu1)).lo;
        std::ostringstream os;
        os << "mu_s2 < " << (j + 1) << "*xi_cu1";
        require(rc.mu_s2 < rhs, os.str(), rc.mu_s2, rhs);
    }
    require(rc.mu_cs2 < rc.xi_u1, "mu_cs2 < xi_u1", rc.mu_cs2, rc.xi_u1);
    r.pass = r.violations.empty();
    return r;
}

struct IsolatingBlockResult {
    bool pass = false;
    std::string witness;  // first failing face cell, empty on pass
};

// Strict entry/exit sign verification on the hyperbolic boundary faces.
// Supported for one dimensional unstable and stable blocks, where the
// boundary of the ball is a coordinate pair of faces.
inline IsolatingBlockResult check_isolating_block(const ExprDag& f, const DomainSpec& d) {
    if (d.unstable.size() != 1 || d.stable.size() != 1)
        throw error("isolating block verification implemented for one dimensional hyperbolic blocks");
    IsolatingBlockResult res;
    res.pass = true;
    Box base = d.box();
    auto counts = d.cell_counts();

    auto scan_face = [&](std::size_t coord, double value, bool expect_positive, const char* tag) {
        Box face = base;
        face[coord] = Interval(value, value);
        auto face_counts = counts;
        face_counts[coord] = 1;
        for (const Box& cell : split_grid(face, face_counts)) {
            if (!res.pass) return;
            Interval fx = f.eval(cell.v)[coord] * Interval(value);
            bool ok = expect_positive ? fx.lo > 0.0 : fx.hi < 0.0;
            if (!ok) {
                res.pass = false;
                std::ostringstream os;
                os << tag << " face sign not strict at cell ";
                for (std::size_t i = 0; i < cell.dim(); ++i) os << to_string(cell[i]) << " ";
                res.witness = os.str();
            }
        }
    };
    std::size_t xu = d.unstable[0], ys = d.stable[0];
    scan_face(xu, d.unstable_radius, true, "exit");
    if (res.pass) scan_face(xu, -d.unstable_radius, true, "exit");
    if (res.pass) scan_face(ys, d.stable_radius, false, "entry");
    if (res.pass) scan_face(ys, -d.stable_radius, false, "entry");
    return res;
}

enum class SlopeMode { fiber, graph };

struct SlopeCheckResult {
    bool pass = false;
    double xi = 0.0;
    double mu1 = 0.0;
};

// Lipschitz slope verification: mu1(M) < xi(M) in the normalized frame
// certifies that the manifold graph function is Lipschitz with constant M
// (graph mode: the center-unstable graph over (lambda, x); fiber mode: the
// unstable fiber graph over x).
inline SlopeCheckResult slope_check(const ExprDag& f, const DomainSpec& d, double M, SlopeMode mode) {
    if (!(M > 0.0)) throw DomainError("slope constant must be positive");
    d.validate();
    const auto lam = detail::center_indices(d);
    std::vector<std::size_t> xr, yr;
    if (mode == SlopeMode::graph) {
        xr = detail::concat(lam, d.unstable);
        yr = d.stable;
    } else {
        xr = d.unstable;
        yr = detail::concat(lam, d.stable);
    }
    const double inf0 = std::numeric_limits<double>::infinity();
    double xi = inf0, mu1 = -inf0;
    block_partials(f, d, [&](const BlockPartials& bp) {
        double m_xx = ml_lower(bp.jac_block(xr, xr));
        double n_xy = mat_opnorm_sup(bp.jac_block(xr, yr));
        double l_yy = lognorm_upper(bp.jac_block(yr, yr));
        double n_yx = mat_opnorm_sup(bp.jac_block(yr, xr));
        xi = std::min(xi, (Interval(m_xx) - Interval(M) * Interval(n_xy)).lo);
        mu1 = std::max(mu1, (Interval(l_yy) + Interval(n_yx) / Interval(M)).hi);
    });
    SlopeCheckResult r;
    r.xi = xi;
    r.mu1 = mu1;
    r.pass = mu1 < xi;
    return r;
}

struct SecondDerivConstants {
    double C_x, C_y, C_y1, C_y2, C_y3;
    double xi, mu1, mu2;
    double M_bound;
    bool improved_formula;
};

namespace detail {

// sup over unit v of |D^2 f_rows(p)(v, v)| restricted to (rows_a x rows_b)
// directions; combined over outputs in quadrature
inline double hess_bilinear_bound(const BlockPartials& bp, const std::vector<std::size_t>& outs,
                                  const std::vector<std::size_t>& dir_a,
                                  const std::vector<std::size_t>& dir_b, bool symmetric_block) {
    Interval acc(0.0);
    for (std::size_t o : outs) {
        IMatrix h = bp.hess_block(o, dir_a, dir_b);
        double s;
        if (symmetric_block) {
            SymEigBounds eb = sym_eig_bounds(h);
            s = std::max(std::fabs(eb.lambda_min_lower), std::fabs(eb.lambda_max_upper));
        } else {
            s = mat_opnorm_tight(h);
        }
        acc += sqr(Interval(s));
    }
    if (acc.lo < 0.0) acc.lo = 0.0;
    return sqrt(acc).hi;
}

}  // namespace detail

// Curvature bound M for the graph function certified by slope_check: for
// Lipschitz class Lcal,
//   M > (Lcal C_x + C_y)(1 + Lcal^2) / (2 xi - mu2)            (general)
//   M > (Lcal C_x (1+Lcal^2) + C_y1 + C_y2 Lcal + C_y3 Lcal^2)
//       / (2 xi - mu2)                                         (improved)
// and the smaller of the two is reported.
inline SecondDerivConstants second_deriv_bound(const ExprDag& f, const DomainSpec& d, double Lcal,
                                               SlopeMode mode) {
    if (!(Lcal > 0.0)) throw DomainError("Lipschitz class constant must be positive");
    d.validate();
    const auto lam = detail::center_indices(d);
    std::vector<std::size_t> xr, yr;
    if (mode == SlopeMode::graph) {
        xr = detail::concat(lam, d.unstable);
        yr = d.stable;
    } else {
        xr = d.unstable;
        yr = detail::concat(lam, d.stable);
    }
    std::vector<std::size_t> all = detail::concat(xr, yr);

    const double inf0 = std::numeric_limits<double>::infinity();
    double inf_ml = inf0, sup_nxy = -inf0, sup_lyy = -inf0, sup_nyx = -inf0;
    double cx = 0, cy = 0, cy1 = 0, cy2 = 0, cy3 = 0;

    block_partials(f, d, [&](const BlockPartials& bp) {
        inf_ml = std::min(inf_ml, ml_lower(bp.jac_block(xr, xr)));
        sup_nxy = std::max(sup_nxy, mat_opnorm_sup(bp.jac_block(xr, yr)));
        sup_lyy = std::max(sup_lyy, lognorm_upper(bp.jac_block(yr, yr)));
        sup_nyx = std::max(sup_nyx, mat_opnorm_sup(bp.jac_block(yr, xr)));
        cx = std::max(cx, detail::hess_bilinear_bound(bp, xr, all, all, true));
        cy = std::max(cy, detail::hess_bilinear_bound(bp, yr, all, all, true));
        cy1 = std::max(cy1, detail::hess_bilinear_bound(bp, yr, xr, xr, true));
        cy2 = std::max(cy2, detail::hess_bilinear_bound(bp, yr, xr, yr, false));
        cy3 = std::max(cy3, detail::hess_bilinear_bound(bp, yr, yr, yr, true));
    });

    SecondDerivConstants out;
    out.C_x = (Interval(0.5) * Interval(cx)).hi;
    out.C_y = (Interval(0.5) * Interval(cy)).hi;
    out.C_y1 = (Interval(0.5) * Interval(cy1)).hi;
    out.C_y2 = cy2;
    out.C_y3 = (Interval(0.5) * Interval(cy3)).hi;

    Interval L(Lcal);
    out.xi = (Interval(inf_ml) - L * Interval(sup_nxy)).lo;
    out.mu1 = (Interval(sup_lyy) + Interval(sup_nyx) / L).hi;
    out.mu2 = (Interval(sup_lyy) + L * Interval(sup_nxy)).hi;

    Interval denom = Interval(2.0) * Interval(out.xi) - Interval(out.mu2);
    if (!(out.mu1 < out.xi) || denom.lo <= 0.0) {
        std::ostringstream os;
        os << "curvature bound rate hypotheses fail: mu1 = " << out.mu1 << ", xi = " << out.xi
           << ", mu2 = " << out.mu2;
        throw RateHypothesisViolated(os.str());
    }
    Interval one_l2 = Interval(1.0) + sqr(L);
    double m_general = next_up(((L * Interval(out.C_x) + Interval(out.C_y)) * one_l2 / denom).hi);
    double m_improved = next_up(((L * Interval(out.C_x) * one_l2 + Interval(out.C_y1) +
                                  Interval(out.C_y2) * L + Interval(out.C_y3) * sqr(L)) /
                                 denom)
                                    .hi);
    out.improved_formula = m_improved <= m_general;
    out.M_bound = std::min(m_general, m_improved);
    if (out.M_bound <= 0.0) out.M_bound = next_up(0.0);
    return out;
}

struct NhimVerdict {
    bool pass = false;
    double L = 0.0;  // smallest verified aspect
    RateConstants rates;
    SlopeCheckResult slope;
    IsolatingBlockResult block;
    std::vector<std::string> failures;
};

// one full feasibility check of D(L)
inline NhimVerdict verify_domain(const ExprDag& f, const DomainSpec& d, int order_k) {
    NhimVerdict v;
    v.L = d.slope;
    v.rates = rate_constants(f, d);
    RateCheck rch = check_rate_conditions(v.rates, order_k);
    v.block = check_isolating_block(f, d);
    v.slope = slope_check(f, d, d.cone, SlopeMode::graph);
    v.failures = rch.violations;
    if (!v.block.pass) v.failures.push_back("isolating block: " + v.block.witness);
    if (!v.slope.pass) v.failures.push_back("slope check failed at the cone constant");
    v.pass = v.failures.empty();
    return v;
}

// Smallest aspect L (within a relative tolerance) whose domain D(L) passes
// rate conditions, the isolating block test and the slope check.  The
// caller supplies the domain factory L -> D(L).
inline NhimVerdict auto_L(const ExprDag& f, const std::function<DomainSpec(double)>& make_domain,
                          double L_max, int order_k = 2, double rel_tol = 1e-3) {
    if (!(L_max < 1.0)) throw DomainError("L_max must be below one");
    NhimVerdict at_max = verify_domain(f, make_domain(L_max), order_k);
    if (!at_max.pass) {
        std::string why = "rate conditions infeasible at L_max";
        for (const auto& s : at_max.failures) why += "; " + s;
        throw Infeasible(why);
    }
    double hi = L_max;
    NhimVerdict best = at_max;
    double lo = 0.0;
    for (double probe = L_max / 4.0; probe > 1e-14; probe /= 4.0) {
        NhimVerdict v = verify_domain(f, make_domain(probe), order_k);
        if (v.pass) {
            hi = probe;
            best = v;
        } else {
            lo = probe;
            break;
        }
    }
    if (lo == 0.0) return best;  // passes down to the numeric floor
    while ((hi - lo) > rel_tol * hi) {
        double mid = std::sqrt(lo * hi);  // geometric bisection over scales
        NhimVerdict v = verify_domain(f, make_domain(mid), order_k);
        if (v.pass) {
            hi = mid;
            best = v;
        } else {
            lo = mid;
        }
    }
    return best;
}

}  // namespace vmel
