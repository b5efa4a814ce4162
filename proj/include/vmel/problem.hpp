#pragma once

// The reference problem: a periodically forced planar system with a
// saddle connection, expressed in extended coordinates (x, eps, t, y),
// together with the local coordinate frames that align the unstable and
// stable manifolds of its periodic-orbit family with coordinate planes.
// Other systems enter the pipeline through the same ProblemSpec contract.

#include <vmel/expr.hpp>
#include <vmel/jet.hpp>
#include <vmel/series.hpp>


namespace vmel {

class ResonanceObstruction : public error {
public:
    ResonanceObstruction() : error("eigenvalue combination vanishes in power matching") {}
};

struct ParamSeed {
    Poly k2;  // fiber graph coefficients, k2[0] = k2[1] = 0
    Poly r;   // conjugated dynamics coefficients, r[0] = 0
    int order = 0;
};

// Power matching for a planar field with diagonal linear part: find
// K(s) = (s, K2(s)) and R(s) with F(K(s)) = DK(s) R(s) through the stated
// order.  Component one gives R = F1(K); component two determines the K2
// coefficients degree by degree.
inline ParamSeed param_method_seed(const ExprDag& field2d, int order) {
    if (field2d.arity() != 2 || field2d.output_count() != 2) throw DimensionMismatch();
    Jet2 at0 = eval_jet2(field2d, IVector{Interval(0.0), Interval(0.0)});
    if (at0.value[0].mag() > 1e-12 || at0.value[1].mag() > 1e-12)
        throw error("power matching requires a fixed point at the origin");
    if (at0.jacobian(0, 1).mag() > 1e-12 || at0.jacobian(1, 0).mag() > 1e-12)
        throw error("power matching requires a diagonalized linear part");
    const Interval lam_u = at0.jacobian(0, 0);
    const Interval lam_s = at0.jacobian(1, 1);

    Poly k2(order + 1, Interval(0.0));
    auto eval_series = [&](const Poly& k2cur) {
        SeriesEvaluator<IntervalRing> se(field2d, IntervalRing{}, order);
        for (int k = 0; k <= order; ++k) {
            se.set_var_coeff(0, k, (k == 1) ? Interval(1.0) : Interval(0.0));
            se.set_var_coeff(1, k, k2cur[k]);
            se.pass(k);
        }
        return se;
    };

    for (int d = 2; d <= order; ++d) {
        SeriesEvaluator<IntervalRing> se = eval_series(k2);
        // G_d = [F2(K) - K2' * F1(K)]_d with the degree-d unknown still zero
        Interval g = se.output_coeff(1, d);
        for (int j = 2; j < d; ++j)  // (K2' F1)_d = sum j*k2_j * F1_{d-j+1}
            g -= Interval(double(j)) * k2[j] * se.output_coeff(0, d - j + 1);
        Interval divisor = Interval(double(d)) * lam_u - lam_s;
        if (divisor.contains_zero()) throw ResonanceObstruction();
        k2[d] = g / divisor;
    }

    ParamSeed seed;
    seed.k2 = k2;
    seed.order = order;
    SeriesEvaluator<IntervalRing> se = eval_series(k2);
    seed.r.assign(order + 1, Interval(0.0));
    for (int k = 0; k <= order; ++k) seed.r[k] = se.output_coeff(0, k);
    return seed;
}

// residual F(K(s)) - DK(s) R(s) at s; tight for point arguments, a coarse
// containment for interval arguments
inline IVector param_seed_residual(const ExprDag& field2d, const ParamSeed& seed, const Interval& s) {
    Interval k2s = poly_eval(seed.k2, s);
    Interval dk2s = poly_eval(poly_derivative(seed.k2), s);
    Interval rs = poly_eval(seed.r, s);
    IVector fk = field2d.eval(IVector{s, k2s});
    return IVector{fk[0] - rs, fk[1] - dk2s * rs};
}

struct BranchFrame {
    ExprDag local_field;   // vector field in aligned local coordinates
    IMatrix linear;        // constant linear change C
    IMatrix linear_inv;    // C^{-1}
    ExprDag psi;           // nonlinear shear, local -> sheared
    ExprDag psi_inv;
    int crossing_direction;  // sign of the section-normal velocity at arrival

    BranchFrame() : local_field({""}), psi({""}), psi_inv({""}), crossing_direction(0) {}
};

struct SectionSpec {
    std::size_t coordinate = 3;
    double level = 0.0;
};

struct ProblemSpec {
    std::vector<std::string> coords;       // ambient coordinate names
    std::vector<CoordTopology> topology;   // per ambient coordinate
    ExprDag ambient;                       // extended field, eps' = 0, t' = 1
    ExprDag diag2d;                        // planar eps = 0 field in diagonal coordinates
    ParamSeed seed;
    BranchFrame unstable;                  // frame for the forward field
    BranchFrame stable;                    // frame for the reversed field
    SectionSpec section;
    double fiber_radius = 0.0;             // r
    Interval eps_range;                    // E
    // published reference values kept for regression comparisons
    double published_slope = 0.0;
    double published_second = 0.0;

    ProblemSpec() : ambient({""}), diag2d({""}) {}

    std::size_t dim() const { return coords.size(); }
};

namespace detail {

// K2 polynomial as a DAG subexpression (Horner)
inline NodeId poly_node(ExprDag& d, const Poly& p, NodeId x) {
    NodeId acc = d.constant(p.back());
    for (std::size_t i = p.size() - 1; i-- > 0;) acc = d.add(d.mul(acc, x), d.constant(p[i]));
    return acc;
}

}  // namespace detail

// Build the reference problem over a parameter range E with fiber radius r.
inline ProblemSpec build_example(const Interval& E, double r, int seed_order = 3) {
    if (E.lo < 0.0 || E.hi > 0.1) throw DomainError("parameter range out of the supported band");
    if (r <= 0.0) throw DomainError("fiber radius must be positive");

    ProblemSpec p;
    p.coords = {"x", "eps", "t", "y"};
    p.topology.assign(4, CoordTopology{});
    p.topology[2] = CoordTopology{true, two_pi_interval().mid()};
    p.fiber_radius = r;
    p.eps_range = E;
    p.published_slope = 6.278276608e-6;
    p.published_second = 1.1271e-3;

    p.ambient = parse_field(p.coords, {"y - eps*cos(t)*sqr(y)", "0", "1", "x - sqr(x)"});

    // planar eps = 0 field diagonalized by (x,y) = C(u,v), C = [[1,-1],[1,1]]
    p.diag2d = parse_field({"u", "v"}, {"u - 0.5*sqr(u - v)", "-v - 0.5*sqr(u - v)"});
    p.seed = param_method_seed(p.diag2d, seed_order);

    const std::vector<std::string> lc = {"xb", "eps", "t", "yb"};

    // unstable frame
    {
        BranchFrame& b = p.unstable;
        ExprDag f(lc);
        NodeId xb = f.var(0u), eps = f.var(1u), t = f.var(2u), yb = f.var(3u);
        NodeId k2 = detail::poly_node(f, p.seed.k2, xb);
        NodeId dk2 = detail::poly_node(f, poly_derivative(p.seed.k2), xb);
        NodeId half = f.constant(0.5);
        NodeId plus = f.add(f.add(xb, yb), k2);    // xb + yb + K2
        NodeId minus = f.sub(f.sub(xb, yb), k2);   // xb - yb - K2
        NodeId forcing = f.mul(f.mul(half, f.mul(eps, f.cos_node(t))), f.sqr_node(plus));
        NodeId f1 = f.sub(f.sub(xb, forcing), f.mul(half, f.sqr_node(minus)));
        NodeId h = f.sub(f.add(f.sub(f.neg(yb), k2), forcing), f.mul(half, f.sqr_node(minus)));
        NodeId f4 = f.add(f.neg(f.mul(dk2, f1)), h);
        f.set_outputs({f1, f.constant(0.0), f.constant(1.0), f4});
        b.local_field = std::move(f);

        b.linear = IMatrix(4, 4);
        b.linear_inv = IMatrix(4, 4);
        const double cu[4][4] = {{1, 0, 0, -1}, {0, 1, 0, 0}, {0, 0, 1, 0}, {1, 0, 0, 1}};
        const double cui[4][4] = {{0.5, 0, 0, 0.5}, {0, 1, 0, 0}, {0, 0, 1, 0}, {-0.5, 0, 0, 0.5}};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                b.linear(i, j) = Interval(cu[i][j]);
                b.linear_inv(i, j) = Interval(cui[i][j]);
            }

        ExprDag psi(lc);
        NodeId px = psi.var(0u);
        psi.set_outputs({px, psi.var(1u), psi.var(2u),
                         psi.add(psi.var(3u), detail::poly_node(psi, p.seed.k2, px))});
        b.psi = std::move(psi);
        ExprDag psi_inv(lc);
        NodeId qx = psi_inv.var(0u);
        psi_inv.set_outputs({qx, psi_inv.var(1u), psi_inv.var(2u),
                             psi_inv.sub(psi_inv.var(3u), detail::poly_node(psi_inv, p.seed.k2, qx))});
        b.psi_inv = std::move(psi_inv);
        b.crossing_direction = -1;
    }

    // stable frame (for the reversed field)
    {
        BranchFrame& b = p.stable;
        ExprDag f(lc);
        NodeId xb = f.var(0u), eps = f.var(1u), t = f.var(2u), yb = f.var(3u);
        NodeId k2 = detail::poly_node(f, p.seed.k2, xb);
        NodeId dk2 = detail::poly_node(f, poly_derivative(p.seed.k2), xb);
        NodeId half = f.constant(0.5);
        NodeId plus = f.sub(f.sub(yb, xb), k2);    // -xb + yb - K2
        NodeId minus = f.sub(f.add(xb, yb), k2);   // xb + yb - K2
        NodeId forcing = f.mul(f.mul(half, f.mul(eps, f.cos_node(t))), f.sqr_node(plus));
        NodeId f1 = f.sub(f.add(xb, forcing), f.mul(half, f.sqr_node(minus)));
        NodeId h = f.add(f.add(f.add(f.neg(yb), k2), forcing), f.mul(half, f.sqr_node(minus)));
        NodeId f4 = f.add(f.mul(dk2, f1), h);
        f.set_outputs({f1, f.constant(0.0), f.constant(-1.0), f4});
        b.local_field = std::move(f);

        b.linear = IMatrix(4, 4);
        b.linear_inv = IMatrix(4, 4);
        const double cs[4][4] = {{1, 0, 0, 1}, {0, 1, 0, 0}, {0, 0, 1, 0}, {-1, 0, 0, 1}};
        const double csi[4][4] = {{0.5, 0, 0, -0.5}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0.5, 0, 0, 0.5}};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                b.linear(i, j) = Interval(cs[i][j]);
                b.linear_inv(i, j) = Interval(csi[i][j]);
            }

        ExprDag psi(lc);
        NodeId px = psi.var(0u);
        psi.set_outputs({px, psi.var(1u), psi.var(2u),
                         psi.sub(psi.var(3u), detail::poly_node(psi, p.seed.k2, px))});
        b.psi = std::move(psi);
        ExprDag psi_inv(lc);
        NodeId qx = psi_inv.var(0u);
        psi_inv.set_outputs({qx, psi_inv.var(1u), psi_inv.var(2u),
                             psi_inv.add(psi_inv.var(3u), detail::poly_node(psi_inv, p.seed.k2, qx))});
        b.psi_inv = std::move(psi_inv);
        b.crossing_direction = +1;
    }

    p.section = SectionSpec{3, 0.0};
    return p;
}

// reversing symmetry S(x, y) = (x, -y) of the planar eps = 0 system
inline IVector symmetry_transport(const IVector& planar_point) {
    if (planar_point.size() != 2) throw DimensionMismatch();
    return IVector{planar_point[0], -planar_point[1]};
}

// energy of the planar eps = 0 system, H = (y^2 - x^2)/2 + x^3/3
inline Interval example_energy(const Interval& x, const Interval& y) {
    return Interval(0.5) * (sqr(y) - sqr(x)) + sqr(x) * x / Interval(3.0);
}

}  // namespace vmel
