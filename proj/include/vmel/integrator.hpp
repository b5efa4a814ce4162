#pragma once

// Validated integration of x' = f(x) together with first and second
// variational data, by an interval Taylor method with Lohner QR frames.
//
// A step of size h decomposes the flow map as
//   phi_h(z)  in  poly(center) + remainder + T (z - center),
// where poly is the order-p Taylor polynomial evaluated tightly at the
// point center, T encloses D phi_h over the whole step set (including its
// Lagrange remainder through a rough enclosure of the step tube), and the
// set part is stored as  center + B r  with B an orthonormal frame that is
// transported through mid(T B) and re-orthonormalized, which keeps the
// wrapping of elongated sets under control.  Carried first and second
// derivatives with respect to the seed parameters are composed with the
// one-step jet,
//   V_new = T V,   W_new(a,b) = T W(a,b) + S(V e_a, V e_b),
// where S is the one-step Hessian enclosure with its own remainder.

#include <vmel/jet.hpp>
#include <vmel/series.hpp>


namespace vmel {

class TooLarge : public error {
public:
    explicit TooLarge(const std::string& w) : error(w) {}
};

class StepFloor : public error {
public:
    StepFloor() : error("step size fell below the configured floor") {}
};

enum class VariationalOrder { none = 0, first = 1, second = 2 };

struct StepControl {
    int order = 8;            // Taylor order p
    double tolerance = 1e-10; // local error target per step
    double h_min = 1e-7;
    double h_max = 0.2;
    VariationalOrder variational = VariationalOrder::second;
};

struct FlowJet {
    Interval time;

    // state set: xhat + B r
    IVector xhat;
    IMatrix B;
    IVector r;

    // carried d(phi)/d(seed): Vhat + B Vdev  (n x m)
    IMatrix Vhat;
    IMatrix Vdev;

    // carried second derivatives, packed slices a <= b: What[p] + B Wdev[p]
    std::vector<IVector> What;
    std::vector<IVector> Wdev;

    std::size_t dim() const { return xhat.size(); }
    std::size_t params() const { return Vhat.cols(); }

    static std::size_t pair_index(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        return b * (b + 1) / 2 + a;
    }

    IVector state_hull() const { return xhat + B * r; }
    IMatrix deriv_hull() const { return Vhat + B * Vdev; }
    IVector hess_slice_hull(std::size_t a, std::size_t b) const {
        std::size_t p = pair_index(a, b);
        return What[p] + B * Wdev[p];
    }
    // per-output Hessian matrices (m x m), symmetric
    std::vector<IMatrix> hess_by_output() const {
        const std::size_t n = dim(), m = params();
        std::vector<IMatrix> out(n, IMatrix(m, m));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) {
                IVector s = hess_slice_hull(a, b);
                for (std::size_t i = 0; i < n; ++i) {
                    out[i](a, b) = s[i];
                    out[i](b, a) = s[i];
                }
            }
        return out;
    }
    Jet2 to_jet() const {
        Jet2 j(dim(), params());
        j.value = state_hull();
        j.jacobian = deriv_hull();
        j.hess = hess_by_output();
        return j;
    }
};

// seed a flow jet from a parameterized initial set
inline FlowJet seed_flow_jet(const Jet2& init, VariationalOrder vo) {
    FlowJet fj;
    fj.time = Interval(0.0);
    const std::size_t n = init.outputs();
    const std::size_t m = (vo == VariationalOrder::none) ? 0 : init.params();
    fj.xhat = init.value.mid();
    fj.B = IMatrix::identity(n);
    fj.r = init.value - fj.xhat;
    fj.Vhat = IMatrix(n, m);
    fj.Vdev = IMatrix(n, m);
    if (m) {
        IMatrix vm(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) vm(i, j) = Interval(init.jacobian(i, j).mid());
        fj.Vhat = vm;
        fj.Vdev = init.jacobian - vm;
    }
    if (vo == VariationalOrder::second) {
        fj.What.assign(m * (m + 1) / 2, IVector(n));
        fj.Wdev.assign(m * (m + 1) / 2, IVector(n));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) {
                std::size_t p = FlowJet::pair_index(a, b);
                for (std::size_t i = 0; i < n; ++i) {
                    Interval h = init.hess[i](a, b);
                    double c = h.mid();
                    fj.What[p][i] = Interval(c);
                    fj.Wdev[p][i] = h - c;
                }
            }
    }
    return fj;
}

inline FlowJet seed_flow_jet(const Box& box, VariationalOrder vo) {
    return seed_flow_jet(identity_jet(box.v), vo);
}

// first-order rough enclosure: a box Y with  x0 + [0,h] f(Y) inside Y
inline IVector rough_enclosure(const ExprDag& f, const IVector& x0, double h, int retries = 16) {
    Interval span(0.0, h);
    IVector y = x0;
    // initial guess from one Euler evaluation, inflated
    IVector fy = f.eval(y);
    for (std::size_t i = 0; i < y.size(); ++i) {
        Interval grow = span * fy[i];
        y[i] = (x0[i] + grow.hull_with(Interval(0.0)));
        double pad = 0.1 * y[i].width() + 1e-300;
        y[i] = y[i] + Interval(-pad, pad);
    }
    double scale0 = 1.0;
    for (std::size_t i = 0; i < x0.size(); ++i) scale0 = std::max(scale0, x0[i].mag());
    for (int it = 0; it < retries; ++it) {
        IVector cand = x0 + span * f.eval(y);
        bool inside = true;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (!std::isfinite(cand[i].lo) || !std::isfinite(cand[i].hi) || cand[i].width() > 1e6 * scale0)
                throw TooLarge("rough enclosure blows up");
            if (!cand[i].subset_of(y[i])) inside = false;
        }
        if (inside) {
            // one tightening sweep
            return x0 + span * f.eval(cand);
        }
        for (std::size_t i = 0; i < y.size(); ++i) {
            Interval wide = cand[i].hull_with(y[i]);
            double pad = 0.2 * wide.width() + 1e-300;
            y[i] = wide + Interval(-pad, pad);
        }
    }
    throw TooLarge("rough enclosure did not stabilize");
}

namespace detail {

// rough enclosure of the one-step variational matrix (identity seed)
inline IMatrix rough_variational(const IMatrix& jac_y, double h, int retries = 12) {
    const std::size_t n = jac_y.rows();
    Interval span(0.0, h);
    IMatrix v = IMatrix::identity(n);
    double pad0 = (span * Interval(mat_opnorm_sup(jac_y))).hi;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) v(i, j) += Interval(-2 * pad0 - 1e-16, 2 * pad0 + 1e-16);
    for (int it = 0; it < retries; ++it) {
        IMatrix cand = IMatrix::identity(n) + span * (jac_y * v);
        bool inside = true;
        for (std::size_t i = 0; i < cand.e.size(); ++i)
            if (!cand.e[i].subset_of(v.e[i])) inside = false;
        if (inside) return IMatrix::identity(n) + span * (jac_y * cand);
        for (std::size_t i = 0; i < v.e.size(); ++i) {
            Interval wide = cand.e[i].hull_with(v.e[i]);
            double pad = 0.2 * wide.width() + 1e-16;
            v.e[i] = wide + Interval(-pad, pad);
        }
    }
    throw TooLarge("variational rough enclosure did not stabilize");
}

// bilinear contraction  sum_ij H[out](i,j) u_i v_j  per output
inline IVector hess_apply(const std::vector<IMatrix>& hess, const IVector& u, const IVector& v) {
    IVector out(hess.size());
    for (std::size_t o = 0; o < hess.size(); ++o) {
        Interval s(0.0);
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u[i].lo == 0 && u[i].hi == 0) continue;
            Interval row(0.0);
            for (std::size_t j = 0; j < v.size(); ++j) row += hess[o](i, j) * v[j];
            s += u[i] * row;
        }
        out[o] = s;
    }
    return out;
}

// rough enclosure of the one-step second variational slices (zero seed)
inline std::vector<IVector> rough_second(const Jet2& fy, const IMatrix& vr, double h, int retries = 12) {
    const std::size_t n = fy.outputs();
    Interval span(0.0, h);
    std::vector<IVector> w(n * (n + 1) / 2, IVector(n));
    std::vector<IVector> source(n * (n + 1) / 2, IVector(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b) {
            IVector va(n), vb(n);
            for (std::size_t i = 0; i < n; ++i) {
                va[i] = vr(i, a);
                vb[i] = vr(i, b);
            }
            source[FlowJet::pair_index(a, b)] = hess_apply(fy.hess, va, vb);
        }
    for (int it = 0; it < retries; ++it) {
        bool inside = true;
        std::vector<IVector> cand(w.size(), IVector(n));
        for (std::size_t p = 0; p < w.size(); ++p) {
            cand[p] = span * (source[p] + fy.jacobian * w[p]);
            for (std::size_t i = 0; i < n; ++i)
                if (!cand[p][i].subset_of(w[p][i])) inside = false;
        }
        if (inside) {
            for (std::size_t p = 0; p < w.size(); ++p)
                cand[p] = span * (source[p] + fy.jacobian * cand[p]);
            return cand;
        }
        for (std::size_t p = 0; p < w.size(); ++p)
            for (std::size_t i = 0; i < n; ++i) {
                Interval wide = cand[p][i].hull_with(w[p][i]);
                double pad = 0.2 * wide.width() + 1e-18;
                w[p][i] = wide + Interval(-pad, pad);
            }
    }
    throw TooLarge("second variational rough enclosure did not stabilize");
}

// orthonormal point frame from the columns of a midpoint matrix, columns
// sorted by transported deviation size (classic Lohner heuristic)
inline IMatrix qr_frame(const IMatrix& tb, const IVector& r) {
    const std::size_t n = tb.rows();
    std::vector<std::vector<double>> cols(n, std::vector<double>(n));
    std::vector<double> weight(n);
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < n; ++j) {
        double len2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            cols[j][i] = tb(i, j).mid();
            len2 += cols[j][i] * cols[j][i];
        }
        weight[j] = std::sqrt(len2) * r[j].width();
        order[j] = j;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
    IMatrix q(n, n);
    std::vector<std::vector<double>> basis;
    for (std::size_t idx = 0; idx < n; ++idx) {
        std::vector<double> v = cols[order[idx]];
        for (const auto& e : basis) {
            double d = 0;
            for (std::size_t i = 0; i < n; ++i) d += v[i] * e[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= d * e[i];
        }
        double len = 0;
        for (double x : v) len += x * x;
        len = std::sqrt(len);
        if (len < 1e-140) {
            // degenerate direction: fall back to a unit vector orthogonalized
            v.assign(n, 0.0);
            v[idx] = 1.0;
            for (const auto& e : basis) {
                double d = 0;
                for (std::size_t i = 0; i < n; ++i) d += v[i] * e[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= d * e[i];
            }
            len = 0;
            for (double x : v) len += x * x;
            len = std::sqrt(len);
        }
        for (auto& x : v) x /= len;
        basis.push_back(v);
        for (std::size_t i = 0; i < n; ++i) q(i, basis.size() - 1) = Interval(v[i]);
    }
    return q;
}

struct OneStepJet {
    Interval h;                 // step span actually taken (point or small interval)
    IVector value;              // phi_h(center) + remainder, tight
    IMatrix T;                  // D phi_h over the whole step set
    std::vector<Jet2> set_coeffs;   // order 0..p coefficients over the start hull
    Jet2 rem_coeff;                 // coefficient p+1 over the step tube
    IMatrix vrough;                 // one-step variational rough enclosure
    std::vector<IVector> wrough;    // one-step second variational rough slices
    IVector tube;                   // rough enclosure of the step
    bool second_order = false;
};

// one-step Hessian enclosure applied to interval directions u, v
inline IVector step_hessian_apply(const OneStepJet& s, const IVector& u, const IVector& v,
                                  const std::vector<Interval>& hpow) {
    const std::size_t n = u.size();
    IVector acc(n);
    for (std::size_t k = 0; k <= s.set_coeffs.size() - 1; ++k) {
        IVector term = hess_apply(s.set_coeffs[k].hess, u, v);
        for (std::size_t i = 0; i < n; ++i) acc[i] += term[i] * hpow[k];
    }
    IVector ur = s.vrough * u, vr_ = s.vrough * v;
    IVector rem = hess_apply(s.rem_coeff.hess, ur, vr_);
    // the W contribution of the remainder: jac of the remainder coefficient
    // times the rough second variational contracted with u, v
    IVector wuv(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            Interval c = u[a] * v[b];
            if (c.lo == 0 && c.hi == 0) continue;
            const IVector& slice = s.wrough[FlowJet::pair_index(a, b)];
            for (std::size_t i = 0; i < n; ++i) wuv[i] += c * slice[i];
        }
    IVector jair = s.rem_coeff.jacobian * wuv;
    const Interval& hp1 = hpow[s.set_coeffs.size()];
    for (std::size_t i = 0; i < n; ++i) acc[i] += (rem[i] + jair[i]) * hp1;
    return acc;
}

}  // namespace detail

// Build the one-step flow jet with step h over the current set.
inline detail::OneStepJet one_step_jet(const ExprDag& f, const FlowJet& fj, const StepControl& ctrl,
                                       double h, const Interval& h_span) {
    const std::size_t n = fj.dim();
    const int p = ctrl.order;
    const bool second = ctrl.variational == VariationalOrder::second;

    detail::OneStepJet out;
    out.h = h_span;
    out.second_order = second;

    IVector hull = fj.state_hull();
    out.tube = rough_enclosure(f, hull, h);

    // point series at the center
    SeriesEvaluator<IntervalRing> ps(f, IntervalRing{}, p);
    {
        for (std::size_t i = 0; i < n; ++i) ps.set_var_coeff(i, 0, fj.xhat[i]);
        ps.pass(0);
        for (int k = 0; k < p; ++k) {
            Interval inv = Interval(1.0) / Interval(double(k + 1));
            for (std::size_t i = 0; i < n; ++i) ps.set_var_coeff(i, k + 1, ps.output_coeff(i, k) * inv);
            ps.pass(k + 1);
        }
    }

    // jet series over the start hull (coefficients 0..p)
    JetRing ring{n};
    SeriesEvaluator<JetRing> ss(f, ring, p);
    {
        for (std::size_t i = 0; i < n; ++i) {
            ScalarJet2 j(n);
            if (!second) j.h.clear();
            j.v = hull[i];
            j.g[i] = Interval(1.0);
            ss.set_var_coeff(i, 0, j);
        }
        ss.pass(0);
        for (int k = 0; k < p; ++k) {
            Interval inv = Interval(1.0) / Interval(double(k + 1));
            for (std::size_t i = 0; i < n; ++i) ss.set_var_coeff(i, k + 1, ring.scale(ss.output_coeff(i, k), inv));
            ss.pass(k + 1);
        }
    }

    // jet series over the tube (remainder coefficient p+1)
    SeriesEvaluator<JetRing> rs(f, ring, p + 1);
    {
        for (std::size_t i = 0; i < n; ++i) {
            ScalarJet2 j(n);
            if (!second) j.h.clear();
            j.v = out.tube[i];
            j.g[i] = Interval(1.0);
            rs.set_var_coeff(i, 0, j);
        }
        rs.pass(0);
        for (int k = 0; k <= p; ++k) {
            Interval inv = Interval(1.0) / Interval(double(k + 1));
            for (std::size_t i = 0; i < n; ++i) rs.set_var_coeff(i, k + 1, ring.scale(rs.output_coeff(i, k), inv));
            rs.pass(k + 1);
        }
    }

    out.set_coeffs.assign(p + 1, Jet2(n, n));
    {
        // rebuild the state coefficient jets: order 0 is the identity seed,
        // order k+1 = output coefficient k / (k+1)
        for (std::size_t i = 0; i < n; ++i) {
            out.set_coeffs[0].value[i] = hull[i];
            out.set_coeffs[0].jacobian(i, i) = Interval(1.0);
        }
        for (int k = 1; k <= p; ++k) {
            Interval inv = Interval(1.0) / Interval(double(k));
            for (std::size_t i = 0; i < n; ++i) {
                ScalarJet2 c = ring.scale(ss.output_coeff(i, k - 1), inv);
                out.set_coeffs[k].value[i] = c.v;
                for (std::size_t j = 0; j < n; ++j) out.set_coeffs[k].jacobian(i, j) = c.g[j];
                if (second)
                    for (std::size_t a = 0; a < n; ++a)
                        for (std::size_t b = 0; b < n; ++b) out.set_coeffs[k].hess[i](a, b) = c.hess(a, b);
            }
        }
    }
    {
        out.rem_coeff = Jet2(n, n);
        Interval inv = Interval(1.0) / Interval(double(p + 1));
        for (std::size_t i = 0; i < n; ++i) {
            ScalarJet2 c = ring.scale(rs.output_coeff(i, p), inv);
            out.rem_coeff.value[i] = c.v;
            for (std::size_t j = 0; j < n; ++j) out.rem_coeff.jacobian(i, j) = c.g[j];
            if (second)
                for (std::size_t a = 0; a < n; ++a)
                    for (std::size_t b = 0; b < n; ++b) out.rem_coeff.hess[i](a, b) = c.hess(a, b);
        }
    }

    // rough variational enclosures for the remainder formulas
    Jet2 fy = eval_jet2(f, out.tube);
    out.vrough = detail::rough_variational(fy.jacobian, h);
    if (second) out.wrough = detail::rough_second(fy, out.vrough, h);

    // powers of the step span
    std::vector<Interval> hpow(p + 2);
    hpow[0] = Interval(1.0);
    for (int k = 1; k <= p + 1; ++k) hpow[k] = hpow[k - 1] * h_span;

    // tight new center: point polynomial plus value remainder
    out.value = IVector(n);
    for (std::size_t i = 0; i < n; ++i) {
        Interval acc = fj.xhat[i];
        for (int k = 0; k < p; ++k)
            acc += ps.output_coeff(i, k) / Interval(double(k + 1)) * hpow[k + 1];
        acc += out.rem_coeff.value[i] * hpow[p + 1];
        out.value[i] = acc;
    }

    // transition enclosure T = sum A_k h^k + remainder
    out.T = IMatrix(n, n);
    for (int k = 0; k <= p; ++k) out.T = out.T + hpow[k] * out.set_coeffs[k].jacobian;
    out.T = out.T + hpow[p + 1] * (out.rem_coeff.jacobian * out.vrough);
    return out;
}

// error estimate for step selection: magnitude of the highest point coefficient
inline double select_step(const ExprDag& f, const FlowJet& fj, const StepControl& ctrl, double remaining) {
    const int p = ctrl.order;
    SeriesEvaluator<IntervalRing> ps(f, IntervalRing{}, p);
    const std::size_t n = fj.dim();
    for (std::size_t i = 0; i < n; ++i) ps.set_var_coeff(i, 0, fj.xhat[i]);
    ps.pass(0);
    for (int k = 0; k < p; ++k) {
        Interval inv = Interval(1.0) / Interval(double(k + 1));
        for (std::size_t i = 0; i < n; ++i) ps.set_var_coeff(i, k + 1, ps.output_coeff(i, k) * inv);
        ps.pass(k + 1);
    }
    double cp = 0;  // |x_p| = |f-coefficient p-1| / p
    for (std::size_t i = 0; i < n; ++i)
        cp = std::max(cp, (ps.output_coeff(i, p - 1) / Interval(double(p))).mag());
    double h = ctrl.h_max;
    if (cp > 0) h = std::min(h, std::pow(ctrl.tolerance / cp, 1.0 / p));
    h = std::max(h, ctrl.h_min);
    return std::min(h, remaining);
}

// advance the flow jet by the one-step data
inline void apply_step(FlowJet& fj, const detail::OneStepJet& s) {
    const std::size_t n = fj.dim();
    const std::size_t m = fj.params();

    // carried derivative hull at step start, needed by the W update
    IMatrix vh_start;
    if (s.second_order && !fj.What.empty()) vh_start = fj.Vhat + fj.B * fj.Vdev;

    IMatrix tb = s.T * fj.B;
    IMatrix bnew = detail::qr_frame(tb, fj.r);
    IMatrix binv = inverse(bnew);
    IMatrix frame_map = binv * tb;  // maps old frame deviations to the new frame

    // state
    IVector center = s.value;
    IVector xnew = center.mid();
    IVector spread = center - xnew;
    fj.r = frame_map * fj.r + binv * spread;
    fj.xhat = xnew;

    // first variational
    if (m) {
        IMatrix mv = s.T * fj.Vhat;
        IMatrix vhat_new = mv.mid();
        fj.Vdev = frame_map * fj.Vdev + binv * (mv - vhat_new);
        fj.Vhat = vhat_new;
    }

    // second variational slices: T W + S(V e_a, V e_b)
    if (s.second_order && !fj.What.empty()) {
        std::vector<Interval> hpow(s.set_coeffs.size() + 1);
        hpow[0] = Interval(1.0);
        for (std::size_t k = 1; k < hpow.size(); ++k) hpow[k] = hpow[k - 1] * s.h;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b) {
                std::size_t p = FlowJet::pair_index(a, b);
                IVector va(n), vb(n);
                for (std::size_t i = 0; i < n; ++i) {
                    va[i] = vh_start(i, a);
                    vb[i] = vh_start(i, b);
                }
                IVector sab = detail::step_hessian_apply(s, va, vb, hpow);
                IVector mw = s.T * fj.What[p] + sab;
                IVector what_new = mw.mid();
                fj.Wdev[p] = frame_map * fj.Wdev[p] + binv * (mw - what_new);
                fj.What[p] = what_new;
            }
    }
    fj.B = bnew;
    fj.time += s.h;
}

// Integrate up to the absolute time T > 0 on the jet's clock (a freshly
// seeded jet starts at zero); reverse time is handled by negating the field.
inline FlowJet integrate(const ExprDag& f, FlowJet fj, double T, const StepControl& ctrl) {
    if (!(T > 0.0)) throw DomainError("integration time must be positive");
    const Interval target(T);
    double h_cap = ctrl.h_max;
    while (true) {
        Interval remaining = target - fj.time;
        if (remaining.hi <= 0.0) break;
        double h = std::min(h_cap, select_step(f, fj, ctrl, remaining.hi));
        bool final_step = h >= remaining.hi;
        if (final_step) h = remaining.hi;
        detail::OneStepJet s;
        for (;;) {
            try {
                // the accumulated time enclosure is ulp-wide, far below h_min,
                // so the final span never reaches below zero
                Interval span = final_step ? Interval(std::max(0.0, remaining.lo), remaining.hi)
                                           : Interval(h);
                s = one_step_jet(f, fj, ctrl, span.hi, span);
                break;
            } catch (const TooLarge&) {
                if (h <= ctrl.h_min * (1 + 1e-12)) throw StepFloor();
                h = std::max(ctrl.h_min, h / 2);
                final_step = h >= remaining.hi;
            }
        }
        apply_step(fj, s);
        if (final_step) break;
        h_cap = std::min(ctrl.h_max, h * 1.5);  // retry damping for the next step
    }
    return fj;
}

}  // namespace vmel
