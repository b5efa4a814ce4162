#pragma once

// Interval Newton operator  N(x, y0, Y) = y0 - [df/dy(x, Y)]^{-1} f(x, y0).
// When N is contained in Y it encloses the unique solution y(x) of
// f(x, y(x)) = 0 for every x in the given box.

#include <vmel/linalg.hpp>
#include <vmel/lognorm.hpp>

#include <functional>
#include <optional>

namespace vmel {

struct NewtonResult {
    bool contracted = false;
    IVector enclosure;  // meaningful only when contracted
};

// f_at_y0:   enclosure of f(x, y0) over the x box
// dfy_on_Y:  enclosure of df/dy over x box and candidate box Y
inline NewtonResult interval_newton_step(const IVector& f_at_y0, const IMatrix& dfy_on_Y,
                                         const IVector& y0, const IVector& Y) {
    if (mat_m_lower(dfy_on_Y) <= 0.0) throw SingularJacobian();
    IVector correction = solve(dfy_on_Y, f_at_y0);
    IVector n = y0 - correction;
    NewtonResult r;
    r.enclosure = n;
    r.contracted = true;
    for (std::size_t i = 0; i < n.size(); ++i)
        if (!n[i].subset_of(Y[i])) r.contracted = false;
    return r;
}

// Iterated interval Newton over a fixed x box.  Shrinks the candidate by
// intersection (root preserving) and reports success once one step maps
// the candidate strictly into itself.  Returns the refined enclosure, or
// nullopt when no contraction could be verified.
inline std::optional<IVector> interval_newton(
    const std::function<IVector(const IVector&)>& f,          // f(x box, y) at point-ish y
    const std::function<IMatrix(const IVector&)>& dfy,        // df/dy over (x box, Y)
    const IVector& y0, const IVector& Y, int max_iter = 20) {
    IVector cur = Y;
    IVector base = y0;
    bool verified = false;
    for (int it = 0; it < max_iter; ++it) {
        NewtonResult step;
        try {
            step = interval_newton_step(f(base), dfy(cur), base, cur);
        } catch (const SingularJacobian&) {
            break;
        }
        verified = verified || step.contracted;
        IVector next(cur.size());
        bool progress = false;
        bool disjoint = false;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (!step.enclosure[i].intersects(cur[i])) { disjoint = true; break; }
            next[i] = step.enclosure[i].intersect(cur[i]);
            if (next[i].width() < 0.99 * cur[i].width()) progress = true;
        }
        if (disjoint) return std::nullopt;  // Newton image misses the box: no root
        cur = next;
        base = cur.mid();
        if (!progress && verified) break;
        if (!progress && !verified) return std::nullopt;
    }
    return verified ? std::optional<IVector>(cur) : std::nullopt;
}

// scalar convenience form
inline std::optional<Interval> interval_newton_1d(
    const std::function<Interval(const Interval&)>& f,
    const std::function<Interval(const Interval&)>& df,
    const Interval& Y, int max_iter = 20) {
    auto fv = [&](const IVector& y) { return IVector{f(y[0])}; };
    auto dv = [&](const IVector& y) {
        IMatrix m(1, 1);
        m(0, 0) = df(y[0]);
        return m;
    };
    IVector y0{Interval(Y.mid())};
    auto r = interval_newton(fv, dv, y0, IVector{Y}, max_iter);
    if (!r) return std::nullopt;
    return (*r)[0];
}

}  // namespace vmel
