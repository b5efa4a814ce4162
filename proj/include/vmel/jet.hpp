#pragma once

// Second-order forward jets over expression DAGs: value, Jacobian and
// Hessian enclosures of a field over a box, plus the chain rule needed to
// transport them through coordinate changes.

#include <vmel/expr.hpp>
#include <vmel/linalg.hpp>

namespace vmel {

// scalar jet of one DAG node: value, gradient, packed symmetric Hessian
struct ScalarJet2 {
    Interval v;
    std::vector<Interval> g;  // size n
    std::vector<Interval> h;  // size n*(n+1)/2, row-major lower triangle

    explicit ScalarJet2(std::size_t n = 0) : g(n), h(n * (n + 1) / 2) {}
    std::size_t params() const { return g.size(); }
    Interval& hess(std::size_t i, std::size_t j) {
        if (j > i) std::swap(i, j);
        return h[i * (i + 1) / 2 + j];
    }
    const Interval& hess(std::size_t i, std::size_t j) const {
        if (j > i) std::swap(i, j);
        return h[i * (i + 1) / 2 + j];
    }
};

namespace jetops {

inline ScalarJet2 constant(const Interval& c, std::size_t n) {
    ScalarJet2 r(n);
    r.v = c;
    return r;
}

inline ScalarJet2 add(const ScalarJet2& a, const ScalarJet2& b) {
    ScalarJet2 r(a.params());
    r.v = a.v + b.v;
    for (std::size_t i = 0; i < a.g.size(); ++i) r.g[i] = a.g[i] + b.g[i];
    for (std::size_t i = 0; i < a.h.size(); ++i) r.h[i] = a.h[i] + b.h[i];
    return r;
}

inline ScalarJet2 sub(const ScalarJet2& a, const ScalarJet2& b) {
    ScalarJet2 r(a.params());
    r.v = a.v - b.v;
    for (std::size_t i = 0; i < a.g.size(); ++i) r.g[i] = a.g[i] - b.g[i];
    for (std::size_t i = 0; i < a.h.size(); ++i) r.h[i] = a.h[i] - b.h[i];
    return r;
}

inline ScalarJet2 neg(const ScalarJet2& a) {
    ScalarJet2 r(a.params());
    r.v = -a.v;
    for (std::size_t i = 0; i < a.g.size(); ++i) r.g[i] = -a.g[i];
    for (std::size_t i = 0; i < a.h.size(); ++i) r.h[i] = -a.h[i];
    return r;
}

inline ScalarJet2 mul(const ScalarJet2& a, const ScalarJet2& b) {
    const std::size_t n = a.params();
    ScalarJet2 r(n);
    r.v = a.v * b.v;
    for (std::size_t i = 0; i < n; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j, ++k)
            r.h[k] = a.v * b.h[k] + b.v * a.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    return r;
}

// composition with a univariate function given d0 = f(v), d1 = f'(v), d2 = f''(v)
inline ScalarJet2 chain(const ScalarJet2& a, const Interval& d0, const Interval& d1, const Interval& d2) {
    const std::size_t n = a.params();
    ScalarJet2 r(n);
    r.v = d0;
    for (std::size_t i = 0; i < n; ++i) r.g[i] = d1 * a.g[i];
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j, ++k) r.h[k] = d1 * a.h[k] + d2 * a.g[i] * a.g[j];
    return r;
}

inline ScalarJet2 sqr_jet(const ScalarJet2& a) {
    return chain(a, sqr(a.v), 2.0 * a.v, Interval(2.0));
}
inline ScalarJet2 sqrt_jet(const ScalarJet2& a) {
    Interval s = sqrt(a.v);
    Interval d1 = 0.5 / s;
    Interval d2 = -0.25 / (a.v * s);
    return chain(a, s, d1, d2);
}
inline ScalarJet2 sin_jet(const ScalarJet2& a) {
    Interval s = sin(a.v), c = cos(a.v);
    return chain(a, s, c, -s);
}
inline ScalarJet2 cos_jet(const ScalarJet2& a) {
    Interval s = sin(a.v), c = cos(a.v);
    return chain(a, c, -s, -c);
}
inline ScalarJet2 exp_jet(const ScalarJet2& a) {
    Interval e = exp(a.v);
    return chain(a, e, e, e);
}
inline ScalarJet2 div(const ScalarJet2& a, const ScalarJet2& b) {
    Interval inv = 1.0 / b.v;
    ScalarJet2 rb = chain(b, inv, -sqr(inv), 2.0 * inv * sqr(inv));
    return mul(a, rb);
}

}  // namespace jetops

// vector-valued jet: m outputs over n parameters
struct Jet2 {
    IVector value;              // m
    IMatrix jacobian;           // m x n
    std::vector<IMatrix> hess;  // m matrices, each n x n symmetric

    Jet2() = default;
    Jet2(std::size_t m, std::size_t n) : value(m), jacobian(m, n), hess(m, IMatrix(n, n)) {}
    std::size_t outputs() const { return value.size(); }
    std::size_t params() const { return jacobian.cols(); }
};

// identity seed jet over a box
inline Jet2 identity_jet(const IVector& x) {
    Jet2 j(x.size(), x.size());
    j.value = x;
    for (std::size_t i = 0; i < x.size(); ++i) j.jacobian(i, i) = Interval(1.0);
    return j;
}

// evaluate the jet of f over a box with a caller-supplied seed: the seed
// describes the box point as a function of `seed.params()` parameters
inline Jet2 eval_jet2_seeded(const ExprDag& f, const Jet2& seed) {
    if (seed.outputs() != f.arity()) throw DimensionMismatch();
    const std::size_t n = seed.params();
    std::vector<ScalarJet2> val;
    val.reserve(f.nodes().size());
    using namespace jetops;
    for (const ExprNode& node : f.nodes()) {
        switch (node.op) {
            case Op::var: {
                ScalarJet2 j(n);
                j.v = seed.value[node.var];
                for (std::size_t i = 0; i < n; ++i) j.g[i] = seed.jacobian(node.var, i);
                std::size_t k = 0;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t jj = 0; jj <= i; ++jj, ++k) j.h[k] = seed.hess[node.var](i, jj);
                val.push_back(std::move(j));
                break;
            }
            case Op::constant: val.push_back(constant(node.value, n)); break;
            case Op::add: val.push_back(add(val[node.a], val[node.b])); break;
            case Op::sub: val.push_back(sub(val[node.a], val[node.b])); break;
            case Op::mul: val.push_back(mul(val[node.a], val[node.b])); break;
            case Op::div: val.push_back(jetops::div(val[node.a], val[node.b])); break;
            case Op::neg: val.push_back(neg(val[node.a])); break;
            case Op::sqr: val.push_back(sqr_jet(val[node.a])); break;
            case Op::sqrt_: val.push_back(sqrt_jet(val[node.a])); break;
            case Op::sin_: val.push_back(sin_jet(val[node.a])); break;
            case Op::cos_: val.push_back(cos_jet(val[node.a])); break;
            case Op::exp_: val.push_back(exp_jet(val[node.a])); break;
        }
    }
    Jet2 out(f.output_count(), n);
    for (std::size_t o = 0; o < f.output_count(); ++o) {
        const ScalarJet2& j = val[f.outputs()[o]];
        out.value[o] = j.v;
        for (std::size_t i = 0; i < n; ++i) out.jacobian(o, i) = j.g[i];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t jj = 0; jj < n; ++jj) out.hess[o](i, jj) = j.hess(i, jj);
    }
    return out;
}

// jet of f over a box (identity parameterization)
inline Jet2 eval_jet2(const ExprDag& f, const IVector& box) {
    return eval_jet2_seeded(f, identity_jet(box));
}
inline Jet2 eval_jet2(const ExprDag& f, const Box& box) { return eval_jet2(f, box.v); }

// second-order chain rule: outer evaluated at (a box containing) inner.value
inline Jet2 compose_jet2(const Jet2& outer, const Jet2& inner) {
    if (outer.params() != inner.outputs()) throw DimensionMismatch();
    const std::size_t m = outer.outputs(), n = inner.params();
    Jet2 out(m, n);
    out.value = outer.value;
    out.jacobian = outer.jacobian * inner.jacobian;
    IMatrix jit = inner.jacobian.transpose();
    for (std::size_t l = 0; l < m; ++l) {
        IMatrix h = jit * outer.hess[l] * inner.jacobian;
        for (std::size_t j = 0; j < outer.params(); ++j) {
            const Interval w = outer.jacobian(l, j);
            if (w.lo == 0 && w.hi == 0) continue;
            h = h + w * inner.hess[j];
        }
        // symmetrize: exact by construction, intersect guards rounding skew
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < i; ++j) {
                Interval sym = h(i, j).intersect(h(j, i));
                h(i, j) = sym;
                h(j, i) = sym;
            }
        out.hess[l] = h;
    }
    return out;
}

}  // namespace vmel
